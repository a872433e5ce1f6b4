import pytest

from scerlab.config import AttackModel, ChannelModel, ScenarioConfig


@pytest.fixture
def small_config():
    """A quick scenario: short windows and few symbols."""
    return ScenarioConfig(
        cn0_detector_real_dbhz=40.0,
        cn0_detector_spoof_dbhz=40.0,
        cn0_spoofer_real_dbhz=40.0,
        window_begin_s=50e-6,
        window_end_s=50e-6,
        n_symbols=20,
        attack=AttackModel("estimated_value"),
        channel=ChannelModel("awgn"),
        master_seed=11,
    )
