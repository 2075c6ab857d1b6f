import pytest

from windfrt.config import paper_preset
from windfrt.sim import run_scenario


@pytest.fixture(scope="session")
def paper_runs():
    """Full paper scenario pair, shared across the test session (slow)."""
    cfg = paper_preset()
    # verbose so the controller references are recorded (criterion 9)
    scn_on = cfg.build_scenario(statcom_enabled=True, name="paper_with_statcom", verbose=True)
    scn_off = cfg.build_scenario(statcom_enabled=False, name="paper_without_statcom")
    return {
        "config": cfg,
        "on": (scn_on, run_scenario(scn_on)),
        "off": (scn_off, run_scenario(scn_off)),
    }
