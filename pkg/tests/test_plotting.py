import pytest

from ppverify.core import initial_config
from ppverify.plotting import plot_times, plot_trajectory
from ppverify.sim import simulate_run


def test_trajectory_png(tmp_path, majority):
    run = simulate_run(majority, initial_config(majority, [4, 3]), 1, record_trace=True)
    path = plot_trajectory(majority, run.trace, str(tmp_path / "t.png"), "majority")
    with open(path, "rb") as fh:
        assert fh.read(4) == b"\x89PNG"


def test_trajectory_rejects_empty_trace(tmp_path, majority):
    with pytest.raises(ValueError):
        plot_trajectory(majority, [], str(tmp_path / "t.png"))


@pytest.mark.parametrize("times", [[], [1.5, 2.0, 2.0, 7.25]])
def test_times_png(tmp_path, times):
    path = plot_times(times, str(tmp_path / "h.png"))
    assert (tmp_path / "h.png").stat().st_size > 0 and path.endswith("h.png")
