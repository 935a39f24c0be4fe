
from rotsim.evalbench import EvalReport, SubtaskResult
from rotsim.figures import render_level_profile, render_scatter, render_subtask_bars


def test_scatter_written(tmp_path, rng):
    golds = rng.uniform(0, 5, size=40)
    preds = golds / 5.0 + rng.normal(scale=0.05, size=40)
    out = render_scatter(preds, golds, "demo", str(tmp_path / "scatter.png"))
    assert (tmp_path / "scatter.png").stat().st_size > 0
    assert out.endswith("scatter.png")


def test_subtask_bars_with_and_without_ci(tmp_path):
    plain = EvalReport(
        method="wrd",
        subtasks=[
            SubtaskResult("a", 70.0, 65.0, 100, 0),
            SubtaskResult("b", 60.0, 58.0, 80, 2),
        ],
    )
    render_subtask_bars(plain, str(tmp_path / "plain.png"))
    assert (tmp_path / "plain.png").stat().st_size > 0

    with_ci = EvalReport(
        method="rots",
        subtasks=[
            SubtaskResult("a", 70.0, 65.0, 100, 0, (67.0, 72.5), (62.0, 67.0)),
        ],
    )
    render_subtask_bars(with_ci, str(tmp_path / "ci.png"))
    assert (tmp_path / "ci.png").stat().st_size > 0


def test_level_profile(tmp_path):
    render_level_profile([0.71, 0.74, 0.75, 0.76, 0.75], str(tmp_path / "levels.png"))
    assert (tmp_path / "levels.png").stat().st_size > 0
