import numpy as np
import pytest

from hxnoise.estimate import EstimationProblem, estimate, with_noise
from hxnoise.metrics import MetricSet
from hxnoise.io import dumps
from hxnoise.prep import SplitSpec, split_frame
from hxnoise.sweep import DEFAULT_GRID, SweepRow, run_seed, run_sweep, select_optimum


def row(sigma, rmse_test, rmse_train=1.0):
    def ms(r):
        return MetricSet(r, r, 0.01, r * r, r, 0.5)

    return SweepRow(sigma, 0, metrics={"train": {"T_co": ms(rmse_train), "T_ho": ms(rmse_train)},
                                       "test": {"T_co": ms(rmse_test), "T_ho": ms(rmse_test)}})


@pytest.fixture(scope="module")
def small(recovery):
    # small problem with a test split for fast sweeps
    train, test = split_frame(recovery.slice(0, 481), SplitSpec(2, 2))
    problem = EstimationProblem(train, n_starts=2, budget=250)
    return problem, {"train": train, "test": test}


def test_default_grid_contains_reference_scale():
    assert 0.35 in DEFAULT_GRID and DEFAULT_GRID[0] == 0.0 and max(DEFAULT_GRID) == 2.5


def test_selection_picks_lowest_test_rmse():
    assert select_optimum([row(0, 0.68), row(0.35, 0.27), row(0.75, 0.30)]) == 0.35


def test_single_row():
    assert select_optimum([row(1.5, 9.0)]) == 1.5


def test_ties_go_to_smaller_sigma():
    assert select_optimum([row(0.75, 0.3), row(0.35, 0.3), row(1.0, 0.4)]) == 0.35


def test_failed_rows_are_skipped():
    failed = SweepRow(0.1, 0, error="boom")
    assert select_optimum([failed, row(0.5, 1.0)]) == 0.5
    with pytest.raises(ValueError):
        select_optimum([failed])


def test_per_sigma_seed_is_label_based():
    assert run_seed(2022, 0.35) == run_seed(2022, 0.35000000001)
    assert run_seed(2022, 0.35) != run_seed(2022, 0.5) != run_seed(2023, 0.5)


def test_zero_row_equals_vanilla_run(small):
    problem, frames = small
    report = run_sweep(problem, [0.0], frames, 2022)
    vanilla = estimate(with_noise(problem, 0.0, run_seed(2022, 0.0)))
    assert dumps(report.row(0.0).result.as_dict()) == dumps(vanilla.as_dict())
    assert report.selected_sigma == 0.0


def test_rows_do_not_depend_on_order(small):
    problem, frames = small
    a = run_sweep(problem, [0.0, 0.35, 1.0], frames, 7)
    b = run_sweep(problem, [1.0, 0.0, 0.35], frames, 7)
    assert [r.sigma for r in b.rows] == [1.0, 0.0, 0.35]
    for s in (0.0, 0.35, 1.0):
        assert dumps(a.row(s).as_dict()) == dumps(b.row(s).as_dict())
    assert a.selected_sigma == b.selected_sigma


def test_repeat_and_jobs_give_identical_payloads(small):
    problem, frames = small
    a = dumps(run_sweep(problem, [0.0, 0.5], frames, 3).as_dict("x"))
    b = dumps(run_sweep(problem, [0.0, 0.5], frames, 3, jobs=2).as_dict("x"))
    assert a == b


def test_evaluation_frames_stay_clean(small):
    problem, frames = small
    before = {k: f.checksum() for k, f in frames.items()}
    report = run_sweep(problem, [0.0, 2.0], frames, 1)
    assert report.eval_checksums == before
    assert {k: f.checksum() for k, f in frames.items()} == before
    # sigma>0 changes the fit, yet metrics are computed against the clean outputs
    noisy = report.row(2.0)
    assert noisy.result.params != report.row(0.0).result.params
    assert set(noisy.metrics) == {"train", "test"}


def test_row_failures_are_recorded(small, monkeypatch):
    import hxnoise.sweep as sw

    problem, frames = small
    real = sw.estimate

    def flaky(p, *a, **k):
        if p.noise.sigma == 0.5:
            raise RuntimeError("solver blew up")
        return real(p, *a, **k)

    monkeypatch.setattr(sw, "estimate", flaky)
    report = run_sweep(problem, [0.0, 0.5], frames, 1)
    assert report.row(0.5).error == "RuntimeError: solver blew up"
    assert report.row(0.5).as_dict()["status"] == "failed"
    monkeypatch.setattr(sw, "estimate", lambda *a, **k: (_ for _ in ()).throw(RuntimeError("x")))
    with pytest.raises(RuntimeError):
        run_sweep(problem, [0.0], frames, 1)


@pytest.mark.parametrize("scales,frames_key", [([], "ok"), ([-0.1], "ok"), ([0.0], "no-train")])
def test_argument_validation(small, scales, frames_key):
    problem, frames = small
    if frames_key == "no-train":
        frames = {"test": frames["test"]}
    with pytest.raises(ValueError):
        run_sweep(problem, scales, frames, 1)


def test_train_only_selection(small):
    problem, frames = small
    report = run_sweep(problem, [0.0, 0.1], {"train": frames["train"]}, 1)
    assert "train-set" in report.selection_rule
    assert np.isfinite(report.row(0.0).score("train"))
