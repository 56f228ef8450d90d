import math

import numpy as np
import pytest

from microswarm.experiments import (
    CAPTURE_COLUMNS,
    MSD_COLUMNS,
    ConfigError,
    ExperimentConfig,
    cell_run_index,
    run_3d,
    run_distance_sweep,
    run_experiment,
    run_msd_experiment,
    run_omega_sweep,
)
from microswarm.models import Model


def small(**kw):
    base = dict(experiment="distance_sweep", models=("ABP", "RTP", "CHIRAL_ABP"), n_particles=100,
                n_runs=5, distances=(0.0, 7.78, 1000.0), master_seed=3)
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.fixture(scope="module")
def sweep():
    return run_distance_sweep(small())


def test_release_inside_target_always_captured(sweep):
    rows = sweep.select(l_um=0.0)
    assert rows and all(r["mean_efficiency"] == 1.0 and r["std_efficiency"] == 0.0 for r in rows)


def test_unreachable_target(sweep):
    rows = sweep.select(l_um=1000.0, time_s=5.0)
    assert len(rows) == 3 and all(r["mean_efficiency"] == 0.0 for r in rows)


def test_table_is_complete(sweep):
    assert sweep.columns == CAPTURE_COLUMNS
    keys = [(r[2], r[3], r[4], r[5]) for r in sweep.rows]
    assert len(keys) == len(set(keys)) == 3 * 3 * 4
    for m in ("ABP", "RTP", "CHIRAL_ABP"):
        for l in (0.0, 7.78, 1000.0):
            assert {r["time_s"] for r in sweep.select(model=m, l_um=l)} == {0.5, 0.78, 2.0, 5.0}


def test_rows_sane(sweep):
    for r in sweep.select():
        assert 0.0 <= r["mean_efficiency"] <= 1.0
        assert math.isfinite(r["std_efficiency"]) and 0.0 <= r["std_efficiency"] <= 0.5
        assert r["n_particles"] == 100 and r["n_runs"] == 5 and r["dimension"] == 2
    assert {r["omega_rad_s"] for r in sweep.select(model="ABP")} == {0.0}
    assert {r["omega_rad_s"] for r in sweep.select(model="CHIRAL_ABP")} == {1.0}


def test_efficiency_grows_with_time(sweep):
    for m in ("ABP", "RTP", "CHIRAL_ABP"):
        effs = [r["mean_efficiency"] for r in sweep.select(model=m, l_um=7.78)]
        assert effs == sorted(effs)


def test_reproducible_and_thread_invariant(sweep):
    assert run_distance_sweep(small(), threads=1).rows == sweep.rows
    assert run_distance_sweep(small(), threads=4).rows == sweep.rows


def test_seed_changes_output(sweep):
    assert run_distance_sweep(small(master_seed=4)).rows != sweep.rows


def test_cells_are_independent_of_grid(sweep):
    narrow = run_distance_sweep(small(models=("RTP",), distances=(7.78,)))
    assert narrow.rows == [tuple(r.values()) for r in sweep.select(model="RTP", l_um=7.78)]


def test_cell_run_index_layout():
    a = cell_run_index(2, Model.ABP, 7.78, None, 3)
    assert a & 0xFFFFFFFF == 3
    assert a >> 32 == cell_run_index(2, Model.ABP, 7.78, None, 9) >> 32
    assert a != cell_run_index(3, Model.ABP, 7.78, None, 3)
    assert a != cell_run_index(2, Model.RTP, 7.78, None, 3)
    assert cell_run_index(2, Model.CHIRAL_ABP, 7.78, 1.0, 3) != cell_run_index(2, Model.CHIRAL_ABP, 7.78, 2.0, 3)


def test_omega_sweep_grid():
    cfg = small(experiment="omega_sweep", models=("CHIRAL_ABP",), distances=(7.78,), omegas=(0.0, 1.0, 100.0))
    tab = run_omega_sweep(cfg)
    assert {r["omega_rad_s"] for r in tab.select()} == {0.0, 1.0, 100.0}
    assert len(tab.rows) == 3 * 4


def test_zero_omega_matches_abp():
    cfg = small(experiment="omega_sweep", models=("CHIRAL_ABP",), distances=(7.78,), omegas=(0.0,),
                n_particles=1000, n_runs=20, eval_times=(5.0,))
    chiral = run_omega_sweep(cfg).select()[0]
    abp = run_distance_sweep(small(models=("ABP",), distances=(7.78,), n_particles=1000, n_runs=20,
                                   eval_times=(5.0,))).select()[0]
    se = math.hypot(chiral["std_efficiency"], abp["std_efficiency"]) / math.sqrt(20)
    assert abs(chiral["mean_efficiency"] - abp["mean_efficiency"]) < 2 * se


def test_fast_rotation_suppresses_capture():
    cfg = small(experiment="omega_sweep", models=("CHIRAL_ABP",), distances=(7.78,), omegas=(1.0, 100.0),
                n_particles=1000, n_runs=10, eval_times=(5.0,))
    tab = run_omega_sweep(cfg)
    assert tab.select(omega_rad_s=100.0)[0]["mean_efficiency"] < tab.select(omega_rad_s=1.0)[0]["mean_efficiency"]


def test_3d_sweep():
    cfg = small(experiment="distance_sweep_3d", dimension=3, distances=(0.0, 7.78), n_runs=3)
    tab = run_3d(cfg, compare_2d=True)
    assert all(r["dimension"] == 3 for r in tab.select())
    assert all(r["mean_efficiency"] == 1.0 for r in tab.select(l_um=0.0))
    obs = tab.observations
    assert isinstance(obs["3d_le_2d"], bool)
    assert obs["3d_le_2d"] == (len(obs["3d_gt_2d_cells"]) == 0)


def test_3d_requires_dimension_3():
    with pytest.raises(ConfigError, match="dimension"):
        ExperimentConfig("distance_sweep_3d", ("ABP",), dimension=2)
    with pytest.raises(ConfigError):
        run_3d(small())


def test_msd_table():
    cfg = small(experiment="msd", models=("PBP", "ABP", "RTP", "CHIRAL_ABP"), n_particles=500, n_runs=4,
                eval_times=(0.5, 5.0))
    tab = run_msd_experiment(cfg)
    assert tab.columns == MSD_COLUMNS and len(tab.rows) == 8
    pbp = tab.select(model="PBP", time_s=5.0)[0]
    assert pbp["closed_form_msd_um2"] == pytest.approx(4 * 0.4285340 * 5, rel=1e-6)
    assert abs(pbp["empirical_msd_um2"] - pbp["closed_form_msd_um2"]) < 3 * pbp["stderr_um2"]
    abp, rtp = tab.select(model="ABP", time_s=5.0)[0], tab.select(model="RTP", time_s=5.0)[0]
    assert abs(abp["empirical_msd_um2"] - rtp["empirical_msd_um2"]) < 3 * math.hypot(abp["stderr_um2"], rtp["stderr_um2"])
    chiral = tab.select(model="CHIRAL_ABP", time_s=5.0)[0]
    assert chiral["empirical_msd_um2"] + 3 * math.hypot(chiral["stderr_um2"], abp["stderr_um2"]) < abp["empirical_msd_um2"]
    assert run_msd_experiment(cfg, threads=3).rows == tab.rows


def test_msd_pooled_stderr_matches_direct():
    # Chan-merged moments equal the one-shot estimate on the pooled sample.
    from microswarm.dynamics import ensemble_keys, simulate_ensemble
    cfg = small(experiment="msd", models=("ABP",), n_particles=50, n_runs=3, eval_times=(1.0, 5.0))
    row = run_msd_experiment(cfg).select(time_s=5.0)[0]
    sq = []
    for r in range(3):
        keys = ensemble_keys(3, cell_run_index(2, Model.ABP, None, None, r), 50)
        res = simulate_ensemble(cfg.step_config(Model.ABP), keys, 5.0, record_steps=[500])
        sq.append(np.sum(res.positions[:, 0] ** 2, axis=1))
    sq = np.concatenate(sq)
    assert row["empirical_msd_um2"] == pytest.approx(sq.mean(), rel=1e-12)
    assert row["stderr_um2"] == pytest.approx(sq.std(ddof=1) / math.sqrt(sq.size), rel=1e-10)


def test_msd_3d_closed_form_column():
    cfg = small(experiment="msd", dimension=3, models=("PBP",), n_particles=10, n_runs=1, eval_times=(5.0,))
    row = run_experiment(cfg).select()[0]
    assert row["closed_form_msd_um2"] == pytest.approx(6 * 0.4285340 * 5, rel=1e-6)


@pytest.mark.parametrize("kw, key", [
    (dict(n_particles=0), "n_particles"),
    (dict(n_runs=0), "n_runs"),
    (dict(dt=0.0), "dt"),
    (dict(distances=(-1.0,)), "distances"),
    (dict(eval_times=(0.555,)), "eval_times"),
    (dict(eval_times=(9.0,)), "eval_times"),
    (dict(record_every=0.015), "record_every"),
    (dict(models=("XYZ",)), "models"),
    (dict(models=("ABP", "ABP")), "models"),
    (dict(experiment="nope"), "experiment"),
    (dict(experiment="omega_sweep", models=("ABP",)), "models"),
])
def test_config_rejections(kw, key):
    with pytest.raises(ConfigError, match=key):
        small(**kw)


def test_sample_grid():
    cfg = small(experiment="msd", eval_times=None, record_every=0.5)
    assert cfg.sample_times() == tuple(k * 0.01 for k in range(0, 501, 50))
    assert list(cfg.sample_steps()) == list(range(0, 501, 50))
