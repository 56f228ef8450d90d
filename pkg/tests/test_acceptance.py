"""End-to-end acceptance checks at full scale.

Every check records a one-line PASS/FAIL verdict that is printed in the
terminal summary under "acceptance criteria". Runtime is several minutes on
one core (the 2D and 3D sweeps dominate).
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from microswarm.analytics import PhysicalParams, derive_coefficients, msd_closed_form
from microswarm.experiments import run_3d, run_distance_sweep, run_msd_experiment, run_omega_sweep
from microswarm.io import config_from_mapping, run

from conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.slow

RUNS = 100
L_MID = 7.78
T_END = 5.0


def verdict(n, ok, detail):
    ACCEPTANCE_LINES.append(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def se(row):
    return row["std_efficiency"] / math.sqrt(row["n_runs"])


def se_diff(a, b):
    return math.hypot(se(a), se(b))


def z_gap(a, b):
    """(a - b) in units of the standard error of the difference; 0 when both are exact."""
    diff = a["mean_efficiency"] - b["mean_efficiency"]
    s = se_diff(a, b)
    return diff / s if s > 0 else (0.0 if diff == 0 else math.copysign(math.inf, diff))


def default_cfg(**kw):
    raw = {"experiment": "distance_sweep", "models": "ABP, RTP, CHIRAL_ABP"}
    raw.update(kw)
    return config_from_mapping(raw)


def msd_cfg(models, **kw):
    raw = {"experiment": "msd", "models": models, "n_particles": 1000, "n_runs": 10, "record_every": 0.05}
    raw.update(kw)
    return config_from_mapping(raw)


@pytest.fixture(scope="module")
def sweep2d():
    return run_distance_sweep(default_cfg())


@pytest.fixture(scope="module")
def msd2d():
    return run_msd_experiment(msd_cfg("PBP, ABP, RTP, CHIRAL_ABP"))


def final(table, model, l):
    (row,) = table.select(model=model, l_um=l, time_s=T_END)
    return row


def msd_within(table, model, k):
    rows = [r for r in table.select(model=model) if r["time_s"] >= 0.05 - 1e-12]
    z = [abs(r["empirical_msd_um2"] - r["closed_form_msd_um2"]) / r["stderr_um2"] for r in rows]
    return len(rows), max(z)


def test_criterion_1_coefficient_anchors():
    c = derive_coefficients(PhysicalParams(0.5, 293.0, 1.0016e-3, 10.0))
    err_t = abs(c.persistence_time / 0.778 - 1)
    err_l = abs(c.persistence_length / 7.778 - 1)
    verdict(1, err_t < 1.5e-3 and err_l < 1.5e-3,
            f"tau_R={c.persistence_time:.5f} s ({err_t:.2%}), P_l={c.persistence_length:.5f} um ({err_l:.2%})")


def test_criterion_2_msd_oracles(msd2d):
    parts, ok = [], True
    for model in ("PBP", "ABP", "RTP", "CHIRAL_ABP"):
        n, zmax = msd_within(msd2d, model, 3)
        assert n == 100
        ok &= zmax < 3
        parts.append(f"{model} max|z|={zmax:.2f}")
    verdict(2, ok, "; ".join(parts) + " over 100 times, 1e4 trajectories")


def test_criterion_3_rtp_abp_equivalence(msd2d, sweep2d):
    worst_msd = 0.0
    for a, r in zip(msd2d.select(model="ABP"), msd2d.select(model="RTP")):
        if a["time_s"] < 0.05 - 1e-12:
            continue
        worst_msd = max(worst_msd, abs(a["empirical_msd_um2"] - r["empirical_msd_um2"])
                        / math.hypot(a["stderr_um2"], r["stderr_um2"]))
    bad, worst_cap, worst_cell = 0, 0.0, None
    cells = sweep2d.select(model="ABP")
    for a in cells:
        (r,) = sweep2d.select(model="RTP", l_um=a["l_um"], time_s=a["time_s"])
        diff = abs(a["mean_efficiency"] - r["mean_efficiency"])
        lim = 2 * se_diff(a, r)
        if diff > lim:
            bad += 1
        z = diff / lim * 2 if lim > 0 else 0.0
        if z > worst_cap:
            worst_cap, worst_cell = z, (a["l_um"], a["time_s"], a["mean_efficiency"], r["mean_efficiency"])
    ok = worst_msd <= 2 and bad == 0
    verdict(3, ok, f"MSD max|z|={worst_msd:.2f}; capture cells beyond 2SE: {bad}/{len(cells)}, "
                   f"worst z={worst_cap:.1f} at l={worst_cell[0]}, t={worst_cell[1]} "
                   f"(ABP {worst_cell[2]:.4f} vs RTP {worst_cell[3]:.4f})")


def test_criterion_4_capture_ordering(sweep2d):
    ch, abp, rtp = (final(sweep2d, m, L_MID) for m in ("CHIRAL_ABP", "ABP", "RTP"))
    gap_a, gap_r = z_gap(ch, abp), z_gap(ch, rtp)
    distances = sorted({r["l_um"] for r in sweep2d.select()})
    far = max(l for l in distances
              if all(final(sweep2d, m, l)["mean_efficiency"] > 0 for m in ("CHIRAL_ABP", "ABP", "RTP")))
    fa, fc = final(sweep2d, "ABP", far), final(sweep2d, "CHIRAL_ABP", far)
    z_far = abs(z_gap(fa, fc))
    ok = gap_a > 2 and gap_r > 2 and z_far <= 2
    verdict(4, ok, f"l={L_MID}: chiral {ch['mean_efficiency']:.4f} vs ABP {abp['mean_efficiency']:.4f} "
                   f"(z={gap_a:.1f}) / RTP {rtp['mean_efficiency']:.4f} (z={gap_r:.1f}); "
                   f"l={far}: ABP {fa['mean_efficiency']:.4f} vs chiral {fc['mean_efficiency']:.4f} (|z|={z_far:.1f})")


def test_criterion_5_chiral_msd_suppression(msd2d):
    (c,) = msd2d.select(model="CHIRAL_ABP", time_s=T_END)
    (a,) = msd2d.select(model="ABP", time_s=T_END)
    z = (a["empirical_msd_um2"] - c["empirical_msd_um2"]) / math.hypot(a["stderr_um2"], c["stderr_um2"])
    verdict(5, z > 3, f"MSD(5 s) chiral {c['empirical_msd_um2']:.1f} vs ABP {a['empirical_msd_um2']:.1f} um^2, z={z:.1f}")


def test_criterion_6_interior_omega_optimum():
    cfg = default_cfg(experiment="omega_sweep", models="CHIRAL_ABP")
    tab = run_omega_sweep(cfg)
    tau = cfg.coefficients.persistence_time
    omegas = sorted(cfg.omegas)
    assert omegas[0] == 0.0
    parts, ok = [], True
    for t in cfg.sample_times():
        rows = {r["omega_rad_s"]: r for r in tab.select(time_s=t)}
        lo, hi = rows[omegas[0]], rows[omegas[-1]]
        best = max(omegas[1:-1], key=lambda w: rows[w]["mean_efficiency"])
        b = rows[best]
        z = min(z_gap(b, lo), z_gap(b, hi))
        found = any(
            rows[w]["mean_efficiency"] - lo["mean_efficiency"] > 2 * se_diff(rows[w], lo)
            and rows[w]["mean_efficiency"] - hi["mean_efficiency"] > 2 * se_diff(rows[w], hi)
            for w in omegas[1:-1]
        )
        if t >= tau:
            ok &= found
        parts.append(f"t={t:g}: w*={best:g} ({b['mean_efficiency']:.3f}, z={z:.1f}){'' if t >= tau else ' [not required]'}")
    verdict(6, ok, "; ".join(parts))


def test_criterion_7_3d_ordering():
    tab = run_3d(default_cfg(experiment="distance_sweep_3d"))
    distances = sorted({r["l_um"] for r in tab.select()})
    parts, hits = [], []
    for l in distances[1:-1]:
        ch, abp, rtp = (final(tab, m, l) for m in ("CHIRAL_ABP", "ABP", "RTP"))
        za, zr = z_gap(ch, abp), z_gap(ch, rtp)
        parts.append(f"l={l:g}: z_ABP={za:.1f}, z_RTP={zr:.1f}")
        if za > 2 and zr > 2:
            hits.append(l)
    verdict(7, bool(hits), f"ordering holds at l={hits}; " + "; ".join(parts))


def test_criterion_8_determinism(tmp_path):
    base = {"models": "ABP, RTP, CHIRAL_ABP", "n_particles": 200, "n_runs": 4, "master_seed": 99}
    kinds = {
        "distance_sweep": {"distances": "0, 4, 7.78, 20"},
        "omega_sweep": {"models": "CHIRAL_ABP", "omegas": "0, 1, 4"},
        "distance_sweep_3d": {"distances": "4, 7.78"},
        "msd": {"models": "PBP, ABP, RTP, CHIRAL_ABP", "record_every": 0.1},
    }
    identical = []
    for kind, extra in kinds.items():
        cfg = config_from_mapping({**base, "experiment": kind, **extra})
        outs = []
        for tag, threads in (("a", 1), ("b", 1), ("c", 4)):
            m = run(cfg, tmp_path / kind / tag, threads=threads)
            outs.append(open(m.outputs[0], "rb").read())
        identical.append(outs[0] == outs[1] == outs[2])
    verdict(8, all(identical), f"byte-identical at 1/1/4 threads for {dict(zip(kinds, identical))}")


def test_criterion_9_discretization(sweep2d):
    fine = run_distance_sweep(default_cfg(distances=str(L_MID), dt=0.005))
    parts, ok = [], True
    for m in ("CHIRAL_ABP", "ABP", "RTP"):
        a, b = final(sweep2d, m, L_MID), final(fine, m, L_MID)
        delta = b["mean_efficiency"] - a["mean_efficiency"]
        ok &= abs(delta) < 2 * se(a)
        parts.append(f"{m} {a['mean_efficiency']:.4f}->{b['mean_efficiency']:.4f} ({delta / se(a):+.2f} SE)")
    abp_fine = run_msd_experiment(msd_cfg("ABP", dt=0.005))
    _, zmax = msd_within(abp_fine, "ABP", 3)
    ok &= zmax < 3
    parts.append(f"ABP MSD at dt=0.005 max|z|={zmax:.2f}")
    verdict(9, ok, "; ".join(parts))
