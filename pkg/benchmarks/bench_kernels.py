"""Compare the compiled and pure-Python trajectory kernels.

Usage::

    python3 benchmarks/bench_kernels.py [--particles N] [--steps K]

Both backends run the same ensemble; the script also confirms they produce
bit-identical final positions.
"""

import argparse
import time

import numpy as np

from microswarm import _kernels_py
from microswarm.analytics import PhysicalParams, derive_coefficients
from microswarm.capture import Target
from microswarm.dynamics import StepConfig, ensemble_keys, simulate_ensemble
from microswarm.models import Model

try:
    from microswarm import _kernels
except ImportError:
    _kernels = None


def timed(cfg, keys, t_total, dim, backend):
    start = time.perf_counter()
    res = simulate_ensemble(cfg, keys, t_total, dim=dim, target=Target.on_x_axis(1e6, 5.0, dim),
                            record_steps=[], record_positions=False, backend=backend)
    return time.perf_counter() - start, res.final_positions


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--particles", type=int, default=200)
    ap.add_argument("--steps", type=int, default=500)
    args = ap.parse_args()

    params = PhysicalParams()
    coeffs = derive_coefficients(params)
    keys = ensemble_keys(1, 0, args.particles)
    t_total = args.steps * 0.01
    n = args.particles * args.steps
    print(f"{'model':<11}{'dim':>4}{'python ns/step':>16}{'cython ns/step':>16}{'speedup':>9}  identical")
    for dim in (2, 3):
        for model in Model:
            cfg = StepConfig(0.01, model, coeffs, params)
            t_py, pos_py = timed(cfg, keys, t_total, dim, _kernels_py)
            if _kernels is None:
                print(f"{model.name:<11}{dim:>4}{t_py / n * 1e9:>16.0f}{'n/a':>16}")
                continue
            t_cy, pos_cy = timed(cfg, keys, t_total, dim, _kernels)
            same = np.array_equal(pos_py, pos_cy)
            print(f"{model.name:<11}{dim:>4}{t_py / n * 1e9:>16.0f}{t_cy / n * 1e9:>16.1f}"
                  f"{t_py / t_cy:>9.0f}x  {same}")


if __name__ == "__main__":
    main()
