"""Benchmark the numba lattice kernels against the pure-numpy fallback.

Run with::

    python3 benchmarks/bench_lattice_kernels.py

Set ``MATRIXQM_NO_NUMBA=1`` to confirm the fallback path is exercised by the
same entry points (the script below imports both backends directly, so the
environment variable is not needed here).
"""

from __future__ import annotations

import time

import numpy as np

from matrixqm import _kernels_numpy as knp

try:
    from matrixqm import _kernels_numba as knb
except ImportError:  # pragma: no cover - numba not installed
    knb = None


def _random_config(rng, n_t, n_colors, d):
    X = rng.standard_normal((n_t, d, n_colors, n_colors))
    X = X + 1j * rng.standard_normal((n_t, d, n_colors, n_colors))
    X = 0.5 * (X + np.conj(np.swapaxes(X, -1, -2)))
    tr = np.trace(X, axis1=-2, axis2=-1) / n_colors
    X = X - tr[..., None, None] * np.eye(n_colors)
    A = rng.standard_normal((n_t, n_colors, n_colors))
    A = A + 1j * rng.standard_normal((n_t, n_colors, n_colors))
    A = 0.5 * (A - np.conj(np.swapaxes(A, -1, -2)))
    U = np.linalg.matrix_power(np.eye(n_colors, dtype=complex)[None] + 0, 1)
    U = np.stack([np.linalg.qr(np.eye(n_colors) + 0.1 * a)[0] for a in A])
    return np.ascontiguousarray(X), np.ascontiguousarray(U)


def _time(fn, *args, repeats=20):
    fn(*args)  # warm-up (also triggers numba compilation)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def main():
    rng = np.random.default_rng(7)
    cases = [(2, 16), (2, 64), (3, 24), (3, 96)]
    a, m2, lam = 0.05, 1.0, 1.0
    print(f"{'case':>14} {'kernel':>18} {'numpy [ms]':>12} {'numba [ms]':>12} {'speedup':>8}")
    for n_colors, n_t in cases:
        X, U = _random_config(rng, n_t, n_colors, 2)
        for name, args in [
            ("action", (X, U, a, n_colors, m2, lam)),
            ("force_x", (X, U, a, n_colors, m2, lam)),
            ("force_u", (X, U, a, n_colors)),
            ("kinetic_stencil", (X, U, a)),
            ("virial_energy", (X, n_colors, m2, lam)),
        ]:
            fn_np = {
                "action": knp.action,
                "force_x": knp.force_x,
                "force_u": knp.force_u,
                "kinetic_stencil": knp.kinetic_stencil,
                "virial_energy": knp.virial_energy_density,
            }[name]
            t_np = _time(fn_np, *args)
            if knb is None:
                print(f"SU({n_colors}) n_t={n_t:<4} {name:>18} {1e3 * t_np:12.4f} {'n/a':>12}")
                continue
            fn_nb = {
                "action": knb.action,
                "force_x": knb.force_x,
                "force_u": knb.force_u,
                "kinetic_stencil": knb.kinetic_stencil,
                "virial_energy": knb.virial_energy_density,
            }[name]
            t_nb = _time(fn_nb, *args)
            case = f"SU({n_colors}) n_t={n_t}"
            print(f"{case:>14} {name:>18} {1e3 * t_np:12.4f} {1e3 * t_nb:12.4f} {t_np / t_nb:8.2f}")


if __name__ == "__main__":
    main()
