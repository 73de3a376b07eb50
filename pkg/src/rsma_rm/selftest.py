"""Fast invariant checks runnable from an installed package (``rsma-rm selftest``)."""

import numpy as np

from .channel import beam_gain
from .conic import ConicProgram, SolveOptions, solve
from .conic import _kernels as py_kernels
from .conic import kernels
from .harness import trial_input
from .optimizer import linearize_common, quad_over_linear, run_sca, soc_log_surrogate
from .perturbation import PerturbationModel, build_stats
from .rates import Precoder, common_rate, private_rate
from .scenario import default_scenario

__all__ = ["run_selftest", "CHECKS"]


def _stats_psd():
    rng = np.random.default_rng(1)
    for _ in range(20):
        h = rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5))
        st = build_stats(h, PerturbationModel.from_degrees(10, 5))
        for q in np.concatenate([st.q_fb, st.q_both]):
            w = np.linalg.eigvalsh(q)
            assert w[0] >= -1e-10 * np.trace(q).real, w


def _perfect_csi_rates():
    rng = np.random.default_rng(2)
    h = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
    p = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    pre = Precoder(p, np.zeros(3))
    st = build_stats(h, PerturbationModel())
    g = np.abs(h.conj().T @ p) ** 2
    priv = g[:, 1:].sum(axis=1)
    np.testing.assert_allclose(common_rate(pre, st, 1.0), np.log2(1 + g[:, 0] / (priv + 1)), rtol=1e-9)
    own = np.diag(g[:, 1:])
    np.testing.assert_allclose(private_rate(pre, st, 1.0), np.log2(1 + own / (priv - own + 1)), rtol=1e-9)


def _surrogates():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    Q = a @ a.conj().T
    p0 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    lin = linearize_common(p0, 0.7, Q)
    assert abs(lin(p0, 0.7) - quad_over_linear(p0, 0.7, Q)) < 1e-9
    for _ in range(200):
        p = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        x = rng.uniform(0.01, 5)
        assert lin(p, x) <= quad_over_linear(p, x, Q) + 1e-9
    v, u = soc_log_surrogate(1.0)
    assert abs(v - (np.log(2) + 0.5)) < 1e-12 and abs(u - 0.5) < 1e-12


def _beam_gain():
    assert abs(beam_gain(0.0, 0.03, 7.0) - 7.0) < 1e-12
    assert abs(beam_gain(0.03, 0.03, 1.0) - 0.5) < 1e-5


def _ipm_toy():
    prog = ConicProgram()
    prog.add_variable("x", 2)
    prog.set_objective({"x": np.eye(2)}, {"x": [-4.0, 0.0]}, 4.0)
    prog.add_soc({"x": np.eye(2)}, [0.0, 0.0], {}, 1.0)
    sol = solve(prog, SolveOptions())
    assert sol.ok, sol.status
    np.testing.assert_allclose(sol.values["x"], [1.0, 0.0], atol=1e-6)


def _kernels_agree():
    if kernels.IMPLEMENTATION != "cython":
        return
    rng = np.random.default_rng(4)
    l, qsizes = 3, np.array([3, 4])
    qstarts = np.array([3, 6])
    s = np.concatenate([rng.uniform(0.5, 2, 3), [3.0, 1.0, 0.5], [4.0, 1.0, -1.0, 0.5]])
    z = np.concatenate([rng.uniform(0.5, 2, 3), [2.0, -0.3, 0.4], [3.0, 0.2, 1.0, -0.5]])
    a = kernels.nt_scaling(s, z, l, qstarts, qsizes)
    b = py_kernels.nt_scaling(s, z, l, qstarts, qsizes)
    for u, v in zip(a, b):
        np.testing.assert_allclose(u, v, rtol=1e-12, atol=1e-14)


def _sca_monotone():
    sc = default_scenario()
    inp = trial_input(sc, 0)
    sol = run_sca(inp.channels, inp.stats, inp.scenario)
    assert sol.ok, sol.status
    assert np.all(np.diff(sol.objective_trace) <= 1e-7)
    assert np.all(sol.precoder.feed_powers <= sc.physics.per_feed_power_w + 1e-6)
    assert sol.rates.common_sum_ok


CHECKS = {
    "perturbation matrices are PSD": _stats_psd,
    "perfect-CSI rates reduce to the classic formulas": _perfect_csi_rates,
    "tangent surrogates under-estimate": _surrogates,
    "beam gain limits": _beam_gain,
    "cone solver on a projection toy": _ipm_toy,
    "compiled and numpy kernels agree": _kernels_agree,
    "SCA trace is monotone and feasible": _sca_monotone,
}


def run_selftest(verbose=False):
    failures = []
    for name, fn in CHECKS.items():
        try:
            fn()
            ok = True
        except AssertionError as exc:
            ok = False
            failures.append((name, exc))
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return failures
