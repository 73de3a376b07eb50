"""Dense primal-dual interior-point solver for QPs over second-order cones.

Mehrotra predictor-corrector on the standard form produced by
:meth:`ConicProgram.standard_form`, with Nesterov-Todd scaling and a
normal-equations (Cholesky) Newton step.  Sized for programs with a few
hundred cone rows and under a hundred variables.
"""

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from . import kernels as K

__all__ = ["SolveOptions", "Solution", "solve", "solve_standard_form", "STATUSES", "SOLVED"]

log = logging.getLogger(__name__)

STATUSES = ("optimal", "optimal_inaccurate", "infeasible", "unbounded", "max_iter", "numerical_failure")
SOLVED = ("optimal", "optimal_inaccurate")


@dataclass
class SolveOptions:
    feas_tol: float = 1e-7
    rel_gap_tol: float = 1e-8
    abs_gap_tol: float = 1e-9
    max_iter: int = 100
    equilibrate: bool = True
    backend: str = "ipm"
    # ratio threshold for the infeasibility / unboundedness certificates
    cert_tol: float = 1e-8
    # post-solve check on the stored constraints; looser than feas_tol since a
    # quadratic constraint is checked in its own units, not as the cone solved
    recheck_tol: float = 1e-6
    # fallback tolerances for the best iterate when the IPM stalls or breaks
    # down near the optimum
    inacc_feas_tol: float = 1e-6
    inacc_gap_tol: float = 1e-6


@dataclass
class Solution:
    status: str
    x: np.ndarray
    values: dict = field(default_factory=dict)
    objective: float = np.nan
    iterations: int = 0
    primal_residual: float = np.nan
    dual_residual: float = np.nan
    gap: float = np.nan
    s: np.ndarray = None
    z: np.ndarray = None
    backend: str = "ipm"
    solve_time: float = 0.0
    message: str = ""

    @property
    def ok(self):
        return self.status in SOLVED


def _cone_layout(l, qsizes):
    qsizes = np.asarray(qsizes, dtype=np.intp)
    qstarts = l + np.concatenate([[0], np.cumsum(qsizes)[:-1]]).astype(np.intp) if len(qsizes) else np.zeros(0, np.intp)
    return qstarts, qsizes


def _block_norms(r, l, qstarts, qsizes):
    """Per-constraint magnitudes: |r_i| on orthant rows, block 2-norms on cones."""
    out = [np.abs(r[:l])]
    if len(qsizes):
        out.append(np.sqrt(np.add.reduceat(r[l:] ** 2, qstarts - l)))
    return np.concatenate(out)


def _equilibrate(G, h, l, qstarts, qsizes):
    norms = np.sqrt(np.sum(G * G, axis=1) + h * h)
    rho = np.ones(len(h))
    with np.errstate(divide="ignore"):
        inv = np.where(norms > 0, 1.0 / norms, 1.0)
    rho[:l] = inv[:l]
    for st, sz in zip(qstarts, qsizes):
        blk = norms[st:st + sz].max()
        rho[st:st + sz] = 1.0 / blk if blk > 0 else 1.0
    return rho


class _Normal:
    """Cholesky of ``P + Gt^T Gt`` with a regularized fallback."""

    def __init__(self, H):
        self.H = H
        self.reg = 0.0
        scale = max(1.0, float(np.max(np.abs(np.diag(H)), initial=0.0)))
        for reg in (0.0, 1e-13, 1e-11, 1e-9, 1e-7):
            try:
                self.fac = cho_factor(H + reg * scale * np.eye(H.shape[0]), check_finite=False)
                self.reg = reg * scale
                return
            except LinAlgError:
                continue
        raise LinAlgError("normal matrix is not positive definite")

    def solve(self, b):
        x = cho_solve(self.fac, b, check_finite=False)
        if self.reg:
            for _ in range(3):
                x = x + cho_solve(self.fac, b - self.H @ x, check_finite=False)
        return x


def solve_standard_form(P, q, G, h, l, qsizes, opts=None):
    """Solve ``min 1/2 x'Px + q'x  s.t.  Gx + s = h, s in K``.

    Returns ``(status, x, s, z, info)``; never raises on numerical trouble.
    """
    opts = opts or SolveOptions()
    P = np.asarray(P, dtype=float)
    q = np.asarray(q, dtype=float)
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    n, m = len(q), len(h)
    qstarts, qsizes = _cone_layout(l, qsizes)
    if l + int(qsizes.sum()) != m or G.shape != (m, n):
        raise ValueError("inconsistent cone dimensions")
    degree = l + len(qsizes)

    rho = _equilibrate(G, h, l, qstarts, qsizes) if opts.equilibrate else np.ones(m)
    Gs = G * rho[:, None]
    hs = h * rho
    hnorm = 1.0 + _block_norms(h, l, qstarts, qsizes)
    qnorm = 1.0 + float(np.max(np.abs(q), initial=0.0))
    info = {"iterations": 0, "pres": np.nan, "dres": np.nan, "gap": np.nan, "pcost": np.nan}
    e = K.identity(l, qstarts, qsizes)

    if degree == 0:
        # unconstrained QP
        try:
            x = np.linalg.lstsq(P, -q, rcond=None)[0]
        except np.linalg.LinAlgError:
            return "numerical_failure", np.zeros(n), np.zeros(0), np.zeros(0), info
        ok = np.linalg.norm(P @ x + q) <= opts.feas_tol * qnorm
        return ("optimal" if ok else "unbounded"), x, np.zeros(0), np.zeros(0), info

    # starting point
    try:
        lin = _Normal(P + Gs.T @ Gs)
    except LinAlgError:
        return "numerical_failure", np.zeros(n), hs / rho, np.zeros(m), info
    x = lin.solve(-q + Gs.T @ hs)
    s = hs - Gs @ x
    z = -s.copy()
    ts = K.shift_distance(s, l, qstarts, qsizes)
    tz = K.shift_distance(z, l, qstarts, qsizes)
    if ts >= -1e-8 * max(1.0, float(np.linalg.norm(s))):
        s = s + (1.0 + ts) * e
    if tz >= -1e-8 * max(1.0, float(np.linalg.norm(z))):
        z = z + (1.0 + tz) * e

    status = "max_iter"
    best, best_gap = None, np.inf
    for it in range(opts.max_iter + 1):
        Px = P @ x
        rx = Px + q + Gs.T @ z
        rz = Gs @ x + s - hs
        gap = float(s @ z)
        pcost = 0.5 * float(x @ Px) + float(q @ x)
        pres = float(np.max(_block_norms(rz / rho, l, qstarts, qsizes) / hnorm))
        dres = float(np.max(np.abs(rx), initial=0.0)) / qnorm
        info.update(iterations=it, pres=pres, dres=dres, gap=gap, pcost=pcost)
        if not (np.isfinite(gap) and np.isfinite(pres) and np.isfinite(dres)):
            status = "numerical_failure"
            break
        relgap = gap / max(1.0, abs(pcost))
        if pres <= opts.inacc_feas_tol and dres <= opts.inacc_feas_tol and relgap < best_gap:
            best, best_gap = (x.copy(), s.copy(), z.copy(), dict(info)), relgap
        if pres <= opts.feas_tol and dres <= opts.feas_tol and (
            gap <= opts.abs_gap_tol or relgap <= opts.rel_gap_tol
        ):
            status = "optimal"
            break

        # certificates, tested on the equilibrated data; only consulted while
        # the matching residual is stuck above tolerance
        hz = float(hs @ z)
        if pres > opts.feas_tol and hz < 0 and np.linalg.norm(Gs.T @ z) <= opts.cert_tol * -hz:
            status = "infeasible"
            break
        qx = float(q @ x)
        if dres > opts.feas_tol and qx < 0:
            xn = float(np.linalg.norm(x))
            if (np.linalg.norm(Gs @ x + s) <= opts.cert_tol * -qx
                    and np.linalg.norm(Px) * xn <= opts.cert_tol * -qx):
                status = "unbounded"
                break
        if it == opts.max_iter:
            break

        try:
            d, beta, wbar, lam = K.nt_scaling(s, z, l, qstarts, qsizes)
            Gt = K.apply_scaling(d, beta, wbar, Gs, l, qstarts, qsizes, inverse=True)
            nrm = _Normal(P + Gt.T @ Gt)
        except (LinAlgError, FloatingPointError, ValueError):
            status = "numerical_failure"
            break

        def kkt(bx, bz, ds):
            rc = K.jordan_div(lam, ds, l, qstarts, qsizes)
            t = rc - K.apply_scaling(d, beta, wbar, bz, l, qstarts, qsizes, inverse=True)
            dx = nrm.solve(bx - Gt.T @ t)
            wdz = Gt @ dx + t
            dz = K.apply_scaling(d, beta, wbar, wdz, l, qstarts, qsizes, inverse=True)
            dsbar = rc - wdz
            dsv = K.apply_scaling(d, beta, wbar, dsbar, l, qstarts, qsizes, inverse=False)
            return dx, dsv, dz, dsbar, wdz

        mu = gap / degree
        lamlam = K.jordan_prod(lam, lam, l, qstarts, qsizes)
        # predictor
        dx_a, ds_a, dz_a, dsbar_a, wdz_a = kkt(-rx, -rz, -lamlam)
        a_aff = min(1.0, K.max_step(s, ds_a, l, qstarts, qsizes),
                    K.max_step(z, dz_a, l, qstarts, qsizes))
        sigma = float(np.clip(((s + a_aff * ds_a) @ (z + a_aff * dz_a)) / gap, 0.0, 1.0)) ** 3
        # corrector
        corr = K.jordan_prod(dsbar_a, wdz_a, l, qstarts, qsizes)
        dx, ds, dz, _, _ = kkt(-rx, -rz, -lamlam - corr + sigma * mu * e)
        step = min(K.max_step(s, ds, l, qstarts, qsizes), K.max_step(z, dz, l, qstarts, qsizes))
        alpha = min(1.0, 0.99 * step)
        if not np.isfinite(alpha) or alpha < 1e-14:
            status = "numerical_failure"
            break
        x = x + alpha * dx
        s = s + alpha * ds
        z = z + alpha * dz

    if status in ("max_iter", "numerical_failure") and best is not None and (
        best_gap <= opts.inacc_gap_tol or best[3]["gap"] <= opts.inacc_gap_tol
    ):
        x, s, z, info = best
        status = "optimal_inaccurate"
    return status, x, s / rho, z * rho, info


def _solve_cvxopt(P, q, G, h, l, qsizes, opts):
    import cvxopt
    from cvxopt import solvers

    solvers.options.update(show_progress=False, feastol=opts.feas_tol, reltol=opts.rel_gap_tol,
                           abstol=opts.abs_gap_tol, maxiters=opts.max_iter)
    dims = {"l": int(l), "q": [int(v) for v in qsizes], "s": []}
    res = solvers.coneqp(cvxopt.matrix(P), cvxopt.matrix(q), cvxopt.matrix(G), cvxopt.matrix(h), dims)
    mapping = {"optimal": "optimal", "primal infeasible": "infeasible", "dual infeasible": "unbounded"}
    status = mapping.get(res["status"], "max_iter" if res["iterations"] >= opts.max_iter else "numerical_failure")
    x = np.array(res["x"]).ravel() if res["x"] is not None else np.full(len(q), np.nan)
    s = np.array(res["s"]).ravel() if res["s"] is not None else None
    z = np.array(res["z"]).ravel() if res["z"] is not None else None
    return status, x, s, z, {"iterations": res["iterations"], "gap": res.get("gap", np.nan)}


def _solve_clarabel(P, q, G, h, l, qsizes, opts):
    import clarabel
    from scipy import sparse

    cones = []
    if l:
        cones.append(clarabel.NonnegativeConeT(int(l)))
    cones += [clarabel.SecondOrderConeT(int(v)) for v in qsizes]
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = opts.max_iter
    settings.tol_feas = opts.feas_tol
    settings.tol_gap_rel = opts.rel_gap_tol
    settings.tol_gap_abs = opts.abs_gap_tol
    solver = clarabel.DefaultSolver(sparse.triu(sparse.csc_matrix(P), format="csc"), q,
                                    sparse.csc_matrix(G), h, cones, settings)
    res = solver.solve()
    name = str(res.status)
    if name.endswith("Solved") and "Almost" not in name:
        status = "optimal"
    elif name.startswith("AlmostSolved"):
        status = "optimal_inaccurate"
    elif "PrimalInfeasible" in name:
        status = "infeasible"
    elif "DualInfeasible" in name:
        status = "unbounded"
    elif "MaxIterations" in name:
        status = "max_iter"
    else:
        status = "numerical_failure"
    return status, np.array(res.x), np.array(res.s), np.array(res.z), {"iterations": res.iterations}


_BACKENDS = {"ipm": solve_standard_form, "cvxopt": _solve_cvxopt, "clarabel": _solve_clarabel}


def solve(program, opts=None):
    """Solve a :class:`ConicProgram`.

    A solved status (``"optimal"`` or ``"optimal_inaccurate"``) is only
    reported when every stored constraint,
    re-evaluated at the returned point, holds within ``opts.recheck_tol``
    (relative); otherwise the status is downgraded to ``numerical_failure``.
    """
    opts = opts or SolveOptions()
    try:
        backend = _BACKENDS[opts.backend]
    except KeyError:
        raise ValueError(f"unknown backend {opts.backend!r}; choose from {sorted(_BACKENDS)}") from None
    P, q, G, h, l, qsizes = program.standard_form()
    t0 = time.perf_counter()
    status, x, s, z, info = backend(P, q, G, h, l, qsizes, opts)
    elapsed = time.perf_counter() - t0
    msg = ""
    if status in SOLVED:
        viol = program.max_violation(x)
        if not viol <= opts.recheck_tol:
            msg = f"constraint re-evaluation failed (max relative violation {viol:.3e})"
            log.debug(msg)
            status = "numerical_failure"
    return Solution(
        status=status,
        x=x,
        values=program.split(x),
        objective=program.objective_value(x) if np.all(np.isfinite(x)) else np.nan,
        iterations=int(info.get("iterations", 0)),
        primal_residual=float(info.get("pres", np.nan)),
        dual_residual=float(info.get("dres", np.nan)),
        gap=float(info.get("gap", np.nan)),
        s=s,
        z=z,
        backend=opts.backend,
        solve_time=elapsed,
        message=msg,
    )
