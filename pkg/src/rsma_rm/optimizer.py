"""Successive convex approximation for rate-matching precoder design.

Each iteration solves a convex surrogate: the quadratic-over-linear SINR
terms are replaced by their tangent planes and the ``log2(1 + x)`` rate
bounds by second-order cones, both tangent at the current iterate.  The
previous iterate stays feasible, so the surrogate objective never increases.

Precoders are optimized in a real parameter vector ``theta`` with
``x_full = M @ theta``, where ``x_full`` stacks ``[Re p_j; Im p_j]`` for
every column ``j`` of ``P``.  That covers the full RSMA precoder (``M = I``),
SDMA (common column removed) and MMSE-RSMA (fixed private directions with
free real amplitudes).
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .conic import ConicProgram, SolveOptions, solve
from .perturbation import PerturbationStats
from .rates import Precoder, RateReport, private_rate, total_rates, common_sinr, private_sinr

__all__ = [
    "SCHEMES",
    "RmOptions",
    "ScaState",
    "RmSolution",
    "Affine",
    "quad_over_linear",
    "linearize_common",
    "linearize_private",
    "soc_log_surrogate",
    "initialize_state",
    "build_subproblem",
    "run_sca",
    "solve_rm_sdma",
    "mmse_directions",
    "solve_mmse_rsma",
    "solve_rm_4color",
    "four_color_rates",
    "solve_scheme",
]

log = logging.getLogger(__name__)

SCHEMES = ("RM-RSMA", "RM-SDMA", "MMSE-RSMA", "RM-4color")
FLOOR = 1e-10
LN2 = np.log(2.0)


@dataclass(frozen=True)
class RmOptions:
    eta: float = 0.91
    objective_norm: str = "L2"
    max_iter: int = 20
    tol: float = 1e-4
    scheme: str = "RM-RSMA"
    # MMSE-RSMA regularizer; None means K * sigma^2 / P_total
    mmse_reg: float = None
    # 4-color: color index per beam; None means one color per beam
    colors: tuple = None
    # "gap": stop on |D^n - D^(n-1)| <= tol alone; "gap+objective": also
    # require the full surrogate objective to change by <= tol relative,
    # which keeps shrinking power when the demands are already met
    stop_rule: str = "gap"
    solver: SolveOptions = field(default_factory=SolveOptions)

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if self.objective_norm not in ("L1", "L2"):
            raise ValueError(f"objective_norm must be 'L1' or 'L2', got {self.objective_norm!r}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.stop_rule not in ("gap", "gap+objective"):
            raise ValueError(f"stop_rule must be 'gap' or 'gap+objective', got {self.stop_rule!r}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")


@dataclass
class ScaState:
    """Linearization point of one SCA iteration."""

    p_n: np.ndarray
    a_n: np.ndarray
    b_n: np.ndarray
    d_n: float
    iter: int = 0
    c: np.ndarray = None
    alpha: np.ndarray = None

    def __post_init__(self):
        self.a_n = np.maximum(np.asarray(self.a_n, dtype=float), FLOOR)
        self.b_n = np.maximum(np.asarray(self.b_n, dtype=float), FLOOR)


@dataclass
class RmSolution:
    precoder: Precoder
    rates: RateReport
    objective_trace: list
    surrogate_trace: list
    power_used_w: float
    iterations: int
    status: str
    scheme: str = "RM-RSMA"
    alpha: np.ndarray = None
    a: np.ndarray = None
    b: np.ndarray = None

    @property
    def ok(self):
        return self.status in ("converged", "iteration_limit")

    @property
    def offered_lower_bound(self):
        """``c + alpha``, the rates the objective was matched on."""
        return self.precoder.c + self.alpha


# ---------------------------------------------------------------------------
# surrogates


@dataclass(frozen=True)
class Affine:
    """``f(p, x) = Re[w^H p] + beta * x``."""

    w: np.ndarray
    beta: float

    def __call__(self, p, x):
        return float(np.real(np.vdot(self.w, p)) + self.beta * x)


def quad_over_linear(p, x, Q):
    """``p^H Q p / x``."""
    return float(np.real(np.vdot(p, Q @ p))) / x


def _linearize(p_n, x_n, Q):
    if not x_n >= FLOOR:
        raise ValueError(f"linearization point {x_n!r} is below the floor {FLOOR}")
    Qp = Q @ p_n
    qn = float(np.real(np.vdot(p_n, Qp)))
    return Affine(2.0 * Qp / x_n, -qn / x_n**2)


def linearize_common(pc_n, a_n_k, q_fb_k):
    """Tangent plane of ``p_c^H Q p_c / a`` at ``(pc_n, a_n_k)``."""
    return _linearize(np.asarray(pc_n), a_n_k, np.asarray(q_fb_k))


def linearize_private(pk_n, b_n_k, q_fb_k):
    """Tangent plane of ``p_k^H Q p_k / b`` at ``(pk_n, b_n_k)``."""
    return _linearize(np.asarray(pk_n), b_n_k, np.asarray(q_fb_k))


def soc_log_surrogate(x_n):
    """Coefficients ``(v, u)`` of the bound ``ln(1 + x) >= v - u / x``.

    The bound is tight at ``x = x_n``.  A consumer enforces ``t <= v - u/x``
    as ``||[2 sqrt(u), x - v + t]|| <= x + v - t``.
    """
    if not x_n >= FLOOR:
        raise ValueError(f"linearization point {x_n!r} is below the floor {FLOOR}")
    return float(np.log1p(x_n) + x_n / (1.0 + x_n)), float(x_n**2 / (1.0 + x_n))


# ---------------------------------------------------------------------------
# parameterizations


def _emb(v):
    v = np.asarray(v)
    return np.concatenate([v.real, v.imag])


def _emb_mat(Q):
    return np.block([[Q.real, -Q.imag], [Q.imag, Q.real]])


def _psd_root(A, tol=1e-12):
    vals, vecs = np.linalg.eigh(0.5 * (A + A.T))
    tr = float(np.sum(np.abs(vals)))
    keep = vals > tol * max(tr, 1e-300)
    return vecs[:, keep] * np.sqrt(vals[keep])


class _Param:
    """Linear map ``x_full = M theta`` from optimization variables to ``P``."""

    def __init__(self, n_t, k, M, common, kind, directions=None):
        self.n_t, self.k, self.M, self.common, self.kind = n_t, k, M, common, kind
        self.directions = directions
        self.n_theta = M.shape[1]

    @classmethod
    def full(cls, n_t, k):
        return cls(n_t, k, np.eye(2 * n_t * (k + 1)), True, "RM-RSMA")

    @classmethod
    def sdma(cls, n_t, k):
        m = 2 * n_t
        return cls(n_t, k, np.eye(m * (k + 1))[:, m:], False, "RM-SDMA")

    @classmethod
    def mmse(cls, n_t, k, directions):
        m = 2 * n_t
        M = np.zeros((m * (k + 1), m + k))
        M[:m, :m] = np.eye(m)
        for j in range(k):
            M[m * (j + 1):m * (j + 2), m + j] = _emb(directions[:, j])
        return cls(n_t, k, M, True, "MMSE-RSMA", directions)

    def block(self, j):
        m = 2 * self.n_t
        return slice(m * j, m * (j + 1))

    def precoder(self, theta):
        x = self.M @ theta
        m = self.n_t
        cols = [x[2 * m * j:2 * m * j + m] + 1j * x[2 * m * j + m:2 * m * (j + 1)] for j in range(self.k + 1)]
        return np.column_stack(cols)

    def theta(self, P):
        x = np.concatenate([_emb(P[:, j]) for j in range(self.k + 1)])
        if self.kind == "RM-RSMA":
            return x
        return np.linalg.lstsq(self.M, x, rcond=None)[0]


class _Context:
    """Per-run data that does not change across iterations."""

    def __init__(self, stats, r_target, pcap, sigma2, opts, param):
        self.stats, self.param = stats, param
        self.r = np.asarray(r_target, dtype=float)
        self.pcap, self.sigma2, self.opts = float(pcap), float(sigma2), opts
        k, n_t = param.k, param.n_t
        m = 2 * n_t
        self.qfb = [_emb_mat(stats.q_fb[u]) for u in range(k)]
        # square roots of l_c and l_p as maps from theta
        roots_fb = [_psd_root(A) for A in self.qfb]
        roots_both = [_psd_root(_emb_mat(stats.q_both[u])) for u in range(k)]
        M = param.M
        self.root_lc, self.root_lp = [], []
        for u in range(k):
            lc, lp = [], []
            for j in range(k + 1):
                Mj = M[param.block(j), :]
                if roots_both[u].shape[1]:
                    blk = Mj.T @ roots_both[u]
                    lc.append(blk)
                    lp.append(blk)
                if j >= 1 and roots_fb[u].shape[1]:
                    blk = Mj.T @ roots_fb[u]
                    lc.append(blk)
                    if j != u + 1:
                        lp.append(blk)
            self.root_lc.append(_compress(np.hstack(lc) if lc else np.zeros((param.n_theta, 0))))
            self.root_lp.append(_compress(np.hstack(lp) if lp else np.zeros((param.n_theta, 0))))
        # per-feed row selectors
        self.feed_rows = []
        for n in range(n_t):
            rows = [m * j + n for j in range(k + 1)] + [m * j + n_t + n for j in range(k + 1)]
            F = M[rows, :]
            self.feed_rows.append(F[np.any(F != 0, axis=1)])


def _compress(R):
    """Equivalent factor with at most ``R.shape[0]`` columns (``L L^T = R R^T``)."""
    R = R[:, np.any(R != 0, axis=0)]
    if R.shape[1] <= R.shape[0]:
        return R
    return np.linalg.qr(R.T, mode="r").T


# ---------------------------------------------------------------------------
# initialization


def _dominant_direction(h):
    u, _, _ = np.linalg.svd(h, full_matrices=False)
    return u[:, 0]


def _row_scale(P, pcap, frac=0.5):
    rows = np.sum(np.abs(P) ** 2, axis=1)
    if np.any(rows <= 0):
        raise ValueError("initial precoder has an all-zero feed row")
    return P * np.sqrt(frac * pcap / rows)[:, None]


def _initial_precoder(h_hat, pcap, param):
    h = np.asarray(h_hat)
    norms = np.linalg.norm(h, axis=0)
    if np.any(norms == 0):
        raise ValueError("channel has an all-zero column")
    n_t, k = h.shape
    P = np.zeros((n_t, k + 1), dtype=complex)
    if param.common:
        P[:, 0] = _dominant_direction(h)
    if param.kind == "MMSE-RSMA":
        P[:, 1:] = param.directions
        # a single scale keeps private columns on their fixed directions
        rows = np.sum(np.abs(P) ** 2, axis=1)
        return P * np.sqrt(0.5 * pcap / rows.max())
    P[:, 1:] = h / norms
    return _row_scale(P, pcap)


def _state_from_precoder(P, stats, r, sigma2, c=None):
    k = P.shape[1] - 1
    pre = Precoder(P, np.zeros(k))
    a = common_sinr(pre, stats, sigma2)
    b = private_sinr(pre, stats, sigma2)
    alpha = np.log2(1.0 + b)
    c = np.zeros(k) if c is None else c
    d = float(np.sum((r - (c + alpha)) ** 2))
    return ScaState(P, a, b, d, 0, c, alpha)


def initialize_state(channels, stats, scenario, param=None):
    """Feasible starting point with every surrogate tangent at it.

    ``channels`` may be a ``ChannelSet`` or a bare ``h_hat`` array.
    """
    h = getattr(channels, "h_hat", channels)
    n_t, k = np.shape(h)
    param = param or _Param.full(n_t, k)
    pcap = scenario.physics.per_feed_power_w
    P0 = _initial_precoder(h, pcap, param)
    return _state_from_precoder(P0, stats, np.asarray(scenario.r_target, float),
                                scenario.physics.noise_variance)


# ---------------------------------------------------------------------------
# subproblem


def _objective(prog, ctx, k):
    eta = ctx.opts.eta
    M = ctx.param.M
    quad = {"theta": (1.0 - eta) * (M.T @ M)}
    lin, const = {}, 0.0
    rate_vars = ["c", "alpha"] if ctx.param.common else ["alpha"]
    if ctx.opts.objective_norm == "L2":
        eye = eta * np.eye(k)
        for u in rate_vars:
            for v in rate_vars:
                quad[(u, v)] = eye
            lin[u] = -2.0 * eta * ctx.r
        const = eta * float(ctx.r @ ctx.r)
    else:
        lin["t"] = eta * np.ones(k)
    prog.set_objective(quad, lin, const)


def build_subproblem(state, stats, scenario, opts, ctx=None):
    """Convex surrogate around ``state``.

    Variables: ``theta`` (real precoder parameters), ``c`` and ``a`` (only
    with a common stream), ``alpha``, ``b`` and, for the L1 objective, ``t``.
    """
    if ctx is None:
        n_t, k1 = state.p_n.shape
        ctx = _Context(stats, scenario.r_target, scenario.physics.per_feed_power_w,
                       scenario.physics.noise_variance, opts, _Param.full(n_t, k1 - 1))
    param = ctx.param
    k, sigma2 = param.k, ctx.sigma2
    prog = ConicProgram()
    prog.add_variable("theta", param.n_theta)
    if param.common:
        prog.add_variable("c", k)
    prog.add_variable("alpha", k)
    if param.common:
        prog.add_variable("a", k)
    prog.add_variable("b", k)
    if opts.objective_norm == "L1":
        prog.add_variable("t", k)
    _objective(prog, ctx, k)

    scalars = ["c", "alpha", "a", "b"] if param.common else ["alpha", "b"]
    for name in scalars:
        for i in range(k):
            e = np.zeros(k)
            e[i] = -1.0
            prog.add_linear({name: e}, 0.0, name=f"{name}[{i}]>=0")
    if param.kind == "MMSE-RSMA":
        m = 2 * param.n_t
        for i in range(k):
            e = np.zeros(param.n_theta)
            e[m + i] = -1.0
            prog.add_linear({"theta": e}, 0.0, name=f"s[{i}]>=0")
    if opts.objective_norm == "L1":
        rate_vars = ["c", "alpha"] if param.common else ["alpha"]
        for i in range(k):
            e = np.zeros(k)
            e[i] = 1.0
            # t_i >= r_i - (c_i + alpha_i)  and  t_i >= (c_i + alpha_i) - r_i
            prog.add_linear({"t": -e, **{v: -e for v in rate_vars}}, -ctx.r[i], name=f"t[{i}]>=gap")
            prog.add_linear({"t": -e, **{v: e for v in rate_vars}}, ctx.r[i], name=f"t[{i}]>=-gap")

    for n, F in enumerate(ctx.feed_rows):
        prog.add_soc({"theta": F}, np.zeros(F.shape[0]), {}, np.sqrt(ctx.pcap), name=f"feed[{n}]")

    x_n = param.theta(state.p_n)
    xfull_n = param.M @ x_n
    streams = [(0, "a", state.a_n, ctx.root_lc)] if param.common else []
    streams.append((None, "b", state.b_n, ctx.root_lp))
    for col, var, pts, roots in streams:
        for u in range(k):
            j = 0 if col == 0 else u + 1
            blk = param.block(j)
            Qr = ctx.qfb[u]
            xj = xfull_n[blk]
            qn = float(xj @ Qr @ xj)
            xn_k = float(pts[u])
            # constraint divided by nu = f1 at the linearization point
            nu = qn / xn_k if qn > 1e-300 else 1.0
            grad = 2.0 * (param.M[blk, :].T @ (Qr @ xj)) / (xn_k * nu)
            coef_x = -qn / (xn_k**2 * nu)
            e = np.zeros(k)
            e[u] = coef_x
            R = roots[u] / np.sqrt(nu)
            Q = R @ R.T
            prog.add_quad_le_affine({"theta": Q}, {"theta": grad, var: e}, -sigma2 / nu,
                                    name=f"sinr_{var}[{u}]", factor=_pad_factor(prog, R))
    for col, var, pts in ([(0, "a", state.a_n)] if param.common else []) + [(None, "b", state.b_n)]:
        for u in range(k):
            v, uu = soc_log_surrogate(float(pts[u]))
            e = np.zeros(k)
            e[u] = 1.0
            if var == "a":
                tcoef = {"c": LN2 * np.ones(k)}
            else:
                tcoef = {"alpha": LN2 * e}
            # ||[2 sqrt(u), x - v + t]|| <= x + v - t
            row1 = {var: e, **tcoef}
            rhs = {var: e, **{kk: -vv for kk, vv in tcoef.items()}}
            F = np.vstack([np.zeros(prog.n), prog.row(row1)])
            prog.add_soc(F, np.array([2.0 * np.sqrt(uu), -v]), rhs, v, name=f"log_{var}[{u}]")
    return prog


def _pad_factor(prog, R):
    """Lift a ``theta``-space factor to the full variable vector."""
    L = np.zeros((prog.n, R.shape[1]))
    L[prog.variables["theta"].slice] = R
    return L


# ---------------------------------------------------------------------------
# SCA loop


def _candidate_state(sol, param, ctx, k):
    v = sol.values
    P = param.precoder(v["theta"])
    c = np.maximum(v["c"], 0.0) if param.common else np.zeros(k)
    alpha = np.maximum(v["alpha"], 0.0)
    a = v["a"] if param.common else np.full(k, FLOOR)
    d = float(np.sum((ctx.r - (c + alpha)) ** 2))
    return ScaState(P, a, v["b"], d, 0, c, alpha)


def _surrogate_value(state, ctx):
    P = state.p_n
    gap = ctx.r - (state.c + state.alpha)
    eta = ctx.opts.eta
    fit = np.sum(gap**2) if ctx.opts.objective_norm == "L2" else np.sum(np.abs(gap))
    return float(eta * fit + (1.0 - eta) * np.sum(np.abs(P) ** 2))


def _finish(state, stats, ctx, d_trace, s_trace, n, status, scheme):
    P = state.p_n
    c = state.c if ctx.param.common else np.zeros(ctx.param.k)
    if not ctx.param.common:
        P = P.copy()
        P[:, 0] = 0.0
    pre = Precoder(P, c)
    return RmSolution(
        precoder=pre,
        rates=total_rates(pre, stats, ctx.sigma2),
        objective_trace=d_trace,
        surrogate_trace=s_trace,
        power_used_w=pre.total_power,
        iterations=n,
        status=status,
        scheme=scheme,
        alpha=state.alpha,
        a=state.a_n,
        b=state.b_n,
    )


def _run(h_hat, stats, r_target, pcap, sigma2, opts, param, scheme, callback=None):
    ctx = _Context(stats, r_target, pcap, sigma2, opts, param)
    P0 = _initial_precoder(h_hat, pcap, param)
    state = _state_from_precoder(P0, stats, ctx.r, sigma2)
    if not param.common:
        state.a_n = np.full(param.k, FLOOR)
    d_trace = [state.d_n]
    s_trace = [_surrogate_value(state, ctx)]
    status = "iteration_limit"
    n = 0
    while n < opts.max_iter:
        n += 1
        prog = build_subproblem(state, stats, None, opts, ctx=ctx)
        sol = solve(prog, opts.solver)
        if not sol.ok:
            log.info("subproblem %d returned %s; keeping the previous iterate", n, sol.status)
            status = f"subproblem_{sol.status}"
            n -= 1
            break
        new = _candidate_state(sol, param, ctx, param.k)
        new.iter = n
        if callback is not None:
            callback(new)
        d_prev = state.d_n
        state = new
        d_trace.append(state.d_n)
        s_trace.append(_surrogate_value(state, ctx))
        stalled = abs(state.d_n - d_prev) <= opts.tol
        if opts.stop_rule == "gap+objective":
            stalled = stalled and abs(s_trace[-1] - s_trace[-2]) <= opts.tol * abs(s_trace[-2])
        if stalled:
            status = "converged"
            break
    return _finish(state, stats, ctx, d_trace, s_trace, n, status, scheme)


def _inputs(channels, scenario):
    h = getattr(channels, "h_hat", channels)
    return (np.asarray(h), np.asarray(scenario.r_target, dtype=float),
            scenario.physics.per_feed_power_w, scenario.physics.noise_variance)


def run_sca(channels, stats, scenario, opts=None, callback=None):
    """RM-RSMA: full common and private precoders.

    ``callback``, if given, receives every accepted :class:`ScaState`.
    """
    opts = opts or scenario.opts
    h, r, pcap, sigma2 = _inputs(channels, scenario)
    n_t, k = h.shape
    return _run(h, stats, r, pcap, sigma2, opts, _Param.full(n_t, k), "RM-RSMA", callback)


def solve_rm_sdma(channels, stats, scenario, opts=None):
    """RM-SDMA: no common stream."""
    opts = opts or scenario.opts
    h, r, pcap, sigma2 = _inputs(channels, scenario)
    n_t, k = h.shape
    return _run(h, stats, r, pcap, sigma2, opts, _Param.sdma(n_t, k), "RM-SDMA")


def mmse_directions(h_hat, p_t, sigma2, reg=None):
    """Unit-norm regularized channel-inversion directions.

    ``w_k ~ (H H^H + (K sigma2 / p_t) I)^{-1} h_k`` unless ``reg`` overrides
    the regularizer.
    """
    h = np.asarray(h_hat)
    n_t, k = h.shape
    lam = k * sigma2 / p_t if reg is None else reg
    if not lam > 0:
        raise ValueError("regularizer must be positive")
    W = np.linalg.solve(h @ h.conj().T + lam * np.eye(n_t), h)
    return W / np.linalg.norm(W, axis=0)


def solve_mmse_rsma(channels, stats, scenario, opts=None):
    """MMSE-RSMA: private directions frozen, amplitudes and ``p_c`` free."""
    opts = opts or scenario.opts
    h, r, pcap, sigma2 = _inputs(channels, scenario)
    n_t, k = h.shape
    W = mmse_directions(h, n_t * pcap, sigma2, opts.mmse_reg)
    return _run(h, stats, r, pcap, sigma2, opts, _Param.mmse(n_t, k, W), "MMSE-RSMA")


def _user_beams(channels, h):
    geom = getattr(channels, "geometry", None)
    if geom is not None:
        return np.asarray(geom.user_beam_assignment)
    return np.argmax(np.abs(h), axis=0)


def _color_groups(beam_of_user, n_t, colors):
    colors = tuple(range(n_t)) if colors is None else tuple(colors)
    if len(colors) != n_t:
        raise ValueError(f"need one color per beam ({n_t}), got {len(colors)}")
    groups = []
    for col in sorted(set(colors)):
        feeds = [n for n in range(n_t) if colors[n] == col]
        users = [u for u, b in enumerate(beam_of_user) if colors[b] == col]
        if users:
            groups.append((feeds, users))
    return groups


def _sub_stats(stats, feeds, users):
    idx = np.ix_(users, feeds, feeds)
    return PerturbationStats(stats.q_fb[idx], stats.q_both[idx], stats.model)


def four_color_rates(precoder, stats, sigma2, groups, n_bands=4):
    """Per-user rates under band splitting.

    Each group transmits on its own ``1/n_bands`` share of the band, so it
    sees ``1/n_bands`` of the noise power and no other group, and its rate is
    ``log2(1 + SINR)/n_bands``.
    """
    k = precoder.c.shape[0]
    rates = np.zeros(k)
    for feeds, users in groups:
        sub = Precoder(precoder.p[np.ix_(feeds, [0] + [u + 1 for u in users])], np.zeros(len(users)))
        rates[users] = private_rate(sub, _sub_stats(stats, feeds, users), sigma2 / n_bands) / n_bands
    return rates


def solve_rm_4color(channels, stats, scenario, opts=None, n_bands=4):
    """RM-4color: SDMA rate matching inside each color's sub-band.

    A group targets ``n_bands * r_k`` in its own sub-band units so that the
    reported rate ``R_sub / n_bands`` is matched against ``r_k``.
    """
    opts = opts or scenario.opts
    h, r, pcap, sigma2 = _inputs(channels, scenario)
    n_t, k = h.shape
    groups = _color_groups(_user_beams(channels, h), n_t, opts.colors)
    P = np.zeros((n_t, k + 1), dtype=complex)
    alpha = np.zeros(k)
    b = np.full(k, FLOOR)
    traces, straces, iters, statuses = [], [], [], []
    for feeds, users in groups:
        sub_h = h[np.ix_(feeds, users)]
        sub = _run(sub_h, _sub_stats(stats, feeds, users), n_bands * r[users], pcap,
                   sigma2 / n_bands, opts, _Param.sdma(len(feeds), len(users)), "RM-SDMA")
        P[np.ix_(feeds, [u + 1 for u in users])] = sub.precoder.p[:, 1:]
        alpha[users] = sub.alpha / n_bands
        b[users] = sub.b
        traces.append(np.asarray(sub.objective_trace) / n_bands**2)
        straces.append(np.asarray(sub.surrogate_trace))
        iters.append(sub.iterations)
        statuses.append(sub.status)
    pre = Precoder(P, np.zeros(k))
    rp = four_color_rates(pre, stats, sigma2, groups, n_bands)
    report = RateReport(np.zeros(k), rp, rp.copy(), True)
    failed = [s for s in statuses if s not in ("converged", "iteration_limit")]
    status = failed[0] if failed else ("iteration_limit" if "iteration_limit" in statuses else "converged")
    return RmSolution(pre, report, _sum_traces(traces), _sum_traces(straces), pre.total_power,
                      max(iters), status, "RM-4color", alpha, np.full(k, FLOOR), b)


def _sum_traces(traces):
    n = max(len(t) for t in traces)
    return [float(sum(t[min(i, len(t) - 1)] for t in traces)) for i in range(n)]


_DISPATCH = {
    "RM-RSMA": run_sca,
    "RM-SDMA": solve_rm_sdma,
    "MMSE-RSMA": solve_mmse_rsma,
    "RM-4color": solve_rm_4color,
}


def solve_scheme(scheme, channels, stats, scenario, opts=None):
    opts = opts or scenario.opts
    if scheme not in _DISPATCH:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    return _DISPATCH[scheme](channels, stats, scenario, replace(opts, scheme=scheme))
