"""Seeded Monte Carlo trials, sweeps and result emission.

Trial ``t`` of a scenario with seed ``s`` draws user positions and the channel
estimate from ``SeedSequence([s, t])``, so every scheme sees the same channel
in trial ``t``.  Monte Carlo rate evaluation uses the separate stream
``SeedSequence([s, t, 1])``, again shared by all schemes.
"""

import csv
import hashlib
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import stats as sps

from .channel import synthesize_channel
from .optimizer import SCHEMES, _color_groups, _user_beams, solve_scheme
from .perturbation import PerturbationModel, build_stats
from .rates import Precoder, instantaneous_rate_sample

__all__ = [
    "CSV_COLUMNS",
    "NO_INFO",
    "ALL_SCHEMES",
    "MetricsTable",
    "TrialInput",
    "trial_input",
    "user_metrics",
    "run_trials",
    "sweep_eta",
    "sweep_delta_fb",
    "emit_results",
    "emit_rows",
    "spearman",
    "mc_rates",
]

log = logging.getLogger(__name__)

CSV_COLUMNS = ("scheme", "trial", "user", "target_bps_hz", "rate_bps_hz", "unmet", "unused",
               "satisfaction_pct", "power_w", "iterations", "status")
NO_INFO = "RM-RSMA (no info)"
ALL_SCHEMES = SCHEMES + (NO_INFO,)
OK_STATUSES = ("converged", "iteration_limit")
MC_DRAWS = 2000


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    return str(v)


def user_metrics(target, rate):
    """``(unmet, unused, satisfaction_pct)`` for one user."""
    unmet = max(target - rate, 0.0)
    unused = max(rate - target, 0.0)
    sat = 100.0 if target == 0 else 100.0 * min(rate / target, 1.0)
    return unmet, unused, max(sat, 0.0)


@dataclass
class MetricsTable:
    """Per-(scheme, trial, user) rows; aggregates are always recomputed from them."""

    rows: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def add_trial(self, scheme, trial, targets, rates, power, iterations, status):
        for u, (tgt, r) in enumerate(zip(targets, rates)):
            unmet, unused, sat = user_metrics(float(tgt), float(r))
            self.rows.append({
                "scheme": scheme, "trial": int(trial), "user": u, "target_bps_hz": float(tgt),
                "rate_bps_hz": float(r), "unmet": unmet, "unused": unused, "satisfaction_pct": sat,
                "power_w": float(power), "iterations": int(iterations), "status": status,
            })

    def __add__(self, other):
        return MetricsTable(self.rows + other.rows, {**self.extras, **other.extras})

    @property
    def schemes(self):
        return list(dict.fromkeys(r["scheme"] for r in self.rows))

    def trial_satisfaction(self, scheme):
        """``{trial: user-mean satisfaction}`` over successful trials."""
        by = {}
        for r in self.rows:
            if r["scheme"] == scheme and r["status"] in OK_STATUSES:
                by.setdefault(r["trial"], []).append(r["satisfaction_pct"])
        return {t: float(np.mean(v)) for t, v in sorted(by.items())}

    def aggregates(self):
        out = {}
        for scheme in self.schemes:
            rows = [r for r in self.rows if r["scheme"] == scheme]
            trials = sorted({r["trial"] for r in rows})
            ok = [r for r in rows if r["status"] in OK_STATUSES]
            ok_trials = sorted({r["trial"] for r in ok})
            sat = list(self.trial_satisfaction(scheme).values())
            first = {}
            for r in ok:
                first.setdefault(r["trial"], r)
            out[scheme] = {
                "trials": len(trials),
                "failed_trials": len(trials) - len(ok_trials),
                "satisfaction_mean": float(np.mean(sat)) if sat else float("nan"),
                "satisfaction_std": float(np.std(sat)) if sat else float("nan"),
                "unmet_mean": float(np.mean([r["unmet"] for r in ok])) if ok else float("nan"),
                "unused_mean": float(np.mean([r["unused"] for r in ok])) if ok else float("nan"),
                "power_mean_w": float(np.mean([r["power_w"] for r in first.values()])) if ok else float("nan"),
                "iterations_mean": float(np.mean([r["iterations"] for r in first.values()])) if ok else float("nan"),
            }
        return out

    def mean_satisfaction(self, scheme):
        return self.aggregates()[scheme]["satisfaction_mean"]


# ---------------------------------------------------------------------------
# one trial


@dataclass(frozen=True)
class TrialInput:
    scenario: object
    channels: object
    stats: object


def trial_input(scenario, trial):
    rng = np.random.default_rng(np.random.SeedSequence([int(scenario.seed), int(trial)]))
    geom = scenario.trial_geometry(rng)
    sc = replace(scenario, geometry=geom)
    ch = synthesize_channel(sc, rng)
    return TrialInput(sc, ch, build_stats(ch.h_hat, scenario.perturbation))


def _mc_rng(scenario, trial):
    return np.random.default_rng(np.random.SeedSequence([int(scenario.seed), int(trial), 1]))


def mc_rates(sol, channels, model, sigma2, rng, n_draws=MC_DRAWS, opts=None):
    """Per-user rates averaged over true-channel draws.

    A user's rate is its mean private rate plus its common share ``c_k``.  If
    the weakest user's mean common rate falls short of ``sum(c)``, every
    share is scaled down by the same factor.
    """
    h = channels.h_hat
    if sol.scheme == "RM-4color":
        groups = _color_groups(_user_beams(channels, h), h.shape[0], (opts.colors if opts else None))
        rates = np.zeros(h.shape[1])
        for feeds, users in groups:
            sub = Precoder(sol.precoder.p[np.ix_(feeds, [0] + [u + 1 for u in users])], np.zeros(len(users)))
            _, rp = instantaneous_rate_sample(h[np.ix_(feeds, users)], sub, model, sigma2 / 4, rng, n_draws)
            rates[users] = rp / 4
        return rates
    rc, rp = instantaneous_rate_sample(h, sol.precoder, model, sigma2, rng, n_draws)
    c = sol.precoder.c
    total_c = float(c.sum())
    scale = 1.0 if total_c <= 0 else min(1.0, float(rc.min()) / total_c)
    return rp + scale * c


def _run_one(args):
    scenario, scheme, trial, evaluate = args
    inp = trial_input(scenario, trial)
    sc, ch, stats = inp.scenario, inp.channels, inp.stats
    solve_stats = stats
    base = scheme
    if scheme == NO_INFO:
        # optimizer assumes perfect CSI; evaluation still uses the true model
        solve_stats = build_stats(ch.h_hat, PerturbationModel())
        base = "RM-RSMA"
    try:
        sol = solve_scheme(base, ch, solve_stats, sc)
    except (ValueError, np.linalg.LinAlgError) as exc:
        log.warning("trial %d %s failed: %s", trial, scheme, exc)
        k = sc.n_users
        return (scheme, trial, sc.r_target, np.full(k, np.nan), np.nan, 0, "error"), None
    if evaluate == "mc":
        rates = mc_rates(sol, ch, scenario.perturbation, sc.physics.noise_variance,
                         _mc_rng(scenario, trial), opts=sc.opts)
    else:
        rates = sol.rates.r_total
    gap = float(np.linalg.norm(np.asarray(sc.r_target) - sol.offered_lower_bound))
    extra = {"gap": gap, "power": sol.power_used_w, "hash": _hash(ch.h_hat)}
    return (scheme, trial, sc.r_target, rates, sol.power_used_w, sol.iterations, sol.status), extra


def _hash(a):
    return hashlib.sha256(np.ascontiguousarray(a).tobytes()).hexdigest()[:16]


def _map(fn, jobs, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def run_trials(scenario, scheme, rng=None, trials=None, workers=1, evaluate="closed_form"):
    """Run ``trials`` paired trials of one scheme (or a list of schemes).

    ``rng`` may be an integer seed overriding ``scenario.seed``.  ``evaluate``
    is ``"closed_form"`` (ergodic rates) or ``"mc"`` (Monte Carlo rates under
    the true perturbations).
    """
    if rng is not None:
        scenario = replace(scenario, seed=int(rng))
    n = scenario.trials if trials is None else int(trials)
    schemes = [scheme] if isinstance(scheme, str) else list(scheme)
    for s in schemes:
        if s not in ALL_SCHEMES:
            raise ValueError(f"unknown scheme {s!r}; choose from {ALL_SCHEMES}")
    jobs = [(scenario, s, t, evaluate) for s in schemes for t in range(n)]
    results = _map(_run_one, jobs, workers)
    table = MetricsTable()
    extras = {}
    for (row, extra) in results:
        table.add_trial(*row)
        if extra is not None:
            extras[(row[0], row[1])] = extra
    table.extras = extras
    return table


# ---------------------------------------------------------------------------
# sweeps


def sweep_eta(scenario, eta_grid, rng=None, norms=("L2", "L1"), trials=None, workers=1):
    """Mean ``||r - (c + alpha)||_2`` and mean power of RM-RSMA per ``(eta, norm)``."""
    out = []
    for eta in eta_grid:
        if not 0 < eta <= 1:
            raise ValueError(f"eta grid values must lie in (0, 1], got {eta}")
        for norm in norms:
            sc = replace(scenario, opts=replace(scenario.opts, eta=float(eta), objective_norm=norm))
            tab = run_trials(sc, "RM-RSMA", rng, trials, workers)
            ex = [v for v in tab.extras.values()]
            out.append({"eta": float(eta), "objective": norm,
                        "gap_mean": float(np.mean([e["gap"] for e in ex])),
                        "power_mean_w": float(np.mean([e["power"] for e in ex])),
                        "failed_trials": tab.aggregates()["RM-RSMA"]["failed_trials"]})
    return out


def sweep_delta_fb(scenario, delta_grid_deg, rng=None, delta_ce_deg=None, schemes=ALL_SCHEMES,
                   trials=None, workers=1):
    """Mean Monte Carlo satisfaction per ``(delta_fb, scheme)``."""
    ce = np.rad2deg(scenario.perturbation.delta_ce_rad) if delta_ce_deg is None else delta_ce_deg
    out = []
    for d in delta_grid_deg:
        if d < 0:
            raise ValueError("delta grid values must be >= 0")
        sc = replace(scenario, perturbation=PerturbationModel.from_degrees(d, ce))
        tab = run_trials(sc, list(schemes), rng, trials, workers, evaluate="mc")
        agg = tab.aggregates()
        for s in schemes:
            out.append({"delta_fb_deg": float(d), "scheme": s,
                        "satisfaction_mean": agg[s]["satisfaction_mean"],
                        "failed_trials": agg[s]["failed_trials"]})
    return out


def spearman(x, y):
    return float(sps.spearmanr(x, y).statistic)


# ---------------------------------------------------------------------------
# output


def _csv_text(rows, columns):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def _json_value(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return float(f"{v:.9g}") if np.isfinite(v) else None
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    if isinstance(v, np.integer):
        return int(v)
    return v


def _write(path, text):
    path = Path(path)
    try:
        path.write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc.strerror}") from exc
    return path


def emit_results(table, fmt, path):
    """Write a :class:`MetricsTable` as CSV or JSON (with an aggregates block)."""
    if not table.rows:
        raise ValueError("no rows to emit")
    agg = table.aggregates()
    if all(a["trials"] == a["failed_trials"] for a in agg.values()):
        raise ValueError("no successful trials to aggregate")
    if fmt == "csv":
        return _write(path, _csv_text(table.rows, CSV_COLUMNS))
    if fmt == "json":
        doc = {"rows": [_json_value(r) for r in table.rows], "aggregates": _json_value(agg)}
        return _write(path, json.dumps(doc, indent=1) + "\n")
    raise ValueError(f"unknown format {fmt!r}; choose csv or json")


def emit_rows(rows, fmt, path):
    """Write a sweep table (list of flat dicts)."""
    if not rows:
        raise ValueError("no rows to emit")
    if fmt == "csv":
        return _write(path, _csv_text(rows, list(rows[0])))
    if fmt == "json":
        return _write(path, json.dumps([_json_value(r) for r in rows], indent=1) + "\n")
    raise ValueError(f"unknown format {fmt!r}; choose csv or json")
