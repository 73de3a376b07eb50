"""Closed-form ergodic rates versus Monte Carlo instantaneous means."""

import numpy as np

from .harness import trial_input
from .rates import Precoder, common_rate, instantaneous_rate_sample, private_rate

__all__ = ["random_feasible_precoder", "validate_rates"]


def random_feasible_precoder(n_t, k, per_feed_power, rng):
    """Gaussian precoder with every feed row scaled to a uniform fraction of the cap."""
    p = rng.standard_normal((n_t, k + 1)) + 1j * rng.standard_normal((n_t, k + 1))
    rows = np.sum(np.abs(p) ** 2, axis=1)
    frac = rng.uniform(0.2, 1.0, size=n_t)
    return Precoder(p * np.sqrt(frac * per_feed_power / rows)[:, None], np.zeros(k))


def validate_rates(scenario, n_precoders=20, n_draws=10_000, seed=0):
    """One row per (precoder, user, stream) with the relative error of the closed form."""
    rows = []
    sigma2 = scenario.physics.noise_variance
    for i in range(n_precoders):
        inp = trial_input(scenario, i)
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), i, 2]))
        pre = random_feasible_precoder(inp.channels.n_feeds, inp.channels.n_users,
                                       scenario.physics.per_feed_power_w, rng)
        cf = {"common": common_rate(pre, inp.stats, sigma2), "private": private_rate(pre, inp.stats, sigma2)}
        mc_c, mc_p = instantaneous_rate_sample(inp.channels.h_hat, pre, scenario.perturbation, sigma2,
                                               rng, n_draws)
        mc = {"common": mc_c, "private": mc_p}
        for stream in ("common", "private"):
            for u in range(inp.channels.n_users):
                a, b = float(cf[stream][u]), float(mc[stream][u])
                rows.append({"precoder": i, "user": u, "stream": stream, "closed_form": a,
                             "monte_carlo": b, "rel_error": abs(a - b) / max(abs(b), 1e-12)})
    return rows
