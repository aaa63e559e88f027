# src/allocation/optimizer.py

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.special import softmax

from src.allocation.split import RoundAllocation, solve_round_split, zero_allocation
from src.errors import DomainError
from src.rates.finite import (
    GammaFn,
    bipartite_conference_key_length,
    optimize_common_test_fraction,
)
from src.rates.models import EpsilonBudget, KeyRateReport, NoiseModel, n_pairs


logger = logging.getLogger(__name__)

VETO_SHARE: float = 0.1  # largest fraction of eps_tot the Veto may consume
THETA_GRID: Tuple[float, ...] = (0.5, 0.75, 0.9)
P_GRID = np.geomspace(1e-6, 0.5, 37)

# epsilon-split search: (enc, ec+pa, x, ec_b+pa_b, x_b) shares of what the Veto leaves
SPLIT_GROUPS: Tuple[str, ...] = ("enc", "ec_pa", "x", "ec_pa_b", "x_b")
SPLIT_SLACK: float = 1e-9
SPLIT_PASSES: int = 2
SPLIT_EVALS_PER_PASS: int = 160
SPLIT_STEP: float = 1.0
LOG_P_STEP: float = 0.5
LOGIT_BOUND: float = 30.0


def veto_rounds_for(eps_tot: float) -> int:
    """Smallest r_V with 2^-r_V <= VETO_SHARE * eps_tot."""
    if not (0.0 < eps_tot < 1.0):
        raise DomainError(f"eps_tot={eps_tot!r} outside (0, 1)")
    return max(1, math.ceil(-math.log2(VETO_SHARE * eps_tot)))


def budget_for_target(eps_tot: float, N: int, theta: float) -> EpsilonBudget:
    """
    Spread eps_tot over the eight security parameters.

    A share ``theta`` of what the Veto leaves goes evenly to the N+3
    conference-key terms, the rest evenly to the 4 C(N,2) pairwise terms.
    """
    if not (0.0 < theta < 1.0):
        raise DomainError(f"theta={theta!r} outside (0, 1)")
    r_v = veto_rounds_for(eps_tot)
    remaining = eps_tot - 2.0 ** (-r_v)
    conference = theta * remaining / (N + 3)
    pairwise = (1.0 - theta) * remaining / (4 * n_pairs(N))
    return EpsilonBudget(
        r_v=r_v,
        eps_enc=conference,
        eps_ec=conference,
        eps_x=conference,
        eps_pa=conference,
        eps_ec_b=pairwise,
        eps_x_b=pairwise,
        eps_pa_b=pairwise,
    )


def theta_shares(N: int, theta: float) -> np.ndarray:
    """Group shares equivalent to budget_for_target(eps_tot, N, theta)."""
    if not (0.0 < theta < 1.0):
        raise DomainError(f"theta={theta!r} outside (0, 1)")
    conference = theta / (N + 3)
    pairwise = (1.0 - theta) / 2.0
    return np.array([(N - 1) * conference, 2.0 * conference, 2.0 * conference, pairwise, pairwise])


def budget_from_shares(eps_tot: float, N: int, shares: Sequence[float]) -> EpsilonBudget:
    """
    Spread eps_tot over the security parameters by group shares.

    ``shares`` weights the SPLIT_GROUPS terms of epsilon_total after the Veto
    takes its 2^-r_V. Inside each log-penalty group eps_pa = 2 eps_ec, the
    split that maximises the key length for the group's share.
    """
    weights = np.asarray(shares, dtype=float)
    if weights.shape != (len(SPLIT_GROUPS),) or np.any(weights <= 0.0):
        raise DomainError(f"expected {len(SPLIT_GROUPS)} positive shares, got {shares!r}")
    r_v = veto_rounds_for(eps_tot)
    remaining = (eps_tot - 2.0 ** (-r_v)) * (1.0 - SPLIT_SLACK)
    enc, ec_pa, x, ec_pa_b, x_b = remaining * weights / weights.sum()
    pairs = n_pairs(N)
    return EpsilonBudget(
        r_v=r_v,
        eps_enc=enc / (N - 1),
        eps_ec=ec_pa / 3.0,
        eps_x=x / 2.0,
        eps_pa=2.0 * ec_pa / 3.0,
        eps_ec_b=ec_pa_b / (3.0 * pairs),
        eps_x_b=x_b / (2.0 * pairs),
        eps_pa_b=2.0 * ec_pa_b / (3.0 * pairs),
    )


def _better(candidate: RoundAllocation, incumbent: Optional[RoundAllocation]) -> bool:
    if incumbent is None:
        return True
    if candidate.rate != incumbent.rate:
        return candidate.rate > incumbent.rate
    return candidate.p < incumbent.p


def _best_for_budget(
    l_tot: int,
    noise: NoiseModel,
    budget: EpsilonBudget,
    gamma_fn: Optional[GammaFn],
    integral: bool,
) -> Optional[RoundAllocation]:
    best: Optional[RoundAllocation] = None
    rates: List[float] = []
    for p in P_GRID:
        alloc = solve_round_split(l_tot, float(p), noise, budget, gamma_fn, integral)
        rates.append(alloc.rate)
        if _better(alloc, best):
            best = alloc

    if best is None or best.rate <= 0.0:
        return best

    # golden-section style refinement in log p between the neighbouring grid points
    index = int(np.argmax(rates))
    lo = math.log(P_GRID[max(index - 1, 0)])
    hi = math.log(P_GRID[min(index + 1, len(P_GRID) - 1)])
    refined = minimize_scalar(
        lambda log_p: -solve_round_split(
            l_tot, math.exp(log_p), noise, budget, gamma_fn, integral
        ).rate,
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-3},
    )
    if refined.success:
        candidate = solve_round_split(
            l_tot, math.exp(float(refined.x)), noise, budget, gamma_fn, integral
        )
        if _better(candidate, best):
            best = candidate
    return best


def _refine_split(
    l_tot: int,
    noise: NoiseModel,
    eps_tot: float,
    gamma_fn: Optional[GammaFn],
    integral: bool,
    best: RoundAllocation,
    shares: np.ndarray,
) -> RoundAllocation:
    """
    Nelder-Mead over (log share ratios to the enc share, log p) from ``best``.

    Every evaluated point is a solved allocation and the incumbent only moves
    to a better one; each pass restarts a fresh simplex at the incumbent.
    """
    N = noise.n_parties
    lo_p, hi_p = math.log(P_GRID[0]), math.log(P_GRID[-1])
    log_shares = np.log(shares)
    incumbent = best
    incumbent_x = np.append(log_shares[1:] - log_shares[0], math.log(best.p))

    def negative_rate(x: np.ndarray) -> float:
        nonlocal incumbent, incumbent_x
        logits = np.clip(np.concatenate([[0.0], x[:-1]]), -LOGIT_BOUND, LOGIT_BOUND)
        p = math.exp(min(max(float(x[-1]), lo_p), hi_p))
        budget = budget_from_shares(eps_tot, N, softmax(logits))
        alloc = solve_round_split(l_tot, p, noise, budget, gamma_fn, integral)
        if _better(alloc, incumbent):
            incumbent, incumbent_x = alloc, np.array(x, dtype=float)
        return -alloc.rate

    steps = np.append(np.full(len(SPLIT_GROUPS) - 1, SPLIT_STEP), LOG_P_STEP)
    for _ in range(SPLIT_PASSES):
        origin = incumbent_x.copy()
        minimize(
            negative_rate,
            origin,
            method="Nelder-Mead",
            options={
                "initial_simplex": np.vstack([origin, origin + np.diag(steps)]),
                "maxfev": SPLIT_EVALS_PER_PASS,
                "xatol": 1e-3,
                "fatol": 1e-9,
            },
        )
    logger.debug(
        "epsilon split l_tot=%d: rate %.6f -> %.6f", l_tot, best.rate, incumbent.rate
    )
    return incumbent


def optimize_fkr(
    l_tot: int,
    noise: NoiseModel,
    eps_tot_target: float,
    N: int,
    gamma_fn: Optional[GammaFn] = None,
    integral: bool = False,
    thetas: Sequence[float] = THETA_GRID,
) -> RoundAllocation:
    """
    Maximise the AQCKA_M finite key rate over p and the epsilon split.

    Parameters
    ----------
    l_tot : int
        Total network rounds.
    noise : NoiseModel
        Error thresholds used for dimensioning.
    eps_tot_target : float
        Composed security parameter the budget must meet.
    N : int
        Number of users; must match ``noise.n_parties``.
    gamma_fn : GammaFn, optional
        Statistical correction; the binomial-tail form by default.
    integral : bool
        Solve the split with the whole-bit debit schedule of a simulated run.

    Returns
    -------
    RoundAllocation
        Best allocation, ties broken by lowest p; the zero allocation when no
        split yields key.

    Notes
    -----
    Each ``theta`` seeds a p search; from the best seed a Nelder-Mead search
    over the group shares of the budget and log p takes over.
    """
    if N != noise.n_parties:
        raise DomainError(f"N={N} does not match noise model with {noise.n_parties} parties")
    if not thetas:
        raise DomainError("thetas must hold at least one split fraction")
    best: Optional[RoundAllocation] = None
    start = theta_shares(N, thetas[0])
    for theta in thetas:
        shares = theta_shares(N, theta)
        budget = budget_from_shares(eps_tot_target, N, shares)
        candidate = _best_for_budget(l_tot, noise, budget, gamma_fn, integral)
        if candidate is not None and _better(candidate, best):
            best, start = candidate, shares

    if best is None or best.rate <= 0.0:
        logger.info("optimize_fkr l_tot=%d: no positive key rate", l_tot)
        return zero_allocation(N, l_tot, 0.0, budget_from_shares(eps_tot_target, N, start))

    best = _refine_split(l_tot, noise, eps_tot_target, gamma_fn, integral, best, start)
    logger.info(
        "optimize_fkr l_tot=%d L=%d p=%.4g rate=%.6f",
        l_tot,
        best.l_multi,
        best.p,
        best.rate,
    )
    return best


# ---------- AQCKA_B comparison ----------


@dataclass(frozen=True)
class BipartiteAllocation:
    """Optimised AQCKA_B operating point: every round feeds the pairwise links."""

    l_tot: int
    p_b: float
    budget: EpsilonBudget
    report: KeyRateReport

    @property
    def rate(self) -> float:
        return self.report.rate


def optimize_bipartite_fkr(
    l_tot: int,
    noise: NoiseModel,
    eps_tot_target: float,
    N: int,
    gamma_fn: Optional[GammaFn] = None,
    thetas: Sequence[float] = THETA_GRID,
) -> BipartiteAllocation:
    """Best AQCKA_B conference key rate over p' and the epsilon split."""
    if N != noise.n_parties:
        raise DomainError(f"N={N} does not match noise model with {noise.n_parties} parties")
    if not thetas:
        raise DomainError("thetas must hold at least one split fraction")
    best: Optional[BipartiteAllocation] = None
    for theta in thetas:
        budget = budget_for_target(eps_tot_target, N, theta)
        _, p_b = optimize_common_test_fraction(l_tot / n_pairs(N), noise, budget, gamma_fn)
        report = bipartite_conference_key_length(l_tot, p_b, noise, budget, N, gamma_fn)
        candidate = BipartiteAllocation(l_tot=l_tot, p_b=p_b, budget=budget, report=report)
        if best is None or candidate.report.key_length > best.report.key_length:
            best = candidate
    return best
