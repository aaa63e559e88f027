# src/rates/finite.py

from __future__ import annotations

import math
from enum import Enum
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar

from src.allocation.costs import subprotocol_bit_costs
from src.errors import DomainError
from src.rates.entropy import LN2, ArrayLike, bernoulli_divergence, error_entropy, log2
from src.rates.models import EpsilonBudget, KeyRateReport, NoiseModel, n_pairs


GammaFn = Callable[[ArrayLike, ArrayLike, ArrayLike, float], ArrayLike]

_BISECTION_STEPS: int = 52

# p' search for a single BBM92 link
_PB_GRID = np.geomspace(1e-4, 0.5, 61)


class GammaForm(Enum):
    """Statistical correction applied to an observed phase error rate."""

    BINOMIAL_TAIL = "binomial_tail"
    GAUSSIAN = "gaussian"
    SERFLING = "serfling"


# ---------- Statistical correction ----------


def _validate_counts(q: np.ndarray, n_key: np.ndarray, n_test: np.ndarray, eps: float) -> None:
    if np.any(n_key <= 0) or np.any(n_test <= 0):
        raise DomainError(
            f"round counts must be positive (n_key={n_key!r}, n_test={n_test!r})"
        )
    if not (0.0 < eps < 1.0):
        raise DomainError(f"eps={eps!r} outside (0, 1)")
    if np.any((q < 0.0) | (q > 0.5)):
        raise DomainError(f"error rate outside [0, 0.5]: {q!r}")


def _variance_and_log_argument(
    q: np.ndarray, n_key: np.ndarray, n_test: np.ndarray, eps: float
) -> Tuple[np.ndarray, np.ndarray]:
    variance = np.maximum(q * (1.0 - q), 1.0 / n_test)
    argument = (n_key + n_test) / (n_key * n_test * variance * eps**2)
    return variance, argument


def _gamma_gaussian(q, n_key, n_test, eps):
    variance, argument = _variance_and_log_argument(q, n_key, n_test, eps)
    spread = (n_key + n_test) * variance / (n_key * n_test * LN2)
    gamma = np.sqrt(spread * log2(np.maximum(argument, 1.0)))
    return np.where(argument > 1.0, gamma, 0.0)


def _gamma_serfling(q, n_key, n_test, eps):
    return np.sqrt(
        (n_key + n_test) * (n_test + 1.0) * math.log(1.0 / eps)
        / (2.0 * n_key * n_test**2)
    )


def _gamma_binomial_tail(q, n_key, n_test, eps):
    """
    Solve D(q || q + gamma) = target by bisection, vectorised over the inputs.

    The target is the exponent of the Gaussian form expressed as a divergence,
    so both forms agree for small gamma and the tail form is tighter near 1/2.
    """
    _, argument = _variance_and_log_argument(q, n_key, n_test, eps)
    target = (n_key + n_test) / (2.0 * n_key * n_test * LN2) * log2(
        np.maximum(argument, 1.0)
    )

    ceiling = 0.5 - q
    lo = np.zeros_like(q)
    hi = ceiling.copy()
    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        above = bernoulli_divergence(q, q + mid) > target
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)

    saturated = bernoulli_divergence(q, np.full_like(q, 0.5)) <= target
    gamma = np.where(saturated, ceiling, hi)
    return np.where(argument > 1.0, gamma, 0.0)


_GAMMA_FORMS = {
    GammaForm.BINOMIAL_TAIL: _gamma_binomial_tail,
    GammaForm.GAUSSIAN: _gamma_gaussian,
    GammaForm.SERFLING: _gamma_serfling,
}


def gamma_correction(
    q: ArrayLike,
    n_key: ArrayLike,
    n_test: ArrayLike,
    eps: float,
    form: GammaForm = GammaForm.BINOMIAL_TAIL,
) -> ArrayLike:
    """
    Finite-size correction gamma added to an error rate estimated on
    ``n_test`` rounds and applied to ``n_key`` rounds.

    Parameters
    ----------
    q : float or np.ndarray
        Error rate in [0, 0.5].
    n_key, n_test : float or np.ndarray
        Key and test round counts, both positive.
    eps : float
        Failure probability of the estimate.
    form : GammaForm
        Which bound to evaluate.

    Returns
    -------
    float or np.ndarray
        gamma >= 0, capped so that q + gamma <= 1/2.
    """
    q_arr, n_arr, k_arr = np.broadcast_arrays(
        np.asarray(q, dtype=float),
        np.asarray(n_key, dtype=float),
        np.asarray(n_test, dtype=float),
    )
    _validate_counts(q_arr, n_arr, k_arr, eps)

    gamma = _GAMMA_FORMS[form](q_arr, n_arr, k_arr, eps)
    gamma = np.minimum(gamma, 0.5 - q_arr)
    if gamma.ndim == 0:
        return float(gamma)
    return gamma


def gamma_function(form: Union[GammaForm, str] = GammaForm.BINOMIAL_TAIL) -> GammaFn:
    """Bind a correction form into the callable the key-length formulas accept."""
    chosen = GammaForm(form)

    def _gamma(q: ArrayLike, n_key: ArrayLike, n_test: ArrayLike, eps: float) -> ArrayLike:
        return gamma_correction(q, n_key, n_test, eps, form=chosen)

    return _gamma


def corrected_gamma(
    q: float, n_key: float, n_test: float, eps: float, gamma_fn: Optional[GammaFn]
) -> float:
    # without a test or key round nothing is known about the phase error
    if n_test < 1.0 or n_key < 1.0:
        return 0.5 - q
    fn = gamma_fn or gamma_function()
    return float(fn(q, n_key, n_test, eps))


# ---------- Conference key lengths ----------


def finite_key_length(
    L: float,
    p: float,
    noise: NoiseModel,
    budget: EpsilonBudget,
    N: int,
    gamma_fn: Optional[GammaFn] = None,
    rounds: Optional[float] = None,
) -> KeyRateReport:
    """
    AQCKA_M conference key length with its term breakdown.

    ell = L(1-p)[1 - h(Q_X + gamma) - h(Q_Z)] - log2(2(N-1)/eps_EC)
          - 2 log2(1/(2 eps_PA)) - L h(p) - N

    ``rounds`` is the rate denominator, defaulting to L (pass L_tot to get
    the network-level rate).
    """
    if L <= 0:
        raise DomainError(f"L={L!r} must be positive")
    if not (0.0 < p < 1.0):
        raise DomainError(f"p={p!r} outside (0, 1)")

    n_key = L * (1.0 - p)
    n_test = L * p
    gamma = corrected_gamma(noise.q_x, n_key, n_test, budget.eps_x, gamma_fn)

    h_x = error_entropy(noise.q_x)
    components = {
        "raw_term": n_key,
        "phase_error": -n_key * h_x,
        "pe_penalty": -n_key * (error_entropy(noise.q_x + gamma) - h_x),
        "ec_leakage": -n_key * error_entropy(noise.q_z)
        - float(log2(2.0 * (N - 1) / budget.eps_ec)),
        "pa_subtraction": -2.0 * float(log2(1.0 / (2.0 * budget.eps_pa))),
        "tkd_cost": -L * error_entropy(p),
        "constant": -float(N),
    }
    return KeyRateReport.from_components(
        components, rounds=L if rounds is None else rounds, gamma=gamma
    )


def fully_multipartite_key_length(
    L: float,
    p: float,
    noise: NoiseModel,
    budget: EpsilonBudget,
    N: int,
    gamma_fn: Optional[GammaFn] = None,
    rounds: Optional[float] = None,
) -> KeyRateReport:
    """Fully-AQCKA_M key length: no pre-shared key, so no TKD cost and no constant."""
    report = finite_key_length(L, p, noise, budget, N, gamma_fn=gamma_fn, rounds=rounds)
    components = dict(report.components)
    components["tkd_cost"] = 0.0
    components["constant"] = 0.0
    return KeyRateReport.from_components(components, rounds=report.rounds, gamma=report.gamma)


# ---------- Pairwise links ----------


def bipartite_finite_key_length(
    L_b_per_pair: float,
    p_b: ArrayLike,
    q_xb: float,
    q_zb: float,
    budget: EpsilonBudget,
    gamma_fn: Optional[GammaFn] = None,
) -> ArrayLike:
    """
    Secret key length of one BBM92 link after EC and PA, with the primed
    security parameters. ``p_b`` may be an array of test fractions.
    """
    if L_b_per_pair <= 0:
        raise DomainError(f"L_b_per_pair={L_b_per_pair!r} must be positive")
    p_arr = np.asarray(p_b, dtype=float)
    if np.any((p_arr <= 0.0) | (p_arr >= 1.0)):
        raise DomainError(f"p_b outside (0, 1): {p_b!r}")

    n_key = L_b_per_pair * (1.0 - p_arr)
    n_test = L_b_per_pair * p_arr
    fn = gamma_fn or gamma_function()

    measurable = (n_test >= 1.0) & (n_key >= 1.0)
    gamma = np.full_like(p_arr, 0.5 - q_xb)
    if np.any(measurable):
        gamma = np.where(
            measurable,
            fn(
                np.full_like(p_arr, q_xb),
                np.maximum(n_key, 1.0),
                np.maximum(n_test, 1.0),
                budget.eps_x_b,
            ),
            gamma,
        )

    bracket = 1.0 - error_entropy(q_xb + gamma) - error_entropy(q_zb)
    length = (
        n_key * bracket
        - log2(2.0 / budget.eps_ec_b)
        - 2.0 * log2(1.0 / (2.0 * budget.eps_pa_b))
    )
    if np.ndim(length) == 0:
        return float(length)
    return length


def optimize_bipartite_test_fraction(
    n_pair: float,
    q_xb: float,
    q_zb: float,
    budget: EpsilonBudget,
    gamma_fn: Optional[GammaFn] = None,
) -> Tuple[float, float]:
    """
    Best p' for one link of ``n_pair`` rounds.

    Returns
    -------
    Tuple[float, float]
        (ell_B, p'); ell_B may be negative when no p' yields key.
    """
    if n_pair <= 0:
        return (-math.inf, float(_PB_GRID[0]))

    lengths = bipartite_finite_key_length(n_pair, _PB_GRID, q_xb, q_zb, budget, gamma_fn)
    best = int(np.argmax(lengths))
    best_len, best_p = float(lengths[best]), float(_PB_GRID[best])

    lo = float(_PB_GRID[max(best - 1, 0)])
    hi = float(_PB_GRID[min(best + 1, len(_PB_GRID) - 1)])
    if hi > lo:
        refined = minimize_scalar(
            lambda x: -bipartite_finite_key_length(n_pair, x, q_xb, q_zb, budget, gamma_fn),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": lo * 1e-3},
        )
        if refined.success and -refined.fun > best_len:
            best_len, best_p = float(-refined.fun), float(refined.x)
    return best_len, best_p


def min_pair_key_length(
    n_pair: float,
    p_b: float,
    noise: NoiseModel,
    budget: EpsilonBudget,
    gamma_fn: Optional[GammaFn] = None,
) -> float:
    """ell_B of the weakest pair at a common test fraction."""
    rates = set(noise.pairwise.values())
    return min(
        bipartite_finite_key_length(n_pair, p_b, q_xb, q_zb, budget, gamma_fn)
        for q_xb, q_zb in rates
    )


def optimize_common_test_fraction(
    n_pair: float,
    noise: NoiseModel,
    budget: EpsilonBudget,
    gamma_fn: Optional[GammaFn] = None,
    refine: bool = True,
) -> Tuple[float, float]:
    """
    One p' shared by every link, chosen to maximise the weakest pair's ell_B.

    With identical links this is optimize_bipartite_test_fraction.
    """
    if n_pair <= 0:
        return (-math.inf, float(_PB_GRID[0]))
    rates = sorted(set(noise.pairwise.values()))
    if len(rates) == 1 and refine:
        return optimize_bipartite_test_fraction(n_pair, *rates[0], budget, gamma_fn)

    weakest = np.min(
        [
            bipartite_finite_key_length(n_pair, _PB_GRID, q_xb, q_zb, budget, gamma_fn)
            for q_xb, q_zb in rates
        ],
        axis=0,
    )
    best = int(np.argmax(weakest))
    best_len, best_p = float(weakest[best]), float(_PB_GRID[best])
    if not refine:
        return best_len, best_p

    lo = float(_PB_GRID[max(best - 1, 0)])
    hi = float(_PB_GRID[min(best + 1, len(_PB_GRID) - 1)])
    refined = minimize_scalar(
        lambda x: -min_pair_key_length(n_pair, x, noise, budget, gamma_fn),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": lo * 1e-3},
    )
    if refined.success and -refined.fun > best_len:
        best_len, best_p = float(-refined.fun), float(refined.x)
    return best_len, best_p


def epsilon_total(budget: EpsilonBudget, N: int) -> float:
    """Composed security parameter of an AQCKA_M run."""
    return math.fsum(
        [
            2.0 ** (-budget.r_v),
            (N - 1) * budget.eps_enc,
            budget.eps_ec,
            2.0 * budget.eps_x,
            budget.eps_pa,
            N * (N - 1) / 2.0
            * (budget.eps_ec_b + 2.0 * budget.eps_x_b + budget.eps_pa_b),
        ]
    )


def bipartite_conference_key_length(
    L_tot: float,
    p_b: float,
    noise: NoiseModel,
    budget: EpsilonBudget,
    N: int,
    gamma_fn: Optional[GammaFn] = None,
) -> KeyRateReport:
    """
    AQCKA_B conference key length ell' = ell_B/2 - ID/(N(N-1)), where every
    pair receives L_tot / C(N,2) rounds and ell_B is the weakest pair's length.
    """
    if L_tot <= 0:
        raise DomainError(f"L_tot={L_tot!r} must be positive")
    n_pair = L_tot / n_pairs(N)
    ell_b = min_pair_key_length(n_pair, p_b, noise, budget, gamma_fn)
    id_bits, _, _ = subprotocol_bit_costs(N, 0.0, p_b, budget)
    components = {
        "pairwise_key": 0.5 * ell_b,
        "id_cost": -id_bits / (N * (N - 1)),
    }
    return KeyRateReport.from_components(components, rounds=L_tot)


def fully_bipartite_conference_key_length(
    L_tot: float,
    p_b: float,
    noise: NoiseModel,
    budget: EpsilonBudget,
    N: int,
    gamma_fn: Optional[GammaFn] = None,
) -> KeyRateReport:
    """Fully-AQCKA_B ell' = (C(N,2) ell_B - ID - r_V N(N-1)) / (N(N-1)^2)."""
    if L_tot <= 0:
        raise DomainError(f"L_tot={L_tot!r} must be positive")
    pairs = n_pairs(N)
    ell_b = min_pair_key_length(L_tot / pairs, p_b, noise, budget, gamma_fn)
    id_bits, _, _ = subprotocol_bit_costs(N, 0.0, p_b, budget)
    denominator = N * (N - 1) ** 2
    components = {
        "pairwise_key": pairs * ell_b / denominator,
        "id_cost": -id_bits / denominator,
        "abort_veto": -budget.r_v * N * (N - 1) / denominator,
    }
    return KeyRateReport.from_components(components, rounds=L_tot)
