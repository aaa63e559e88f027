# src/allocation/split.py

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

from src.allocation.costs import pair_debit_schedule, subprotocol_bit_costs
from src.errors import DomainError
from src.rates.finite import GammaFn, finite_key_length, optimize_common_test_fraction
from src.rates.models import EpsilonBudget, NoiseModel, n_pairs


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RoundAllocation:
    """
    Split of L_tot network rounds into L multipartite and L_B bipartite rounds.

    Attributes
    ----------
    n_parties : int
        Network size N.
    l_tot, l_multi, l_bi : int
        Total, multipartite (L) and bipartite (L_B) rounds.
    p : float
        Test fraction of the multipartite rounds.
    l_id, l_tkb, l_pe : float
        L_B shared out in proportion to each subprotocol's bit demand.
    budget : EpsilonBudget
        Security parameters the split was solved for.
    rate : float
        Conference key bits per network round, clamped at zero.
    p_b : float
        Test fraction shared by the pairwise links.
    gamma : float
        Phase-error correction at (L, p).
    key_length : float
        Raw conference key length (may be negative).
    pair_supply, pair_demand : float
        Key bits per pair the links yield and the subprotocols consume.
    """

    n_parties: int
    l_tot: int
    l_multi: int
    l_bi: int
    p: float
    l_id: float
    l_tkb: float
    l_pe: float
    budget: EpsilonBudget
    rate: float
    p_b: float = 0.0
    gamma: float = 0.0
    key_length: float = 0.0
    pair_supply: float = 0.0
    pair_demand: float = 0.0

    @property
    def is_feasible(self) -> bool:
        return self.l_multi > 0 and self.rate > 0.0

    @property
    def residual_per_pair(self) -> float:
        return self.pair_supply - self.pair_demand


def zero_allocation(
    n_parties: int, l_tot: int, p: float, budget: EpsilonBudget
) -> RoundAllocation:
    """All rounds bipartite, no conference key."""
    return RoundAllocation(
        n_parties=n_parties,
        l_tot=l_tot,
        l_multi=0,
        l_bi=l_tot,
        p=p,
        l_id=float(l_tot),
        l_tkb=0.0,
        l_pe=0.0,
        budget=budget,
        rate=0.0,
    )


# ---------- Supply and demand per pair ----------


def pair_supply(
    l_bi: int,
    noise: NoiseModel,
    budget: EpsilonBudget,
    gamma_fn: Optional[GammaFn] = None,
    integral: bool = False,
) -> Tuple[float, float]:
    """
    Key bits the weakest pair obtains from its share of ``l_bi`` rounds.

    Returns
    -------
    Tuple[float, float]
        (bits, p_b). In integral mode the share and the key length are floored,
        matching what pairwise key generation actually delivers.
    """
    pairs = n_pairs(noise.n_parties)
    n_pair = math.floor(l_bi / pairs) if integral else l_bi / pairs
    bits, p_b = optimize_common_test_fraction(n_pair, noise, budget, gamma_fn, refine=False)
    if integral and math.isfinite(bits):
        bits = float(math.floor(bits))
    return bits, p_b


def pair_demand(
    N: int, L: int, p: float, budget: EpsilonBudget, integral: bool = False
) -> float:
    """Key bits every pair must hold for ID, TKB and PE at (L, p)."""
    if integral:
        return float(pair_debit_schedule(N, L, p, budget)["total"])
    id_cost, tkb, pe = subprotocol_bit_costs(N, L, p, budget)
    return (id_cost + tkb + pe) / n_pairs(N)


def partition_bipartite_rounds(alloc: RoundAllocation) -> RoundAllocation:
    """Share L_B among ID, TKB and PE in proportion to their bit demand."""
    id_cost, tkb, pe = subprotocol_bit_costs(
        alloc.n_parties, alloc.l_multi, alloc.p, alloc.budget
    )
    total = id_cost + tkb + pe
    return replace(
        alloc,
        l_id=alloc.l_bi * id_cost / total,
        l_tkb=alloc.l_bi * tkb / total,
        l_pe=alloc.l_bi * pe / total,
    )


# ---------- Round split ----------


def solve_round_split(
    l_tot: int,
    p: float,
    noise: NoiseModel,
    budget: EpsilonBudget,
    gamma_fn: Optional[GammaFn] = None,
    integral: bool = False,
) -> RoundAllocation:
    """
    Largest L whose leftover bipartite rounds still cover the subprotocols.

    Supply minus demand per pair falls monotonically with L, so an integer
    bisection over [0, l_tot] finds the boundary. When even L = 0 leaves the
    pairs short, the zero allocation is returned.
    """
    if l_tot < 1:
        raise DomainError(f"l_tot={l_tot} must be at least 1")
    if not (0.0 < p < 1.0):
        raise DomainError(f"p={p!r} outside (0, 1)")
    N = noise.n_parties

    def slack(L: int) -> Tuple[float, float, float]:
        supply, p_b = pair_supply(l_tot - L, noise, budget, gamma_fn, integral)
        demand = pair_demand(N, L, p, budget, integral)
        return supply - demand, supply, p_b

    if slack(0)[0] < 0.0:
        logger.debug("split l_tot=%d p=%.3g infeasible at L=0", l_tot, p)
        return zero_allocation(N, l_tot, p, budget)

    lo, hi = 0, l_tot
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if slack(mid)[0] >= 0.0:
            lo = mid
        else:
            hi = mid

    if lo == 0:
        return zero_allocation(N, l_tot, p, budget)

    _, supply, p_b = slack(lo)
    report = finite_key_length(lo, p, noise, budget, N, gamma_fn=gamma_fn, rounds=l_tot)
    alloc = RoundAllocation(
        n_parties=N,
        l_tot=l_tot,
        l_multi=lo,
        l_bi=l_tot - lo,
        p=p,
        l_id=0.0,
        l_tkb=0.0,
        l_pe=0.0,
        budget=budget,
        rate=report.rate,
        p_b=p_b,
        gamma=report.gamma,
        key_length=report.key_length,
        pair_supply=supply,
        pair_demand=pair_demand(N, lo, p, budget, integral),
    )
    return partition_bipartite_rounds(alloc)
