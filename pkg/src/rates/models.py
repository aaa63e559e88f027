# src/rates/models.py

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, Iterator, List, Mapping, Optional, Tuple

from src.errors import DomainError


Pair = Tuple[int, int]

MAX_ERROR_RATE: float = 0.5  # beyond this a channel carries no information


def pair_key(a: int, b: int) -> Pair:
    """Normalise two party indices into an unordered pair (q, t) with q < t."""
    if a == b:
        raise DomainError(f"a pair needs two distinct parties, got ({a}, {b})")
    return (a, b) if a < b else (b, a)


def all_pairs(n_parties: int) -> List[Pair]:
    """Every unordered pair of an n-party network, lexicographically ordered."""
    return list(combinations(range(n_parties), 2))


def n_pairs(n_parties: int) -> int:
    return math.comb(n_parties, 2)


def _check_rate(name: str, value: float) -> None:
    if not (0.0 <= value <= MAX_ERROR_RATE) or math.isnan(value):
        raise DomainError(f"{name}={value!r} outside [0, {MAX_ERROR_RATE}]")


def _check_eps(name: str, value: float) -> None:
    if not (0.0 < value < 1.0):
        raise DomainError(f"{name}={value!r} outside (0, 1)")


@dataclass(frozen=True)
class NoiseModel:
    """
    Error statistics of an N-user star network.

    Attributes
    ----------
    n_parties : int
        Number of users N (>= 3 for a conference; 2 is accepted for the
        two-party edge cases of the bipartite formulas).
    q_x : float
        Global X-basis error of the N-party GHZ resource.
    q_z : float
        Maximum pairwise Z-basis error among keyholder pairs.
    pairwise : Mapping[Pair, Tuple[float, float]]
        Bell-pair error rates (q_xb, q_zb) for every unordered pair.
    ghz_pairwise_z : Mapping[Pair, float]
        Optional per-pair Z error of the GHZ key rounds; pairs not listed use q_z.
    """

    n_parties: int
    q_x: float
    q_z: float
    pairwise: Mapping[Pair, Tuple[float, float]]
    ghz_pairwise_z: Mapping[Pair, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n_parties < 2:
            raise DomainError(f"n_parties={self.n_parties} must be at least 2")
        _check_rate("q_x", self.q_x)
        _check_rate("q_z", self.q_z)

        expected = set(all_pairs(self.n_parties))
        if set(self.pairwise) != expected:
            missing = sorted(expected - set(self.pairwise))
            extra = sorted(set(self.pairwise) - expected)
            raise DomainError(
                f"pairwise table must hold exactly C({self.n_parties},2)={len(expected)} "
                f"entries (missing {missing}, unexpected {extra})"
            )
        for (q, t), (q_xb, q_zb) in self.pairwise.items():
            _check_rate(f"pairwise[{q}-{t}].q_xb", q_xb)
            _check_rate(f"pairwise[{q}-{t}].q_zb", q_zb)

        for (q, t), value in self.ghz_pairwise_z.items():
            if (q, t) not in expected:
                raise DomainError(f"ghz_pairwise_z has unknown pair {q}-{t}")
            _check_rate(f"ghz_pairwise_z[{q}-{t}]", value)

    # ---------- Constructors ----------

    @classmethod
    def symmetric(
        cls,
        n_parties: int,
        q_x: float,
        q_z: float,
        q_xb: Optional[float] = None,
        q_zb: Optional[float] = None,
    ) -> "NoiseModel":
        """Same Bell-pair rates on every pair (defaults to the GHZ rates)."""
        q_xb = q_x if q_xb is None else q_xb
        q_zb = q_z if q_zb is None else q_zb
        table = {pair: (q_xb, q_zb) for pair in all_pairs(n_parties)}
        return cls(n_parties=n_parties, q_x=q_x, q_z=q_z, pairwise=table)

    @classmethod
    def noiseless(cls, n_parties: int) -> "NoiseModel":
        return cls.symmetric(n_parties, 0.0, 0.0)

    # ---------- Lookups ----------

    def pairs(self) -> Iterator[Pair]:
        return iter(all_pairs(self.n_parties))

    def pair_rates(self, a: int, b: int) -> Tuple[float, float]:
        return self.pairwise[pair_key(a, b)]

    def ghz_z(self, a: int, b: int) -> float:
        """Z error between two parties' GHZ key bits."""
        return self.ghz_pairwise_z.get(pair_key(a, b), self.q_z)

    def is_symmetric(self) -> bool:
        return len(set(self.pairwise.values())) <= 1


@dataclass(frozen=True)
class EpsilonBudget:
    """
    The security parameters whose composition gives epsilon_tot.

    r_v is the Veto repetition count; the primed (``_b``) values belong to the
    pairwise QKD links.
    """

    r_v: int
    eps_enc: float
    eps_ec: float
    eps_x: float
    eps_pa: float
    eps_ec_b: float
    eps_x_b: float
    eps_pa_b: float

    def __post_init__(self) -> None:
        if int(self.r_v) != self.r_v or self.r_v < 1:
            raise DomainError(f"r_v={self.r_v!r} must be an integer >= 1")
        for name in (
            "eps_enc",
            "eps_ec",
            "eps_x",
            "eps_pa",
            "eps_ec_b",
            "eps_x_b",
            "eps_pa_b",
        ):
            _check_eps(name, getattr(self, name))

    @classmethod
    def uniform(cls, r_v: int, eps: float) -> "EpsilonBudget":
        return cls(r_v, eps, eps, eps, eps, eps, eps, eps)


@dataclass(frozen=True)
class KeyRateReport:
    """
    A key length with its term-by-term breakdown.

    ``key_length`` is the raw (possibly negative) value; ``rate`` is clamped
    at zero and divided by ``rounds``.
    """

    rate: float
    key_length: float
    components: Dict[str, float]
    rounds: float
    gamma: float = 0.0

    @classmethod
    def from_components(
        cls, components: Dict[str, float], rounds: float, gamma: float = 0.0
    ) -> "KeyRateReport":
        key_length = math.fsum(components.values())
        rate = max(key_length, 0.0) / rounds if rounds > 0 else 0.0
        return cls(
            rate=rate,
            key_length=key_length,
            components=dict(components),
            rounds=rounds,
            gamma=gamma,
        )

    @property
    def secure_bits(self) -> int:
        """Whole key bits the report allows (0 when the length is negative)."""
        return max(int(math.floor(self.key_length)), 0)
