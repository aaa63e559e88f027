# src/protocol/config.py

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import FrozenSet, Optional

import numpy as np

from src.errors import DomainError
from src.netsim.roles import RoleAssignment
from src.rates.finite import GammaFn, GammaForm, gamma_function
from src.rates.models import MAX_ERROR_RATE, NoiseModel


FULLY_THETA: float = 0.75  # conference share of the epsilon budget in fully-variant runs


class Variant(Enum):
    AQCKA_M = "aqcka_m"
    AQCKA_B = "aqcka_b"
    FULLY_AQCKA_M = "fully_aqcka_m"
    FULLY_AQCKA_B = "fully_aqcka_b"

    @property
    def is_fully(self) -> bool:
        return self in (Variant.FULLY_AQCKA_M, Variant.FULLY_AQCKA_B)

    @property
    def is_multipartite(self) -> bool:
        return self in (Variant.AQCKA_M, Variant.FULLY_AQCKA_M)


class KPreMode(Enum):
    TRUSTED = "trusted"  # drawn from the run's sampler
    SUPPLIED = "supplied"  # bits handed over from an earlier run


@dataclass(frozen=True)
class ProtocolConfig:
    """
    Everything one protocol run needs.

    ``noise`` holds the thresholds the run is dimensioned and tested
    against; ``channel`` the rates actually sampled (``noise`` when unset).
    ``l_multi`` and ``p`` fix the round split of the fully-multipartite
    variant, which has no optimizer. ``candidates`` lists every party that
    tries to become the sender; by default only ``roles.sender`` does.
    """

    variant: Variant
    roles: RoleAssignment
    noise: NoiseModel
    l_tot: int
    eps_tot_target: float = 1e-8
    seed: int = 0
    q_z_threshold: Optional[float] = None
    channel: Optional[NoiseModel] = None
    gamma_form: GammaForm = GammaForm.BINOMIAL_TAIL
    k_pre_mode: KPreMode = KPreMode.TRUSTED
    k_pre: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    l_multi: Optional[int] = None
    p: Optional[float] = None
    candidates: Optional[FrozenSet[int]] = None

    def __post_init__(self) -> None:
        n = self.noise.n_parties
        if self.roles.n_parties != n:
            raise DomainError(
                f"roles for {self.roles.n_parties} parties, noise for {n}"
            )
        if self.channel is not None and self.channel.n_parties != n:
            raise DomainError(
                f"channel for {self.channel.n_parties} parties, noise for {n}"
            )
        if self.l_tot < 1:
            raise DomainError(f"l_tot={self.l_tot} must be at least 1")
        if not (0.0 < self.eps_tot_target < 1.0):
            raise DomainError(f"eps_tot={self.eps_tot_target!r} outside (0, 1)")
        if self.q_z_threshold is not None and not (0.0 <= self.q_z_threshold <= MAX_ERROR_RATE):
            raise DomainError(f"q_z_threshold={self.q_z_threshold!r} outside [0, 0.5]")
        if self.k_pre_mode is KPreMode.SUPPLIED and self.k_pre is None:
            raise DomainError("k_pre_mode 'supplied' needs k_pre bits")
        if self.variant is Variant.FULLY_AQCKA_M:
            if self.l_multi is None or self.p is None:
                raise DomainError("fully_aqcka_m needs l_multi and p")
            if not (0 < self.l_multi <= self.l_tot):
                raise DomainError(f"l_multi={self.l_multi} outside 1..{self.l_tot}")
            if not (0.0 < self.p < 1.0):
                raise DomainError(f"p={self.p!r} outside (0, 1)")
        if self.candidates is not None and not set(self.candidates) <= set(range(n)):
            raise DomainError(f"candidates {sorted(self.candidates)} outside 0..{n - 1}")

    @property
    def n_parties(self) -> int:
        return self.noise.n_parties

    @property
    def sampled_channel(self) -> NoiseModel:
        return self.channel or self.noise

    @property
    def ec_threshold(self) -> float:
        return self.noise.q_z if self.q_z_threshold is None else self.q_z_threshold

    @property
    def gamma_fn(self) -> GammaFn:
        return gamma_function(self.gamma_form)
