# src/witness/fidelity.py

from __future__ import annotations

from dataclasses import dataclass

from src.errors import DomainError
from src.witness.tallies import BasisTallies


GENUINE_THRESHOLD: float = 0.5


def x_stabilizer_expectation(tallies: BasisTallies) -> float:
    """<X...X>: +1 for even-parity outcomes, -1 for odd, averaged over the X tallies."""
    total = tallies.x_total
    if total == 0:
        raise DomainError("no X-basis outcomes")
    signed = sum(
        (-1 if outcome.count("1") % 2 else 1) * count
        for outcome, count in tallies.x_counts.items()
    )
    return signed / total


def zz_projector_expectation(tallies: BasisTallies) -> float:
    """Empirical probability that all N Z outcomes agree."""
    total = tallies.z_total
    if total == 0:
        raise DomainError("no Z-basis outcomes")
    equal = sum(
        count for outcome, count in tallies.z_counts.items() if len(set(outcome)) == 1
    )
    return equal / total


def fidelity_lower_bound(exp_x: float, proj_zz: float) -> float:
    """
    Lower bound on the GHZ fidelity from the stabilizer witness.

    Parameters
    ----------
    exp_x : float
        <X^{(x)N}> in [-1, 1].
    proj_zz : float
        Expectation of the all-equal Z projector, in [0, 1].
    """
    if not (-1.0 <= exp_x <= 1.0):
        raise DomainError(f"exp_x={exp_x!r} outside [-1, 1]")
    if not (0.0 <= proj_zz <= 1.0):
        raise DomainError(f"proj_zz={proj_zz!r} outside [0, 1]")
    return (exp_x + 2.0 * proj_zz - 1.0) / 2.0


@dataclass(frozen=True)
class WitnessReport:
    n_qubits: int
    exp_x: float
    proj_zz: float
    fidelity: float

    @property
    def genuine_multipartite(self) -> bool:
        return self.fidelity > GENUINE_THRESHOLD

    @classmethod
    def from_tallies(cls, tallies: BasisTallies) -> "WitnessReport":
        exp_x = x_stabilizer_expectation(tallies)
        proj_zz = zz_projector_expectation(tallies)
        return cls(
            n_qubits=tallies.n_qubits,
            exp_x=exp_x,
            proj_zz=proj_zz,
            fidelity=fidelity_lower_bound(exp_x, proj_zz),
        )
