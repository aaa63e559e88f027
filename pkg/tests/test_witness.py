# tests/test_witness.py

from __future__ import annotations

import pytest

from src.errors import ConfigError, DomainError
from src.netsim.sampler import SeededSampler
from src.witness.fidelity import (
    WitnessReport,
    fidelity_lower_bound,
    x_stabilizer_expectation,
    zz_projector_expectation,
)
from src.witness.tallies import BasisTallies, load_tallies, simulate_tallies


def _write(tmp_path, text: str):
    path = tmp_path / "tallies.csv"
    path.write_text(text)
    return path


def _uniform(n: int) -> dict:
    return {format(i, f"0{n}b"): 10 for i in range(2**n)}


# ---------- Expectations ----------


def test_ideal_ghz_tallies_give_unit_fidelity() -> None:
    tallies = BasisTallies(
        n_qubits=3,
        x_counts={"000": 25, "011": 25, "101": 25, "110": 25},
        z_counts={"000": 50, "111": 50},
    )
    report = WitnessReport.from_tallies(tallies)
    assert report.exp_x == 1.0
    assert report.proj_zz == 1.0
    assert report.fidelity == 1.0
    assert report.genuine_multipartite


def test_uniform_tallies_are_not_genuine() -> None:
    tallies = BasisTallies(n_qubits=4, x_counts=_uniform(4), z_counts=_uniform(4))
    assert x_stabilizer_expectation(tallies) == 0.0
    assert zz_projector_expectation(tallies) == pytest.approx(2 / 16)
    report = WitnessReport.from_tallies(tallies)
    assert report.fidelity == pytest.approx((2 * 2 / 16 - 1) / 2)
    assert not report.genuine_multipartite


def test_fidelity_formula() -> None:
    assert fidelity_lower_bound(0.858, 0.894) == pytest.approx(0.823, abs=1e-3)
    assert fidelity_lower_bound(0.0, 0.75) == pytest.approx(0.25)
    assert fidelity_lower_bound(-1.0, 0.0) == -1.0


def test_fidelity_domain_checks() -> None:
    with pytest.raises(DomainError):
        fidelity_lower_bound(1.2, 0.5)
    with pytest.raises(DomainError):
        fidelity_lower_bound(0.5, -0.1)


def test_tallies_validation() -> None:
    with pytest.raises(DomainError):
        BasisTallies(n_qubits=3, x_counts={"00": 1}, z_counts={"000": 1})
    with pytest.raises(DomainError):
        BasisTallies(n_qubits=3, x_counts={"0a0": 1}, z_counts={"000": 1})
    with pytest.raises(DomainError):
        BasisTallies(n_qubits=3, x_counts={"000": 1}, z_counts={"000": 0})
    with pytest.raises(DomainError):
        BasisTallies(n_qubits=1, x_counts={"0": 1}, z_counts={"0": 1})


# ---------- Tally files ----------


def test_load_tallies_sums_repeated_rows(tmp_path) -> None:
    path = _write(
        tmp_path,
        "basis,outcome_bits,count\nX,000,3\nx,000,2\nX,011,5\n\nZ,111,4\n",
    )
    tallies = load_tallies(path)
    assert tallies.n_qubits == 3
    assert dict(tallies.x_counts) == {"000": 5, "011": 5}
    assert tallies.z_total == 4


@pytest.mark.parametrize(
    "text, line, field",
    [
        ("", 1, None),
        ("basis,bits,count\nX,000,1\n", 1, None),
        ("basis,outcome_bits,count\nX,000\n", 2, None),
        ("basis,outcome_bits,count\nX,000,1\nY,000,1\n", 3, "basis"),
        ("basis,outcome_bits,count\nX,0a0,1\n", 2, "outcome_bits"),
        ("basis,outcome_bits,count\nX,000,1\nZ,00,1\n", 3, "outcome_bits"),
        ("basis,outcome_bits,count\nX,000,many\n", 2, "count"),
        ("basis,outcome_bits,count\nX,000,-1\n", 2, "count"),
        ("basis,outcome_bits,count\n", 2, None),
    ],
)
def test_load_tallies_reports_location(tmp_path, text, line, field) -> None:
    with pytest.raises(ConfigError) as info:
        load_tallies(_write(tmp_path, text))
    assert info.value.line == line
    assert info.value.field == field


def test_load_tallies_needs_both_bases(tmp_path) -> None:
    with pytest.raises(ConfigError):
        load_tallies(_write(tmp_path, "basis,outcome_bits,count\nX,000,1\n"))


# ---------- Simulated tallies ----------


def test_simulated_noiseless_state_is_ideal() -> None:
    tallies = simulate_tallies(4, 0.0, 0.0, 2000, SeededSampler(1))
    assert tallies.x_total == 2000
    assert tallies.z_total == 2000
    assert set(tallies.z_counts) <= {"0000", "1111"}
    assert WitnessReport.from_tallies(tallies).fidelity == 1.0


def test_simulated_phase_noise_lowers_fidelity() -> None:
    tallies = simulate_tallies(4, 0.0885, 0.0, 40_000, SeededSampler(2))
    report = WitnessReport.from_tallies(tallies)
    assert report.exp_x == pytest.approx(1 - 2 * 0.0885, abs=0.015)
    assert report.proj_zz == 1.0
    assert report.fidelity == pytest.approx(1 - 0.0885, abs=0.01)
    assert report.genuine_multipartite


def test_simulate_tallies_is_deterministic() -> None:
    first = simulate_tallies(3, 0.05, 0.02, 500, SeededSampler(3))
    second = simulate_tallies(3, 0.05, 0.02, 500, SeededSampler(3))
    assert first == second
    with pytest.raises(DomainError):
        simulate_tallies(3, 0.05, 0.02, 0, SeededSampler(3))
