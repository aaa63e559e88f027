# tests/test_rates.py

from __future__ import annotations

import math

import numpy as np
import pytest

from src.errors import DomainError
from src.rates.asymptotic import (
    akr_bipartite,
    akr_by_keyholder_count,
    akr_fully_bipartite,
    akr_fully_multipartite,
    akr_multipartite,
    fully_advantage_curve,
    multipartite_advantage,
    pairwise_sigma,
)
from src.rates.entropy import bernoulli_divergence, binary_entropy, error_entropy
from src.rates.finite import (
    GammaForm,
    bipartite_conference_key_length,
    bipartite_finite_key_length,
    epsilon_total,
    finite_key_length,
    fully_bipartite_conference_key_length,
    fully_multipartite_key_length,
    gamma_correction,
    optimize_bipartite_test_fraction,
)
from src.rates.models import EpsilonBudget, KeyRateReport, NoiseModel, all_pairs, pair_key


def _reference_noise(n: int = 4) -> NoiseModel:
    return NoiseModel.symmetric(n, 0.0304, 0.01589, q_xb=0.0304, q_zb=0.0144)


# ---------- Entropy ----------


def test_binary_entropy_endpoints_and_midpoint() -> None:
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.5) == pytest.approx(1.0)


def test_binary_entropy_is_vectorised_and_symmetric() -> None:
    x = np.array([0.01, 0.1, 0.3])
    assert np.allclose(binary_entropy(x), binary_entropy(1.0 - x))


def test_binary_entropy_rejects_out_of_range() -> None:
    with pytest.raises(DomainError):
        binary_entropy(1.2)
    with pytest.raises(DomainError):
        binary_entropy(float("nan"))


def test_error_entropy_saturates_past_half() -> None:
    assert error_entropy(0.7) == pytest.approx(1.0)


def test_bernoulli_divergence_zero_on_equal_laws() -> None:
    assert bernoulli_divergence(0.2, 0.2) == pytest.approx(0.0, abs=1e-15)
    assert bernoulli_divergence(0.0, 0.5) == pytest.approx(math.log(2.0))


# ---------- Noise model ----------


def test_noise_model_requires_complete_pair_table() -> None:
    table = {pair: (0.01, 0.01) for pair in all_pairs(4)}
    del table[(2, 3)]
    with pytest.raises(DomainError):
        NoiseModel(4, 0.01, 0.01, table)


def test_noise_model_rejects_rate_above_half() -> None:
    with pytest.raises(DomainError):
        NoiseModel.symmetric(3, 0.6, 0.01)


def test_pair_key_orders_and_rejects_self_pairs() -> None:
    assert pair_key(3, 1) == (1, 3)
    with pytest.raises(DomainError):
        pair_key(2, 2)


def test_key_rate_report_clamps_negative_lengths() -> None:
    report = KeyRateReport.from_components({"a": 10.0, "b": -25.5}, rounds=100)
    assert report.key_length == pytest.approx(-15.5)
    assert report.rate == 0.0
    assert report.secure_bits == 0


# ---------- Asymptotic rates ----------


def test_akr_multipartite_at_reference_noise() -> None:
    assert akr_multipartite(0.0304, 0.01589) == pytest.approx(0.685910, abs=1e-5)


def test_akr_bipartite_at_reference_noise() -> None:
    assert akr_bipartite(_reference_noise()) == pytest.approx(0.057907, abs=1e-5)


def test_akr_noiseless_limits() -> None:
    assert akr_multipartite(0.0, 0.0) == 1.0
    assert akr_bipartite(NoiseModel.noiseless(6)) == pytest.approx(1.0 / 30.0)


def test_pairwise_sigma_matches_entropy_form_and_clamps() -> None:
    expected = 1.0 - binary_entropy(0.0304) - binary_entropy(0.0144)
    assert pairwise_sigma(0.0304, 0.0144) == pytest.approx(expected)
    assert pairwise_sigma(0.0, 0.0) == 1.0
    assert pairwise_sigma(0.2, 0.2) == 0.0
    with pytest.raises(DomainError):
        pairwise_sigma(0.6, 0.0)


@pytest.mark.parametrize("n", [4, 6])
def test_symmetric_advantage_equals_ordered_pair_count(n: int) -> None:
    noise = NoiseModel.symmetric(n, 0.02, 0.01)
    assert multipartite_advantage(noise) == pytest.approx(n * (n - 1), rel=1e-9)


def test_bipartite_rate_vanishes_with_a_dead_pair() -> None:
    table = {pair: (0.01, 0.01) for pair in all_pairs(3)}
    table[(0, 2)] = (0.2, 0.2)
    assert akr_bipartite(NoiseModel(3, 0.01, 0.01, table)) == 0.0


def test_fully_multipartite_equals_multipartite_without_z_errors() -> None:
    noise = NoiseModel.symmetric(4, 0.03, 0.0)
    assert akr_fully_multipartite(0.03, 0.0, noise) == pytest.approx(akr_multipartite(0.03, 0.0))


def test_fully_bipartite_divides_by_other_parties() -> None:
    noise = _reference_noise()
    assert akr_fully_bipartite(noise) == pytest.approx(akr_bipartite(noise) / 3)


def test_fully_bipartite_two_parties_matches_bipartite() -> None:
    noise = NoiseModel.symmetric(2, 0.02, 0.01)
    assert akr_fully_bipartite(noise) == pytest.approx(akr_bipartite(noise))


def test_fully_advantage_curve_tends_to_ceiling() -> None:
    curve = fully_advantage_curve(6, 0.0, [1e-6, 1e-2])
    assert curve[0][0] == 1e-6
    assert curve[0][1] == pytest.approx(150.0, rel=0.01)
    assert curve[1][1] < curve[0][1]


def test_akr_by_keyholder_count_uses_worst_chosen_pair() -> None:
    noise = NoiseModel(
        4,
        0.02,
        0.03,
        {pair: (0.02, 0.02) for pair in all_pairs(4)},
        ghz_pairwise_z={(0, 1): 0.01, (0, 2): 0.02, (0, 3): 0.03},
    )
    rates = akr_by_keyholder_count(noise, sender=0)
    assert sorted(rates) == [2, 3, 4]
    assert rates[2] == pytest.approx(akr_multipartite(0.02, 0.01))
    assert rates[4] == pytest.approx(akr_multipartite(0.02, 0.03))
    assert rates[2] > rates[3] > rates[4]


# ---------- Finite-size corrections ----------


def test_binomial_tail_gamma_reference_value() -> None:
    gamma = gamma_correction(0.03, 9.5e5, 5e4, 1e-10, GammaForm.BINOMIAL_TAIL)
    assert gamma == pytest.approx(0.0075751542, rel=1e-6)


def test_gamma_forms_shrink_with_more_tests() -> None:
    for form in GammaForm:
        small = gamma_correction(0.03, 1e6, 1e4, 1e-10, form)
        large = gamma_correction(0.03, 1e6, 1e5, 1e-10, form)
        assert large < small


def test_gamma_is_capped_at_half() -> None:
    gamma = gamma_correction(0.45, 1e3, 3.0, 1e-10, GammaForm.GAUSSIAN)
    assert 0.45 + gamma <= 0.5 + 1e-12


def test_gamma_rejects_empty_test_set() -> None:
    with pytest.raises(DomainError):
        gamma_correction(0.03, 1e5, 0.0, 1e-10)


def test_finite_key_length_matches_its_components() -> None:
    budget = EpsilonBudget.uniform(30, 1e-10)
    constant_gamma = lambda q, n_key, n_test, eps: 0.01  # noqa: E731
    L, p = 1e6, 0.02
    report = finite_key_length(L, p, _reference_noise(), budget, 4, gamma_fn=constant_gamma)
    expected = (
        L * (1 - p) * (1 - binary_entropy(0.0404) - binary_entropy(0.01589))
        - math.log2(6 / 1e-10)
        - 2 * math.log2(1 / 2e-10)
        - L * binary_entropy(p)
        - 4
    )
    assert report.key_length == pytest.approx(expected, rel=1e-9)
    assert report.gamma == 0.01


def test_finite_key_length_non_increasing_in_error_rates() -> None:
    budget = EpsilonBudget.uniform(30, 1e-10)
    errors = np.linspace(0.005, 0.15, 16)

    def length(q_x: float, q_z: float) -> float:
        noise = NoiseModel.symmetric(4, q_x, q_z, q_xb=0.0304, q_zb=0.0144)
        return finite_key_length(1e6, 0.01, noise, budget, 4).key_length

    by_qx = [length(float(q), 0.01589) for q in errors]
    by_qz = [length(0.0304, float(q)) for q in errors]
    assert all(later <= earlier + 1e-9 for earlier, later in zip(by_qx, by_qx[1:]))
    assert all(later <= earlier + 1e-9 for earlier, later in zip(by_qz, by_qz[1:]))
    assert by_qx[-1] < by_qx[0] and by_qz[-1] < by_qz[0]


def test_fully_multipartite_length_drops_tkd_and_constant() -> None:
    budget = EpsilonBudget.uniform(30, 1e-10)
    noise = _reference_noise()
    plain = finite_key_length(1e6, 0.02, noise, budget, 4)
    fully = fully_multipartite_key_length(1e6, 0.02, noise, budget, 4)
    assert fully.key_length - plain.key_length == pytest.approx(1e6 * binary_entropy(0.02) + 4)


def test_epsilon_total_composition() -> None:
    budget = EpsilonBudget.uniform(30, 1e-10)
    assert epsilon_total(budget, 4) == pytest.approx(4.031323e-9, rel=1e-6)


def test_bipartite_length_is_vectorised_over_test_fraction() -> None:
    budget = EpsilonBudget.uniform(30, 1e-10)
    lengths = bipartite_finite_key_length(1e5, np.array([0.01, 0.05]), 0.0304, 0.0144, budget)
    assert lengths.shape == (2,)


def test_optimized_test_fraction_beats_grid_neighbours() -> None:
    budget = EpsilonBudget.uniform(30, 1e-10)
    best_len, best_p = optimize_bipartite_test_fraction(1e5, 0.0304, 0.0144, budget)
    for p in (best_p * 0.5, best_p * 2.0):
        assert bipartite_finite_key_length(1e5, p, 0.0304, 0.0144, budget) <= best_len + 1e-6


def test_fully_bipartite_conference_length_below_bipartite() -> None:
    budget = EpsilonBudget.uniform(30, 1e-10)
    noise = _reference_noise()
    plain = bipartite_conference_key_length(1e7, 0.02, noise, budget, 4)
    fully = fully_bipartite_conference_key_length(1e7, 0.02, noise, budget, 4)
    assert 0 < fully.key_length < plain.key_length
