import math

import pytest

from ifslab import constants
from ifslab.exceptions import HypothesisError
from ifslab.ifs_model import IFSSpec, MapSpec, check_l2_condition


def test_c_double_prime_t3(reference_ifs):
    assert constants.c_double_prime_t3(reference_ifs, 0.1) == pytest.approx(0.808081, rel=1e-6)
    assert constants.c_double_prime_t3(reference_ifs, 0.01) == pytest.approx(0.980098, rel=1e-6)
    assert constants.c_double_prime_t3(reference_ifs, 0.0) == pytest.approx(1.0)


def test_c_double_prime_t3_inadmissible(reference_ifs):
    with pytest.raises(HypothesisError, match="not admissible"):
        constants.c_double_prime_t3(reference_ifs, 0.6)


def test_c_eps_m_lemma1(reference_ifs):
    assert constants.c_eps_m_lemma1(reference_ifs, 0.1, 10) == pytest.approx(0.805501, rel=1e-5)
    assert constants.c_eps_m_lemma1(reference_ifs, 0.1, math.inf) == pytest.approx(
        constants.c_double_prime_t3(reference_ifs, 0.1)
    )


def test_c_eps_m_lemma1_small_m(reference_ifs, caplog):
    assert constants.c_eps_m_lemma1(reference_ifs, 0.1, 0) < 0.0
    assert "is not positive" in caplog.text


def test_c_eps_m_increases_with_m(reference_ifs):
    values = [constants.c_eps_m_lemma1(reference_ifs, 0.05, m) for m in (2, 4, 8, 16)]
    assert values == sorted(values)
    assert values[-1] <= constants.c_double_prime_t3(reference_ifs, 0.05)


def test_lemma1_correction_needs_large_m():
    ifs = IFSSpec(
        maps=[MapSpec.affine(0.9, -0.5), MapSpec.affine(0.9, 0.5)], probabilities=[0.5, 0.5]
    )
    with pytest.raises(HypothesisError, match="too small"):
        constants.lemma1_correction(ifs, 0.2, 0)


def test_lemma1_regime_bounds(reference_ifs):
    bounds = constants.lemma1_regime_bounds(reference_ifs, 0.01, 10)
    assert list(bounds) == [(1, 0)]
    regimes = bounds[(1, 0)]
    assert min(regimes.values()) == pytest.approx(
        constants.c_eps_m_lemma1(reference_ifs, 0.01, 10)
    )
    assert regimes["middle"] > regimes["upper"]


@pytest.mark.parametrize(
    "epsilon,value",
    [(0.01, 0.858756), (0.0, 0.833333), (0.1, 1.131687)],
)
def test_b_factor(reference_ifs, epsilon, value):
    assert constants.b_factor(reference_ifs, epsilon) == pytest.approx(value, rel=1e-5)


def test_b_factor_limit(reference_ifs, t5_ifs):
    for ifs in (reference_ifs, t5_ifs):
        limit = constants.b_factor(ifs, 1e-12)
        assert limit == pytest.approx(check_l2_condition(ifs).value, abs=1e-9)


def test_bounds_report_t3(reference_ifs):
    report = constants.bounds_report(reference_ifs, 0.01, m=10)
    assert report.model == "T3"
    assert report.b_factor == pytest.approx(0.858756, rel=1e-5)
    assert report.c_double_prime == pytest.approx(0.980098, rel=1e-5)
    assert report.c_prime == pytest.approx(15.204, rel=1e-3)
    assert report.l2_bound == pytest.approx(152.04, rel=1e-3)
    assert report.c_eps_m < report.c_double_prime
    assert report.sigma is None
    assert 0.0 < report.admissible_epsilon < report.max_epsilon


def test_bounds_report_t5(t5_ifs):
    report = constants.bounds_report(t5_ifs, sigma=0.5)
    assert report.model == "T5"
    assert report.c_double_prime == pytest.approx(0.75)
    assert report.sigma == 0.5
    assert report.b_factor < 1.0


def test_bounds_report_not_contracting(reference_ifs):
    with pytest.raises(HypothesisError, match="recursion factor not contracting"):
        constants.bounds_report(reference_ifs, 0.1)


def test_bounds_report_single_map(point_mass_ifs):
    with pytest.raises(HypothesisError):
        constants.bounds_report(point_mass_ifs)


def test_bounds_report_dict_and_table(reference_ifs):
    report = constants.bounds_report(reference_ifs, 0.01, m=math.inf)
    assert report.to_dict()["m"] == "inf"
    assert report.c_eps_m == pytest.approx(report.c_double_prime)
    table = report.table()
    assert "C''" in table
    assert "sigma" not in table


def test_c_double_prime_t5_sigma(t5_ifs):
    with pytest.raises(HypothesisError, match="sigma"):
        constants.c_double_prime_t5(t5_ifs, 1.0)
    assert constants.c_double_prime_t5(t5_ifs, 0.25) == pytest.approx(0.375)


def test_t5_corner_condition(t5_ifs):
    result = constants.t5_corner_condition(t5_ifs, 0.01)
    assert result.passes
    assert result.value == pytest.approx(0.5 * 1.10 - 0.12)


def test_max_admissible_epsilon(reference_ifs):
    eps = constants.max_admissible_epsilon(reference_ifs)
    assert eps == pytest.approx(0.0601, abs=1e-4)
    assert constants.admissibility_margin(reference_ifs, eps) >= 0.0
    assert constants.admissibility_margin(reference_ifs, eps + 1e-4) < 0.0


def test_j_recursion_bound_empty(reference_ifs):
    assert constants.j_recursion_bound(reference_ifs, 0.01, 10, 0, 123.0) == pytest.approx(123.0)


def test_j_recursion_bound_limit(reference_ifs):
    c_eps_m = constants.c_eps_m_lemma1(reference_ifs, 0.01, 10)
    b = constants.b_factor(reference_ifs, 0.01)
    expected = 8.0 / (c_eps_m * 0.01 * (1.0 - b))
    assert constants.j_recursion_bound(reference_ifs, 0.01, 10, math.inf, 0.0) == pytest.approx(
        expected
    )


def test_j_recursion_bound_five_steps(reference_ifs):
    c_eps_m = constants.c_eps_m_lemma1(reference_ifs, 0.01, 10)
    b = constants.b_factor(reference_ifs, 0.01)
    expected = 8.0 / (c_eps_m * 0.01) * (1.0 - b**5) / (1.0 - b) + b**5 * 100.0
    value = constants.j_recursion_bound(reference_ifs, 0.01, 10, 5, 100.0)
    assert value == pytest.approx(expected)
    assert value == pytest.approx(3134.3, rel=1e-3)


def test_j_recursion_bound_needs_noise(reference_ifs):
    with pytest.raises(HypothesisError):
        constants.j_recursion_bound(reference_ifs, 0.0, 10, 1, 1.0)
