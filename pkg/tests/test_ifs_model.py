import logging
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ifslab import ifs_model
from ifslab.exceptions import DomainError, HypothesisError, InvalidIFSSpec
from ifslab.ifs_model import ADDITIVE_RATIO, IFSSpec, MapSpec


def _affine_ifs(lams, fixpoints, probabilities=None, **kwargs):
    probabilities = probabilities or [1.0 / len(lams)] * len(lams)
    return IFSSpec(
        maps=[MapSpec.affine(lam, a) for lam, a in zip(lams, fixpoints)],
        probabilities=probabilities,
        **kwargs
    )


def test_evaluate_affine():
    assert ifs_model.evaluate(MapSpec.affine(0.6, -0.5), 0.0) == pytest.approx(-0.2)
    assert ifs_model.evaluate(MapSpec.affine(0.6, 0.5), 0.5) == pytest.approx(0.5)


def test_evaluate_polynomial():
    map_spec = MapSpec.polynomial((0.0, 0.5, 0.0, 0.0), 0.0)
    assert ifs_model.evaluate(map_spec, 0.8) == pytest.approx(0.4)
    assert map_spec.lambda_min == pytest.approx(0.5)
    assert map_spec.lambda_max == pytest.approx(0.5)


@pytest.mark.parametrize("x", [1.0, -1.5, 2.0])
def test_evaluate_outside_domain(x):
    with pytest.raises(DomainError):
        ifs_model.evaluate(MapSpec.affine(0.6, 0.5), x)


@pytest.mark.parametrize(
    "data,message",
    [
        ({"kind": "affine", "fixpoint": 0.0}, "missing key"),
        ({"kind": "polynomial", "coefficients": [0, 1], "fixpoint": 0.0}, "four coefficients"),
        ({"kind": "spline", "fixpoint": 0.0}, "Unknown map kind"),
    ],
)
def test_map_from_dict_invalid(data, message):
    with pytest.raises(InvalidIFSSpec, match=message):
        MapSpec.from_dict(data)


def test_map_dict_representation():
    data = {"kind": "affine", "lambda": 0.6, "fixpoint": -0.5}
    assert MapSpec.from_dict(data).to_dict() == data


def test_ifs_structure_errors():
    with pytest.raises(InvalidIFSSpec, match="probabilities"):
        IFSSpec(maps=[MapSpec.affine(0.5, 0.0)], probabilities=[0.5, 0.5])
    with pytest.raises(InvalidIFSSpec, match="perturbation"):
        IFSSpec(maps=[MapSpec.affine(0.5, 0.0)], probabilities=[1.0], perturbation="Other")
    with pytest.raises(InvalidIFSSpec, match="epsilon"):
        IFSSpec(maps=[MapSpec.affine(0.5, 0.0)], probabilities=[1.0], epsilon=-0.1)


def test_slab_bounds():
    ifs = _affine_ifs([0.5, 0.5, 0.5], [-0.5, 0.0, 0.5], [0.25, 0.25, 0.5])
    np.testing.assert_allclose(ifs.slab_bounds, [-1.0, -0.5, 0.0, 1.0])
    assert ifs.slab_bounds[-1] == 1.0


def test_perturbed_map_multiplicative(reference_ifs):
    assert ifs_model.perturbed_map(reference_ifs, 0, 1.0, 0.0) == pytest.approx(-0.2)
    for noise in (0.99, 1.0, 1.01):
        assert ifs_model.perturbed_map(reference_ifs, 1, noise, 0.5) == pytest.approx(0.5)


def test_perturbed_map_additive_ratio():
    ifs = _affine_ifs([0.5, 0.55], [-0.5, 0.5], perturbation=ADDITIVE_RATIO, epsilon=0.01)
    assert ifs_model.perturbed_map(ifs, 1, 0.55, 0.0) == pytest.approx(0.225)


def test_perturbed_map_noise_outside_range(reference_ifs):
    with pytest.raises(DomainError, match="noise"):
        ifs_model.perturbed_map(reference_ifs, 0, 1.5, 0.0)


@given(x=st.floats(min_value=-1.0, max_value=0.999999), u=st.floats(min_value=0.0, max_value=1.0))
def test_perturbed_map_stays_in_domain(x, u):
    ifs = _affine_ifs([0.6, 0.6], [-0.5, 0.5], epsilon=0.01)
    for i in range(2):
        noise = 0.99 + 0.02 * u
        assert -1.0 <= ifs_model.perturbed_map(ifs, i, noise, x) < 1.0


def test_validate_reference(reference_ifs):
    report = ifs_model.validate(reference_ifs)
    assert report.passed
    assert report.failed == []
    assert report.to_dict()["passed"] is True


def test_validate_equal_fixpoints():
    report = ifs_model.validate(_affine_ifs([0.6, 0.6], [0.3, 0.3]))
    assert [check.name for check in report.failed] == ["fixpoints.distinct"]


def test_validate_single_map_pairwise_not_applicable(point_mass_ifs):
    report = ifs_model.validate(point_mass_ifs)
    check = report["fixpoints.distinct"]
    assert check.status == "not applicable"
    assert check.value is None
    assert report.passed

    data = report.to_dict()
    statuses = {entry["name"]: entry["status"] for entry in data["checks"]}
    assert statuses["fixpoints.distinct"] == "not applicable"
    assert statuses["maps[0].lambda_max_below_one"] == "passed"


def test_validate_check_status():
    report = ifs_model.validate(_affine_ifs([0.6, 0.6], [0.3, 0.3]))
    assert report["fixpoints.distinct"].status == "failed"
    assert report["probabilities.sum"].status == "passed"


def test_validate_expanding_map():
    report = ifs_model.validate(_affine_ifs([1.2, 0.6], [0.0, 0.5]))
    assert not report["maps[0].lambda_max_below_one"].passed
    assert report["maps[1].lambda_max_below_one"].passed


def test_validate_perturbed_range_is_warning(caplog):
    ifs = _affine_ifs([0.9, 0.9], [-0.99, 0.99], epsilon=0.5)
    report = ifs_model.validate(ifs)
    check = report["maps[0].perturbed_range"]
    assert not check.passed
    assert check.severity == "warning"
    assert "leaves [-1, 1)" in caplog.text


@pytest.mark.parametrize(
    "lams,probabilities,value,passes",
    [
        ([0.6, 0.6], [0.5, 0.5], 0.5 / 0.6, True),
        ([0.4, 0.4], [0.5, 0.5], 1.25, False),
        ([0.5], [1.0], 2.0, False),
    ],
)
def test_check_l2_condition(lams, probabilities, value, passes):
    fixpoints = [-0.5, 0.5][: len(lams)]
    result = ifs_model.check_l2_condition(_affine_ifs(lams, fixpoints, probabilities))
    assert result.value == pytest.approx(value)
    assert result.passes is passes


@pytest.mark.parametrize(
    "lams,fixpoints,value,passes",
    [
        ([0.5, 0.6], [-0.5, 0.5], 5.5, True),
        ([0.6, 0.6], [-0.5, 0.5], math.inf, True),
        ([0.2, 0.7], [0.0, 0.5], 0.2, False),
    ],
)
def test_check_transversality_a1(lams, fixpoints, value, passes):
    result = ifs_model.check_transversality_a1(_affine_ifs(lams, fixpoints))
    assert result.value == pytest.approx(value)
    assert result.passes is passes


def test_check_transversality_a1_needs_affine():
    ifs = IFSSpec(
        maps=[MapSpec.polynomial((0.0, 0.5, 0.0, 0.0), 0.0), MapSpec.affine(0.5, 0.5)],
        probabilities=[0.5, 0.5],
    )
    with pytest.raises(InvalidIFSSpec):
        ifs_model.check_transversality_a1(ifs)


@pytest.mark.parametrize(
    "fixpoints,value",
    [([-0.5, 0.5], 0.5), ([0.0, 0.5], 0.2), ([-1.0, 1.0], 1.0)],
)
def test_max_epsilon(fixpoints, value):
    assert ifs_model.max_epsilon(_affine_ifs([0.5, 0.5], fixpoints)) == pytest.approx(value)


@given(
    st.lists(
        st.floats(min_value=-0.9, max_value=0.9), min_size=2, max_size=4, unique=True
    ).flatmap(lambda a: st.tuples(st.just(a), st.permutations(a)))
)
def test_max_epsilon_relabeling(fixpoints):
    original, relabeled = fixpoints
    value = ifs_model.max_epsilon(_affine_ifs([0.5] * len(original), original))
    assert ifs_model.max_epsilon(
        _affine_ifs([0.5] * len(relabeled), relabeled)
    ) == pytest.approx(value, rel=1e-12, abs=1e-15)


@given(st.floats(min_value=-0.9, max_value=0.9), st.floats(min_value=-0.9, max_value=0.9))
def test_max_epsilon_symmetric(a, b):
    assert ifs_model.max_epsilon(_affine_ifs([0.5, 0.6], [a, b])) == ifs_model.max_epsilon(
        _affine_ifs([0.6, 0.5], [b, a])
    )


def test_max_epsilon_single_map(point_mass_ifs, caplog):
    assert ifs_model.max_epsilon(point_mass_ifs) == math.inf
    assert "not applicable to a single map" in caplog.text


def test_entropy():
    assert ifs_model.entropy([0.5, 0.5]) == pytest.approx(0.693147, rel=1e-6)
    assert ifs_model.entropy([1.0]) == 0.0


def test_lyapunov_without_noise(reference_ifs):
    ifs = reference_ifs.with_epsilon(0.0)
    estimate = ifs_model.lyapunov_estimate(ifs, 1000, seed=0)
    assert estimate.value == pytest.approx(math.log(0.6), abs=1e-12)
    assert estimate.stderr == pytest.approx(0.0, abs=1e-12)
    assert ifs_model.dimension_bound(ifs, 1000, seed=0) == pytest.approx(1.35692, rel=1e-5)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_lyapunov_without_noise_unequal_ratios(t5_ifs, seed):
    ifs = IFSSpec(
        maps=t5_ifs.maps, probabilities=[0.3, 0.7], perturbation=ADDITIVE_RATIO, epsilon=0.0
    )
    expected = 0.3 * math.log(0.5) + 0.7 * math.log(0.6)
    estimate = ifs_model.lyapunov_estimate(ifs, 20000, seed=seed)
    assert estimate.stderr > 0.0
    assert abs(estimate.value - expected) < 3.0 * estimate.stderr

    multiplicative = IFSSpec(maps=t5_ifs.maps, probabilities=[0.3, 0.7], epsilon=0.0)
    estimate = ifs_model.lyapunov_estimate(multiplicative, 20000, seed=seed)
    assert abs(estimate.value - expected) < 3.0 * estimate.stderr


def test_lyapunov_with_noise_is_close(reference_ifs):
    estimate = ifs_model.lyapunov_estimate(reference_ifs, 20000, seed=1)
    assert abs(estimate.value - math.log(0.6)) < 1e-3


def test_lyapunov_not_contracting():
    ifs = _affine_ifs([1.2], [0.0])
    with pytest.raises(HypothesisError, match="not contracting on average"):
        ifs_model.lyapunov(ifs, 100, seed=0)


def test_lyapunov_bad_sample_count(reference_ifs):
    with pytest.raises(ValueError):
        ifs_model.lyapunov_estimate(reference_ifs, 0, seed=0)


def test_contraction_bound(reference_ifs, t5_ifs):
    assert ifs_model.contraction_bound(reference_ifs) == pytest.approx(0.606)
    assert ifs_model.contraction_bound(t5_ifs) == pytest.approx(0.61)


def test_validate_logs_failures_at_debug(caplog):
    caplog.set_level(logging.DEBUG, logger="ifslab")
    ifs_model.validate(_affine_ifs([0.6, 0.6], [0.3, 0.3]))
    assert "Check fixpoints.distinct failed" in caplog.text
