import pytest

from ifslab import convergence, skewprod
from ifslab.constants import T5
from ifslab.exceptions import HypothesisError
from ifslab.ifs_model import ADDITIVE_RATIO, IFSSpec, MapSpec
from .utils.misc import read_csv


@pytest.fixture(scope="module")
def cube_result():
    ifs = IFSSpec(
        maps=[MapSpec.affine(0.6, -0.5), MapSpec.affine(0.6, 0.5)],
        probabilities=[0.5, 0.5],
        epsilon=0.01,
    )
    return skewprod.pushforward_measure(
        ifs, 0.01, 10, n_points=2000, n_steps=20, seed=0, slice_bins=16
    )


@pytest.mark.parametrize(
    "values,kwargs,expected",
    [
        ([0.3, 0.2, 0.1], {}, True),
        ([0.3, 0.305, 0.1], {}, True),
        ([0.3, 0.35, 0.1], {}, False),
        ([0.3, 0.305, 0.2, 0.205], {}, False),
        ([0.3, 0.305, 0.2, 0.205], {"allowed_inversions": None}, True),
        ([0.3, 0.305], {"tol": 0.001}, False),
        ([], {}, True),
    ],
)
def test_decreasing_with_tolerance(values, kwargs, expected):
    assert convergence.decreasing_with_tolerance(values, **kwargs) is expected


def test_ks_vs_epsilon(reference_ifs):
    study = convergence.ks_vs_epsilon(reference_ifs, [0.2, 0.1, 0.05, 0.025], 5000, seed=1)
    assert study.parameter == "epsilon"
    assert study.values == [0.2, 0.1, 0.05, 0.025]
    assert len(study.distances) == 4
    assert study.decreasing
    assert study.distances[-1] < study.distances[0]


def test_ks_vs_epsilon_additive_ratio(reference_ifs):
    study = convergence.ks_vs_epsilon(
        reference_ifs, [0.2, 0.1, 0.05, 0.025], 5000, seed=1, model=ADDITIVE_RATIO
    )
    assert len(study.distances) == 4
    assert study.decreasing
    assert study.distances[-1] < study.distances[0]

    own = convergence.ks_vs_epsilon(reference_ifs, [0.2, 0.1, 0.05, 0.025], 5000, seed=1)
    assert study.distances != own.distances


def test_ks_vs_epsilon_t5(t5_ifs):
    study = convergence.ks_vs_epsilon(t5_ifs, [0.1, 0.01], 5000, seed=2)
    assert study.distances[1] < study.distances[0]


def test_ks_vs_m(reference_ifs):
    study = convergence.ks_vs_m(
        reference_ifs, 0.05, [2, 4, 6], n_points=500, n_steps=20, n_reference=5000, seed=3
    )
    assert study.parameter == "m"
    assert study.values == [2, 4, 6]
    assert all(0.0 <= distance < 0.1 for distance in study.distances)


def test_invariance_check(reference_ifs):
    result = convergence.invariance_check(reference_ifs, 50000, seed=4)
    assert result.n == 50000
    assert result.ks < 0.02


def test_recursion_check(reference_ifs, cube_result):
    rows = convergence.recursion_check(reference_ifs, 0.01, 10, [0.05, 0.025], cube_result.slices)
    assert [row.r for row in rows] == [0.05, 0.025]
    for row in rows:
        assert row.j > 0.0
        assert row.rhs > 8.0 / 0.01
        assert row.passes


def test_recursion_check_t5(t5_ifs):
    result = skewprod.pushforward_measure(
        t5_ifs, 0.01, 10, T5, n_points=500, n_steps=20, seed=0, slice_bins=4
    )
    rows = convergence.recursion_check(t5_ifs, 0.01, 10, [0.05], result.slices)
    assert rows[0].passes


def test_recursion_check_needs_noise(reference_ifs, cube_result):
    with pytest.raises(HypothesisError, match="epsilon > 0"):
        convergence.recursion_check(reference_ifs, 0.0, 10, [0.05], cube_result.slices)


def test_projection_check(cube_result):
    rows = convergence.projection_check(cube_result, [0.05, 0.025])
    for row in rows:
        assert row.projection <= 2.0 * row.j
        assert row.passes


def test_write_ks_csv(tmp_path):
    study = convergence.KSStudy("m", [4, 8], [0.02, 0.01], True)
    header, rows = read_csv(convergence.write_ks_csv(str(tmp_path / "ks_m.csv"), study))
    assert header == ["m", "ks"]
    assert rows == [["4", "0.02"], ["8", "0.01"]]
