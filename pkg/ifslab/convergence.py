"""Statistical studies: weak convergence in eps and m, invariance and the J(r) recursion."""

from collections import namedtuple
import logging

from .constants import T5, b_factor, bounds_report, model_for
from .exceptions import HypothesisError
from .measure import EmpiricalMeasure, correlation_form, j_statistic, ks_distance
from .ifs_model import ADDITIVE_RATIO
from .sampler import (
    invariance_pushforward,
    sample_measure,
    sample_unperturbed,
    sample_x_lambda,
    sample_z_epsilon,
)
from .skewprod import pushforward_measure
from .utils.misc import log_step, write_csv

LOG = logging.getLogger("ifslab")

KS_TOLERANCE = 0.01
RECURSION_SLACK = 2.0
PROJECTION_TOLERANCE = 1.25

KSStudy = namedtuple("KSStudy", ["parameter", "values", "distances", "decreasing"])
InvarianceResult = namedtuple("InvarianceResult", ["ks", "n"])
RecursionRow = namedtuple("RecursionRow", ["r", "j", "j_scaled", "rhs", "passes"])
ProjectionRow = namedtuple("ProjectionRow", ["r", "projection", "j", "passes"])


def decreasing_with_tolerance(values, tol=KS_TOLERANCE, allowed_inversions=1):
    """
    Tell whether a sequence decreases up to small inversions.

    Args:
        values ([float]):
            The sequence.
        tol (float):
            Every increase must be smaller than tol.
        allowed_inversions (int):
            Largest number of increases; None allows any number of small ones.
    Returns (bool):
        Whether the sequence qualifies.
    """
    rises = [b - a for a, b in zip(values, values[1:]) if b > a]
    if allowed_inversions is not None and len(rises) > allowed_inversions:
        return False
    return all(rise < tol for rise in rises)


@log_step("KS versus epsilon")
def ks_vs_epsilon(ifs, epsilons, n, depth=None, seed=0, threads=1, model=None):
    """
    KS distance between the perturbed and the unperturbed empirical measures along a ladder.

    Every rung uses the same seed, so the perturbed samples are coupled with the reference:
    they share branch draws and noise uniforms.

    Args:
        ifs (IFSSpec):
            The system.
        epsilons ([float]):
            Decreasing noise levels.
        n (int):
            Samples per rung.
        depth (int):
            Truncation depth; per-rung default by default.
        seed (int):
            Shared seed.
        threads (int):
            Worker threads.
        model (str):
            Perturbation model; Z_eps for Multiplicative, X_{lambda,eps} for AdditiveRatio.
            The system's own model by default.
    Returns (KSStudy):
        Distances per epsilon and whether they decrease.
    """
    model = model or ifs.perturbation
    draw = sample_x_lambda if model == ADDITIVE_RATIO else sample_z_epsilon
    reference = EmpiricalMeasure(draw(ifs, 0.0, n, depth, seed, threads).values)
    distances = []
    for epsilon in epsilons:
        batch = draw(ifs, epsilon, n, depth, seed, threads)
        distances.append(ks_distance(EmpiricalMeasure(batch.values), reference))
        LOG.info("KS(eps=%r) = %r", epsilon, distances[-1])
    return KSStudy("epsilon", list(epsilons), distances, decreasing_with_tolerance(distances))


@log_step("KS versus m")
def ks_vs_m(
    ifs,
    epsilon,
    ms,
    n_points,
    n_steps,
    n_reference,
    depth=None,
    seed=0,
    threads=1,
    variant=None,
):
    """
    KS distance between the projected cube measure at each m and directly sampled nu_eps.

    Returns (KSStudy):
        Distances per m; rises smaller than the KS tolerance are allowed.
    """
    variant = variant or model_for(ifs)
    batch = sample_measure(ifs, epsilon, n_reference, depth, seed, threads)
    reference = EmpiricalMeasure(batch.values)
    distances = []
    for m in ms:
        result = pushforward_measure(
            ifs, epsilon, m, variant, n_points, n_steps, seed, threads, slice_bins=1
        )
        distances.append(ks_distance(result.projection, reference))
        LOG.info("KS(m=%d) = %r", m, distances[-1])
    return KSStudy(
        "m", list(ms), distances, decreasing_with_tolerance(distances, allowed_inversions=None)
    )


@log_step("Invariance check")
def invariance_check(ifs, n, depth=None, seed=0, threads=1):
    """KS distance between nu_hat and its one-step mixture sum_i p_i nu_hat o f_i^-1."""
    batch = sample_unperturbed(ifs, n, depth, seed, threads)
    mixture = invariance_pushforward(batch, ifs)
    return InvarianceResult(ks_distance(EmpiricalMeasure(batch.values), mixture), n)


def _scale_factors(ifs, epsilon, variant):
    if variant == T5:
        return [lam - epsilon for lam in ifs.lambdas]
    return [(1.0 - epsilon) * map_spec.lambda_min for map_spec in ifs.maps]


def recursion_check(
    ifs, epsilon, m, r_values, slices, slack=RECURSION_SLACK, sigma=0.5, variant=None
):
    """
    Test J(r) <= slack (8 / (C eps) + b max_i J(r / s_i)) on empirical cube slices.

    s_i is (1 - eps) lambda_{i,min} for T3 and lambda_i - eps for T5; C is C_eps,m for T3 and
    the sigma-scaled constant for T5.

    Args:
        ifs (IFSSpec):
            The system.
        epsilon (float):
            Noise level (> 0).
        m (int):
            Partition depth.
        r_values ([float]):
            Radii to test.
        slices ([(float, EmpiricalMeasure)]):
            Cube slices from pushforward_measure.
        slack (float):
            Statistical slack factor.
    Returns ([RecursionRow]):
        One row per radius.
    """
    variant = variant or model_for(ifs)
    if epsilon <= 0.0:
        raise HypothesisError("The recursion needs epsilon > 0")
    report = bounds_report(ifs, epsilon, m, sigma, variant)
    if report.c_eps_m <= 0.0:
        raise HypothesisError("C_eps,m=%r is not positive; increase m" % report.c_eps_m)
    b = b_factor(ifs, epsilon, variant)
    free_term = 8.0 / (report.c_eps_m * epsilon)
    factors = _scale_factors(ifs, epsilon, variant)

    rows = []
    for r in r_values:
        j = j_statistic(slices, r)
        j_scaled = max(j_statistic(slices, r / s) for s in factors)
        rhs = free_term + b * j_scaled
        rows.append(RecursionRow(r, j, j_scaled, rhs, j <= slack * rhs))
    return rows


def projection_check(result, r_values, tolerance=PROJECTION_TOLERANCE):
    """
    Compare the projection's (1/r^2)(nu, nu)_r with twice J(r) of the same cube samples.

    Returns ([ProjectionRow]):
        One row per radius.
    """
    rows = []
    for r in r_values:
        projection = correlation_form(result.projection, result.projection, r) / r**2
        j = j_statistic(result.slices, r)
        rows.append(ProjectionRow(r, projection, j, projection <= 2.0 * j * tolerance))
    return rows


def write_ks_csv(path, study):
    """Write a KS study with columns <parameter>, ks."""
    return write_csv(path, [study.parameter, "ks"], zip(study.values, study.distances))
