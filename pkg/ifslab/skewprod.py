"""The cube maps g_{eps,m} (model T3) and g~_{eps,m} (model T5) on Q = [-1, 1)^3.

On the piece Q_{i,k} (y in the i-th probability slab, z in the k-th dyadic slab) both maps act as

    (x, y, z) -> (d(z) f(x) + a_i (1 - d(z)), y / p_i + b_i, 2^m z + 2^m - 2k - 1)

with d(z) = base_i + 2^m eps (z - center_k); f = f_i and base_i = 1 for T3, f = id and
base_i = lambda_i for T5. The (y, z) part is a full-branch expanding Markov map and does not
depend on x, so x is driven by a chain of noise values d.
"""

from collections import namedtuple
from fractions import Fraction
import logging
import math

import numpy as np

from .constants import (
    MODELS,
    T3,
    T5,
    c_double_prime_t5,
    c_eps_m_lemma1,
    lemma1_regime_bounds,
    t5_corner_condition,
)
from .exceptions import DomainError, HypothesisError, InvalidIFSSpec, RangeEscapeError
from .ifs_model import ADDITIVE_RATIO, MULTIPLICATIVE, apply_maps, apply_perturbed, in_domain
from .measure import EmpiricalMeasure
from .utils.misc import log_step, run_chunked, write_csv

LOG = logging.getLogger("ifslab")

BOUNDARY_TOL = 1e-12
ESCAPE_TOL = 1e-9
FD_STEP = 1e-6
JACOBIAN_RTOL = 1e-6
# entries smaller than this are compared in absolute terms
JACOBIAN_FLOOR = 1e-3
MAX_WITNESSES = 10
MANTISSA_BITS = 53
MAX_Y_DIGITS = 64
REGIMES = ("upper", "middle", "lower")

_PERTURBATION = {T3: MULTIPLICATIVE, T5: ADDITIVE_RATIO}

CubePoint = namedtuple("CubePoint", ["x", "y", "z"])
PartitionIndex = namedtuple("PartitionIndex", ["i", "k"])
TangentVector = namedtuple("TangentVector", ["u", "v", "w"])
OrbitRecord = namedtuple("OrbitRecord", ["points", "itinerary"])

JacobianReport = namedtuple(
    "JacobianReport", ["points", "max_relative_error", "tolerance", "passes", "worst_point"]
)
ConeReport = namedtuple(
    "ConeReport",
    ["tau", "trials", "violations", "max_u_ratio", "max_v_ratio", "passes", "witnesses"],
)
TransversalityReport = namedtuple(
    "TransversalityReport",
    ["min_gap", "threshold", "passes", "trials", "regimes", "witness"],
)
PushforwardResult = namedtuple(
    "PushforwardResult",
    [
        "cube_samples",
        "slices",
        "projection",
        "z_marginal",
        "y_slab_masses",
        "n_points",
        "n_steps",
        "burn_in",
    ],
)


def _check_variant(ifs, variant):
    if variant not in MODELS:
        raise ValueError("Unknown variant '%s', expected one of %s" % (variant, MODELS))
    if variant == T5 and not ifs.all_affine:
        raise InvalidIFSSpec("Variant T5 needs affine maps")


def _check_point(p):
    if not all(in_domain(c) for c in p):
        raise DomainError("Point %r is outside Q = [-1, 1)^3" % (tuple(p),))


def _partition_arrays(ifs, m, y, z):
    """Zero-based branch and slab indices of arrays of (y, z)."""
    bounds = ifs.slab_bounds
    i0 = np.clip(np.searchsorted(bounds, y, side="right") - 1, 0, ifs.size - 1)
    k = np.clip(np.floor((np.asarray(z) + 1.0) * 2.0 ** (m - 1)), 0, 2**m - 1).astype(int)
    return i0, k


def _multiplier_arrays(ifs, epsilon, m, variant, i0, k, z):
    base = ifs.lambdas[i0] if variant == T5 else 1.0
    center = -1.0 + (k + 0.5) * 2.0 ** (1 - m)
    return base + 2.0**m * epsilon * (z - center)


def _derivatives(ifs, i0, x):
    out = np.empty(np.shape(x))
    for i, map_spec in enumerate(ifs.maps):
        mask = i0 == i
        out[mask] = map_spec.derivative(x[mask])
    return out


def _jacobian_arrays(ifs, epsilon, m, variant, x, z, i0, k):
    """x-diagonal and corner entries of the Jacobian; the rest is diag(1/p_i, 2^m)."""
    d = _multiplier_arrays(ifs, epsilon, m, variant, i0, k, z)
    a = ifs.fixpoints[i0]
    if variant == T5:
        return d, 2.0**m * epsilon * (x - a)
    return d * _derivatives(ifs, i0, x), 2.0**m * epsilon * (apply_maps(ifs, i0, x) - a)


def partition_index(p, ifs, m):
    """
    Locate the piece Q_{i,k} containing a point.

    Slabs are left-closed and right-open: y in [-1 + 2 sum_{j<i} p_j, -1 + 2 sum_{j<=i} p_j)
    and z in [-1 + k 2^(1-m), -1 + (k + 1) 2^(1-m)).

    Args:
        p (CubePoint):
            Point of Q.
        ifs (IFSSpec):
            The system.
        m (int):
            Number of dyadic levels; 2^m slabs along z.
    Returns (PartitionIndex):
        i in 1..l and k in 0..2^m - 1.
    """
    _check_point(p)
    i0, k = _partition_arrays(ifs, m, np.array([p[1]]), np.array([p[2]]))
    return PartitionIndex(int(i0[0]) + 1, int(k[0]))


def multiplier(p, ifs, epsilon, m, variant=T3):
    """Value of d(z) (T3) or d~(z) (T5) at a point, for its own branch."""
    index = partition_index(p, ifs, m)
    return float(
        _multiplier_arrays(
            ifs, epsilon, m, variant, np.array([index.i - 1]), index.k, np.array([p[2]])
        )[0]
    )


def branch_image(p, index, ifs, epsilon, m, variant=T3):
    """
    Apply the branch of Q_{i,k} to a point, without checking that the point lies in that piece.

    Args:
        p (CubePoint):
            The point.
        index (PartitionIndex):
            Branch to apply, i one-based.
        ifs (IFSSpec):
            The system.
        epsilon (float):
            Noise level.
        m (int):
            Number of dyadic levels.
        variant (str):
            T3 or T5.
    Returns (CubePoint):
        The image.
    """
    _check_variant(ifs, variant)
    i0 = index.i - 1
    x, y, z = (float(c) for c in p)
    d = _multiplier_arrays(ifs, epsilon, m, variant, np.array([i0]), index.k, np.array([z]))
    d = float(d[0])
    a = ifs.maps[i0].fixpoint
    inner = x if variant == T5 else float(ifs.maps[i0](x))
    p_i = ifs.probabilities[i0]
    b = 1.0 - ifs.slab_bounds[i0 + 1] / p_i
    return CubePoint(
        d * inner + a * (1.0 - d),
        y / p_i + b,
        2.0**m * z + 2.0**m - 2.0 * index.k - 1.0,
    )


def step(p, ifs, epsilon, m, variant=T3):
    """
    Apply the cube map once.

    y and z images that round onto the right end of [-1, 1) are pulled back into the cube.

    Args:
        p (CubePoint):
            Point of Q.
        ifs (IFSSpec):
            The system.
        epsilon (float):
            Noise level.
        m (int):
            Number of dyadic levels.
        variant (str):
            T3 (multiplier times f_i) or T5 (perturbed ratio, affine maps only).
    Returns (CubePoint):
        The image point.
    Raises:
        RangeEscapeError:
            When the x image leaves [-1, 1) by more than 1e-9.
    """
    _check_variant(ifs, variant)
    image = branch_image(p, partition_index(p, ifs, m), ifs, epsilon, m, variant)
    if image.x < -1.0 - ESCAPE_TOL or image.x >= 1.0 + ESCAPE_TOL:
        raise RangeEscapeError("x image %r of %r leaves [-1, 1)" % (image.x, tuple(p)))
    below_one = np.nextafter(1.0, -1.0)
    return CubePoint(
        image.x,
        min(max(image.y, -1.0), below_one),
        min(max(image.z, -1.0), below_one),
    )


def _boundary_distance(ifs, m, y, z):
    y_distance = np.min(np.abs(ifs.slab_bounds - y))
    scaled = (z + 1.0) * 2.0 ** (m - 1)
    z_distance = abs(scaled - round(scaled)) * 2.0 ** (1 - m)
    return min(y_distance, z_distance)


def jacobian(p, ifs, epsilon, m, variant=T3):
    """
    Jacobian of the cube map at a point away from the partition boundaries.

    Returns (numpy.ndarray):
        [[d f_i'(x), 0, 2^m eps (f_i(x) - a_i)], [0, 1/p_i, 0], [0, 0, 2^m]] for T3 and
        [[d~, 0, 2^m eps (x - a_i)], [0, 1/p_i, 0], [0, 0, 2^m]] for T5.
    Raises:
        DomainError:
            When the point is within 1e-12 of a partition boundary.
    """
    _check_variant(ifs, variant)
    index = partition_index(p, ifs, m)
    if _boundary_distance(ifs, m, p[1], p[2]) <= BOUNDARY_TOL:
        raise DomainError("Point %r lies on a partition boundary" % (tuple(p),))
    i0 = np.array([index.i - 1])
    diag_x, corner = _jacobian_arrays(
        ifs, epsilon, m, variant, np.array([float(p[0])]), np.array([float(p[2])]), i0, index.k
    )
    return np.array(
        [
            [diag_x[0], 0.0, corner[0]],
            [0.0, 1.0 / ifs.probabilities[index.i - 1], 0.0],
            [0.0, 0.0, 2.0**m],
        ]
    )


def finite_difference_jacobian(p, ifs, epsilon, m, variant=T3, h=FD_STEP):
    """Central-difference Jacobian of the branch containing p."""
    index = partition_index(p, ifs, m)
    point = np.array(p, dtype=float)
    out = np.empty((3, 3))
    for col in range(3):
        shift = np.zeros(3)
        shift[col] = h
        forward = branch_image(CubePoint(*(point + shift)), index, ifs, epsilon, m, variant)
        backward = branch_image(CubePoint(*(point - shift)), index, ifs, epsilon, m, variant)
        out[:, col] = (np.array(forward) - np.array(backward)) / (2.0 * h)
    return out


def _interior_points(rng, ifs, m, count):
    points = []
    while len(points) < count:
        x, y, z = rng.uniform(-1.0, 1.0, size=3)
        if _boundary_distance(ifs, m, y, z) > 10.0 * FD_STEP:
            points.append(CubePoint(x, y, z))
    return points


@log_step("Jacobian check")
def check_jacobian(ifs, epsilon, m, variant=T3, points=1000, seed=0):
    """
    Compare analytic and central-difference Jacobians at random interior points.

    Every entry is compared on its own: the error at a point is the largest
    |J - J_fd| / max(|J|, JACOBIAN_FLOOR) over the nine entries.

    Returns (JacobianReport):
        The largest relative error and the point where it occurs.
    """
    rng = np.random.default_rng(seed)
    worst, worst_point = 0.0, None
    for p in _interior_points(rng, ifs, m, points):
        analytic = jacobian(p, ifs, epsilon, m, variant)
        numeric = finite_difference_jacobian(p, ifs, epsilon, m, variant)
        scale = np.maximum(np.abs(analytic), JACOBIAN_FLOOR)
        error = float(np.max(np.abs(analytic - numeric) / scale))
        if worst_point is None or error > worst:
            worst, worst_point = error, tuple(float(c) for c in p)
    return JacobianReport(points, worst, JACOBIAN_RTOL, worst < JACOBIAN_RTOL, worst_point)


def cone_halfwidth(ifs, epsilon, m, variant=T3):
    """
    Half-width tau of the unstable cones |u/w| < tau, |v/w| < tau.

    T3: 2^(m+1) eps / (2^m - lambda_max,max (1 + eps)).
    T5: 2^(m+1) eps / (2^m - max lambda_i - eps).

    Raises:
        HypothesisError:
            When m is too small for a positive denominator.
    """
    _check_variant(ifs, variant)
    if variant == T5:
        denominator = 2.0**m - float(np.max(ifs.lambdas)) - epsilon
    else:
        denominator = 2.0**m - ifs.lambda_max_max * (1.0 + epsilon)
    if denominator <= 0.0:
        raise HypothesisError("m=%r is too small: cone denominator %r <= 0" % (m, denominator))
    return 2.0 ** (m + 1) * epsilon / denominator


def in_cone(vector, tau):
    """
    Strict cone predicate |u| < tau |w| and |v| < tau |w|.

    For tau = 0 the cone degenerates to the z-axis: u = v = 0 and w != 0.
    """
    u, v, w = vector
    if tau == 0.0:
        return u == 0.0 and v == 0.0 and w != 0.0
    return abs(u) < tau * abs(w) and abs(v) < tau * abs(w)


@log_step("Cone invariance")
def check_cone_invariance(ifs, epsilon, m, variant=T3, trials=10000, seed=0):
    """
    Check that the Jacobian maps boundary vectors of the cone at p strictly into the cone.

    Vectors are normalized to w = 1; either |u| = tau or |v| = tau, the other component uniform
    in [-tau, tau].

    Raises:
        HypothesisError:
            When 2^m exceeds neither the cone denominator nor 1 / min p_i.
    Returns (ConeReport):
        Violation count, largest image ratios and up to ten witnesses.
    """
    _check_variant(ifs, variant)
    tau = cone_halfwidth(ifs, epsilon, m, variant)
    if float(np.min(ifs.p)) * 2.0**m <= 1.0:
        raise HypothesisError("Side condition p_i 2^m > 1 fails for m=%r" % m)

    rng = np.random.default_rng(seed)
    x, y, z = rng.uniform(-1.0, 1.0, size=(3, trials))
    i0, k = _partition_arrays(ifs, m, y, z)
    diag_x, corner = _jacobian_arrays(ifs, epsilon, m, variant, x, z, i0, k)

    on_u = rng.random(trials) < 0.5
    signs = rng.choice([-1.0, 1.0], size=trials)
    free = rng.uniform(-tau, tau, size=trials)
    u = np.where(on_u, signs * tau, free)
    v = np.where(on_u, free, signs * tau)

    scale = 2.0**m
    image_u = (diag_x * u + corner) / scale
    image_v = v / ifs.p[i0] / scale
    if tau == 0.0:
        bad = (image_u != 0.0) | (image_v != 0.0)
    else:
        bad = (np.abs(image_u) >= tau) | (np.abs(image_v) >= tau)

    witnesses = [
        {
            "point": [float(x[t]), float(y[t]), float(z[t])],
            "vector": [float(u[t]), float(v[t]), 1.0],
            "image": [float(image_u[t]), float(image_v[t]), 1.0],
        }
        for t in np.flatnonzero(bad)[:MAX_WITNESSES]
    ]
    violations = int(np.count_nonzero(bad))
    if violations:
        LOG.warning("%d of %d cone trials left the cone", violations, trials)
    return ConeReport(
        tau,
        trials,
        violations,
        float(np.max(np.abs(image_u))),
        float(np.max(np.abs(image_v))),
        violations == 0,
        witnesses,
    )


def _transversality_threshold(ifs, epsilon, m, variant, sigma):
    if ifs.size < 2:
        raise HypothesisError("Transversality needs at least two maps")
    if variant == T5:
        corner = t5_corner_condition(ifs, epsilon)
        if not corner.passes:
            raise HypothesisError(
                "|a_j d_p - a_i d_q| > |d_p - d_q| fails at epsilon=%r (margin %r)"
                % (epsilon, corner.value)
            )
        constant = c_double_prime_t5(ifs, sigma)
    else:
        constant = c_eps_m_lemma1(ifs, epsilon, m)
    if constant <= 0.0:
        raise HypothesisError("Transversality constant %r is not positive" % constant)
    return constant * epsilon


def _regime_intervals(a_i, a_j):
    return {"upper": (a_i, 1.0), "middle": (a_j, a_i), "lower": (-1.0, a_j)}


@log_step("Transversality gap")
def transversality_gap(ifs, epsilon, m, variant=T3, trials=10000, seed=0, sigma=0.5):
    """
    Measure the separation of the image cones of two branches over a common image point.

    For branches i != j with a_i > a_j, a common image x and positions z_p, z_q, the image cone
    of branch i projects (at w = 1) onto the u-interval centred at (x - a_i) eps / d(z_p) with
    half-width d(z_p) lambda_{i,max} tau / 2^m (T3) or d~(z_p) tau / 2^m (T5). The gap is the
    distance between the two intervals. Trials cycle through the three regimes x >= a_i,
    a_i >= x >= a_j and x <= a_j so that each is covered.

    Args:
        ifs (IFSSpec):
            System with at least two maps.
        epsilon (float):
            Noise level.
        m (int):
            Number of dyadic levels.
        variant (str):
            T3 or T5.
        trials (int):
            Number of configurations.
        seed (int):
            Seed of the generator.
        sigma (float):
            Free parameter of the T5 constant.
    Returns (TransversalityReport):
        Smallest gap, the threshold C eps, per-regime minima and the worst configuration.
    Raises:
        HypothesisError:
            When the threshold is not positive or the parameters are not admissible.
    """
    _check_variant(ifs, variant)
    threshold = _transversality_threshold(ifs, epsilon, m, variant, sigma)
    tau = cone_halfwidth(ifs, epsilon, m, variant)
    scale = 2.0**m
    a = ifs.fixpoints
    lam_max = np.array([map_spec.lambda_max for map_spec in ifs.maps])
    pairs = [(i, j) for i in range(ifs.size) for j in range(ifs.size) if a[i] > a[j]]
    regime_bounds = lemma1_regime_bounds(ifs, epsilon, m) if variant == T3 else None

    rng = np.random.default_rng(seed)
    regimes = {
        name: {"trials": 0, "min_gap": math.inf, "bound": None, "passes": True}
        for name in REGIMES
    }
    min_gap, witness = math.inf, None
    for t in range(trials):
        i, j = pairs[rng.integers(len(pairs))]
        low, high = _regime_intervals(a[i], a[j])[REGIMES[t % 3]]
        if high <= low:
            continue
        x = rng.uniform(low, high)
        z_p, z_q = rng.uniform(-1.0, 1.0, size=2)
        _, k = _partition_arrays(ifs, m, np.zeros(2), np.array([z_p, z_q]))
        d_p, d_q = _multiplier_arrays(
            ifs, epsilon, m, variant, np.array([i, j]), k, np.array([z_p, z_q])
        )
        if variant == T5:
            width_i, width_j = d_p * tau / scale, d_q * tau / scale
        else:
            width_i, width_j = d_p * lam_max[i] * tau / scale, d_q * lam_max[j] * tau / scale
        gap = abs((x - a[i]) / d_p - (x - a[j]) / d_q) * epsilon - width_i - width_j

        regime = regimes[REGIMES[t % 3]]
        regime["trials"] += 1
        regime["min_gap"] = min(regime["min_gap"], gap)
        if regime_bounds is not None:
            bound = regime_bounds[(i, j)][REGIMES[t % 3]] * epsilon
            regime["bound"] = bound if regime["bound"] is None else min(regime["bound"], bound)
            regime["passes"] = regime["passes"] and gap > bound
        if gap < min_gap:
            min_gap = gap
            witness = {
                "i": i + 1,
                "j": j + 1,
                "x": float(x),
                "z_p": float(z_p),
                "z_q": float(z_q),
                "gap": float(gap),
            }

    passes = bool(min_gap > threshold)
    if not passes:
        LOG.warning("Transversality gap %r does not exceed %r", min_gap, threshold)
    return TransversalityReport(float(min_gap), threshold, passes, trials, regimes, witness)


def _digit_count(m):
    return int(math.ceil(MANTISSA_BITS / m)) + 1


def _y_digit_count(ifs):
    largest = float(np.max(ifs.p))
    if largest >= 1.0:
        return 1
    return min(MAX_Y_DIGITS, int(math.ceil(MANTISSA_BITS * math.log(2.0) / -math.log(largest))))


def _dyadic_value(digits, remainder, base):
    """s = 0.d_1 d_2 ... d_D (base) followed by the remainder, per row."""
    s = remainder
    for col in range(digits.shape[1] - 1, -1, -1):
        s = (digits[:, col] + s) / base
    return s


def _slab_value(digits, remainder, lower, widths):
    """t = P_{d_1 - 1} + p_{d_1} (P_{d_2 - 1} + p_{d_2} (...)), per row."""
    t = remainder
    for col in range(digits.shape[1] - 1, -1, -1):
        t = lower[digits[:, col]] + widths[digits[:, col]] * t
    return t


def _orbit_chunk(ifs, epsilon, m, variant, n_steps, burn_in):
    base = 2**m
    z_digits = _digit_count(m)
    y_digits = _y_digit_count(ifs)
    widths = ifs.p
    lower = np.concatenate([[0.0], np.cumsum(widths)[:-1]])
    offsets = ifs.lambdas if variant == T5 else np.ones(ifs.size)
    model = _PERTURBATION[variant]
    kept = n_steps - burn_in

    def work(size, rng):
        # A uniform point of Q has i.i.d. digits in both expanding directions. Each step shifts
        # one digit out and appends a fresh one, which keeps the orbit exact in law where a
        # float orbit would collapse after a few steps.
        x = rng.uniform(-1.0, 1.0, size)
        z_buffer = rng.integers(0, base, size=(size, z_digits))
        y_buffer = rng.choice(ifs.size, size=(size, y_digits), p=widths)
        z_rest = rng.random(size)
        y_rest = rng.random(size)

        out = np.empty((size, kept, 3))
        for t in range(1, n_steps + 1):
            i0 = y_buffer[:, 0]
            z_buffer = np.roll(z_buffer, -1, axis=1)
            z_buffer[:, -1] = rng.integers(0, base, size=size)
            y_buffer = np.roll(y_buffer, -1, axis=1)
            y_buffer[:, -1] = rng.choice(ifs.size, size=size, p=widths)

            z_next = -1.0 + 2.0 * _dyadic_value(z_buffer, z_rest, base)
            # d(z_t) = base_i + eps z_{t+1} because z_{t+1} = 2^m (z_t - center_k)
            d = offsets[i0] + epsilon * z_next
            x = apply_perturbed(ifs, i0, d, x, model)
            escaped = (x < -1.0 - ESCAPE_TOL) | (x >= 1.0 + ESCAPE_TOL)
            if np.any(escaped):
                raise RangeEscapeError(
                    "Cube orbit left [-1, 1) at step %d: x = %r" % (t, float(x[escaped][0]))
                )
            if t > burn_in:
                y = -1.0 + 2.0 * _slab_value(y_buffer, y_rest, lower, widths)
                out[:, t - burn_in - 1] = np.column_stack([x, y, z_next])
        return out.reshape(size * kept, 3)

    return work


@log_step("Pushforward measure")
def pushforward_measure(
    ifs,
    epsilon,
    m,
    variant=T3,
    n_points=2000,
    n_steps=100,
    seed=0,
    threads=1,
    slice_bins=None,
    bins=None,
):
    """
    Approximate the SRB measure of the cube map by time averages of uniformly seeded orbits.

    Each of n_points uniform points of Q is iterated n_steps times; the first half of every
    orbit is discarded and the remaining points form the occupation measure.

    Args:
        ifs (IFSSpec):
            The system.
        epsilon (float):
            Noise level.
        m (int):
            Number of dyadic levels.
        variant (str):
            T3 or T5.
        n_points (int):
            Number of orbits.
        n_steps (int):
            Orbit length.
        seed (int):
            Root seed.
        threads (int):
            Number of worker threads.
        slice_bins (int):
            Number of equal z-slices for the conditional x-measures; 2^m by default.
        bins (int):
            Histogram bins of the projection.
    Returns (PushforwardResult):
        Cube samples, slices [(2 * slice mass, conditional x-measure)], x-projection,
        z-marginal and y-slab masses.
    """
    _check_variant(ifs, variant)
    if m < 1:
        raise HypothesisError("The cube map needs at least one dyadic level, got m=%r" % (m,))
    if n_points < 1 or n_steps < 1:
        raise ValueError("n_points and n_steps must be at least 1")
    burn_in = n_steps // 2
    LOG.info(
        "Iterating %d cube orbits for %d steps (variant %s, epsilon %r, m %d)",
        n_points,
        n_steps,
        variant,
        epsilon,
        m,
    )
    samples = run_chunked(
        _orbit_chunk(ifs, epsilon, m, variant, n_steps, burn_in),
        n_points,
        seed,
        threads,
        chunk_size=max(1, 2**16 // (n_steps - burn_in)),
    )

    slice_bins = slice_bins or 2**m
    z = samples[:, 2]
    slice_index = np.clip(np.floor((z + 1.0) * slice_bins / 2.0), 0, slice_bins - 1).astype(int)
    total = float(len(samples))
    slices = []
    for index in range(slice_bins):
        members = samples[slice_index == index, 0]
        if members.size:
            slices.append((2.0 * members.size / total, EmpiricalMeasure(members)))

    i0, _ = _partition_arrays(ifs, m, samples[:, 1], z)
    y_slab_masses = np.bincount(i0, minlength=ifs.size) / total
    return PushforwardResult(
        samples,
        slices,
        EmpiricalMeasure(samples[:, 0], bins=bins),
        EmpiricalMeasure(z),
        y_slab_masses,
        n_points,
        n_steps,
        burn_in,
    )


def itinerary(p, ifs, m, n, variant=T3):
    """
    First n symbols of the coding of a point, computed in exact rational arithmetic.

    The (y, z) dynamics does not depend on x, epsilon or the variant.

    Returns ([PartitionIndex]):
        Pieces visited by p, g(p), ..., g^(n-1)(p).
    """
    _check_variant(ifs, variant)
    _check_point(p)
    probabilities = [Fraction(prob) for prob in ifs.probabilities]
    bounds = [Fraction(-1)]
    for prob in probabilities:
        bounds.append(bounds[-1] + 2 * prob)
    bounds[-1] = Fraction(1)
    scale = 2**m

    y, z = Fraction(p[1]), Fraction(p[2])
    symbols = []
    for _ in range(n):
        i0 = max(idx for idx in range(ifs.size) if bounds[idx] <= y)
        k = min(int(math.floor((z + 1) * scale / 2)), scale - 1)
        symbols.append(PartitionIndex(i0 + 1, k))
        y = y / probabilities[i0] + 1 - bounds[i0 + 1] / probabilities[i0]
        z = scale * z + scale - 2 * k - 1
    return symbols


def orbit(p, ifs, epsilon, m, n, variant=T3):
    """
    Float orbit p, g(p), ..., g^n(p) with the partition index of every point.

    Float orbits lose one dyadic digit of z per step and reach a fixed point of the z-map
    after about 53 / m steps; use pushforward_measure for statistics.
    """
    points = [CubePoint(*(float(c) for c in p))]
    for _ in range(n):
        points.append(step(points[-1], ifs, epsilon, m, variant))
    return OrbitRecord(points, [partition_index(q, ifs, m) for q in points])


def write_orbit_csv(path, record):
    """Write an orbit with columns t, x, y, z, i, k."""
    rows = (
        (t, float(q.x), float(q.y), float(q.z), index.i, index.k)
        for t, (q, index) in enumerate(zip(record.points, record.itinerary))
    )
    return write_csv(path, ["t", "x", "y", "z", "i", "k"], rows)


def write_occupation_csv(path, result):
    """Write the recorded cube samples of a pushforward run with columns x, y, z."""
    rows = ((float(x), float(y), float(z)) for x, y, z in result.cube_samples)
    return write_csv(path, ["x", "y", "z"], rows)
