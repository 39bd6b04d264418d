"""Iterated function systems on [-1, 1), their perturbations and hypothesis checks."""

from collections import namedtuple
from dataclasses import dataclass, field, replace
import itertools
import logging
import math

import numpy as np

from .exceptions import DomainError, HypothesisError, InvalidIFSSpec

LOG = logging.getLogger("ifslab")

AFFINE = "affine"
POLYNOMIAL = "polynomial"
MULTIPLICATIVE = "Multiplicative"
ADDITIVE_RATIO = "AdditiveRatio"
PERTURBATIONS = (MULTIPLICATIVE, ADDITIVE_RATIO)
NOT_APPLICABLE = "not applicable"

EQUALITY_TOL = 1e-12
DISTINCT_TOL = 1e-9

ConditionResult = namedtuple("ConditionResult", ["value", "passes"])
LyapunovEstimate = namedtuple("LyapunovEstimate", ["value", "stderr", "n_samples"])


def in_domain(x):
    """Return True if x lies in [-1, 1)."""
    return -1.0 <= x < 1.0


@dataclass(frozen=True)
class MapSpec:
    """A contraction of [-1, 1), either affine or a cubic polynomial.

    Affine maps are f(x) = lam * x + fixpoint * (1 - lam). Polynomial maps are
    f(x) = c0 + c1 x + c2 x^2 + c3 x^3 with a declared fixpoint.
    """

    kind: str
    fixpoint: float
    lam: float = None
    coefficients: tuple = None

    def __post_init__(self):
        """Check the structure of the definition."""
        if self.kind == AFFINE:
            if self.lam is None or not math.isfinite(self.lam):
                raise InvalidIFSSpec("Affine map needs a finite 'lam'")
        elif self.kind == POLYNOMIAL:
            if self.coefficients is None or len(self.coefficients) != 4:
                raise InvalidIFSSpec("Polynomial map needs exactly four coefficients c0..c3")
            object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        else:
            raise InvalidIFSSpec("Unknown map kind '%s'" % self.kind)
        if not math.isfinite(self.fixpoint):
            raise InvalidIFSSpec("Fixpoint must be finite")

    @classmethod
    def affine(cls, lam, fixpoint):
        """Create the affine map with ratio lam and the given fixpoint."""
        return cls(kind=AFFINE, fixpoint=float(fixpoint), lam=float(lam))

    @classmethod
    def polynomial(cls, coefficients, fixpoint):
        """Create the cubic map with coefficients (c0, c1, c2, c3)."""
        return cls(kind=POLYNOMIAL, fixpoint=float(fixpoint), coefficients=tuple(coefficients))

    @classmethod
    def from_dict(cls, data):
        """Create a map from its config representation."""
        try:
            if data["kind"] == AFFINE:
                return cls.affine(data["lambda"], data["fixpoint"])
            return cls.polynomial(data["coefficients"], data["fixpoint"])
        except KeyError as e:
            raise InvalidIFSSpec("Map definition is missing key %s" % e)

    def to_dict(self):
        """Return the config representation."""
        if self.is_affine:
            return {"kind": AFFINE, "lambda": self.lam, "fixpoint": self.fixpoint}
        return {
            "kind": POLYNOMIAL,
            "coefficients": list(self.coefficients),
            "fixpoint": self.fixpoint,
        }

    @property
    def is_affine(self):
        """Whether the map is affine."""
        return self.kind == AFFINE

    def __call__(self, x):
        """Evaluate the map on a scalar or array, without domain checks."""
        if self.is_affine:
            return self.lam * x + self.fixpoint * (1.0 - self.lam)
        c0, c1, c2, c3 = self.coefficients
        return c0 + x * (c1 + x * (c2 + x * c3))

    def derivative(self, x):
        """Evaluate f' on a scalar or array."""
        if self.is_affine:
            if np.ndim(x):
                return np.full(np.shape(x), self.lam)
            return self.lam
        _, c1, c2, c3 = self.coefficients
        return c1 + x * (2.0 * c2 + 3.0 * c3 * x)

    def _derivative_zeros(self):
        if self.is_affine:
            return []
        _, c1, c2, c3 = self.coefficients
        roots = np.roots([3.0 * c3, 2.0 * c2, c1]) if (c3 or c2) else []
        return sorted(r.real for r in roots if abs(r.imag) < 1e-14 and -1.0 < r.real < 1.0)

    def critical_points(self):
        """Points of [-1, 1] where f or |f'| may attain an extremum."""
        points = [-1.0, 1.0] + self._derivative_zeros()
        if not self.is_affine:
            c3 = self.coefficients[3]
            if c3:
                vertex = -self.coefficients[2] / (3.0 * c3)
                if -1.0 < vertex < 1.0:
                    points.append(vertex)
        return sorted(set(points))

    @property
    def lambda_min(self):
        """Infimum of |f'| on [-1, 1)."""
        if self._derivative_zeros():
            return 0.0
        return float(min(abs(self.derivative(x)) for x in self.critical_points()))

    @property
    def lambda_max(self):
        """Supremum of |f'| on [-1, 1)."""
        return float(max(abs(self.derivative(x)) for x in self.critical_points()))


@dataclass(frozen=True)
class IFSSpec:
    """An iterated function system with probabilities and a perturbation model."""

    maps: tuple
    probabilities: tuple
    perturbation: str = MULTIPLICATIVE
    epsilon: float = 0.0
    _bounds: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        """Check the structure of the system."""
        object.__setattr__(self, "maps", tuple(self.maps))
        object.__setattr__(self, "probabilities", tuple(float(p) for p in self.probabilities))
        if not self.maps:
            raise InvalidIFSSpec("An iterated function system needs at least one map")
        if len(self.maps) != len(self.probabilities):
            raise InvalidIFSSpec(
                "Got %d maps but %d probabilities" % (len(self.maps), len(self.probabilities))
            )
        if self.perturbation not in PERTURBATIONS:
            raise InvalidIFSSpec("Unknown perturbation model '%s'" % self.perturbation)
        if not self.epsilon >= 0.0:
            raise InvalidIFSSpec("epsilon must be non-negative, got %r" % self.epsilon)
        bounds = -1.0 + 2.0 * np.concatenate([[0.0], np.cumsum(self.probabilities)])
        bounds[-1] = 1.0
        object.__setattr__(self, "_bounds", tuple(bounds))

    @property
    def size(self):
        """Number of maps l."""
        return len(self.maps)

    @property
    def fixpoints(self):
        """Fixpoints a_i as an array."""
        return np.array([m.fixpoint for m in self.maps])

    @property
    def p(self):
        """Probabilities as an array."""
        return np.array(self.probabilities)

    @property
    def all_affine(self):
        """Whether every map is affine."""
        return all(m.is_affine for m in self.maps)

    @property
    def lambdas(self):
        """Affine ratios lambda_i."""
        if not self.all_affine:
            raise InvalidIFSSpec("Ratios are only defined for affine maps")
        return np.array([m.lam for m in self.maps])

    @property
    def lambda_max_max(self):
        """Largest lambda_{i,max}."""
        return max(m.lambda_max for m in self.maps)

    @property
    def slab_bounds(self):
        """Boundaries -1 + 2 sum_{j<=i} p_j of the probability slabs along y."""
        return np.array(self._bounds)

    def with_epsilon(self, epsilon):
        """Return a copy with another epsilon."""
        return replace(self, epsilon=float(epsilon))

    def to_dict(self):
        """Return the config representation."""
        return {
            "maps": [m.to_dict() for m in self.maps],
            "probabilities": list(self.probabilities),
            "perturbation": self.perturbation,
            "epsilon": self.epsilon,
        }


@dataclass(frozen=True)
class Check:
    """Outcome of one hypothesis check.

    A check that does not apply to the system, such as a pairwise condition on a single map,
    counts as passed and has no value.
    """

    name: str
    passed: bool
    value: float
    threshold: float
    severity: str = "error"
    applicable: bool = True

    @property
    def status(self):
        """'passed', 'failed' or 'not applicable'."""
        if not self.applicable:
            return NOT_APPLICABLE
        return "passed" if self.passed else "failed"

    def to_dict(self):
        """Return JSON representation."""
        return {
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "threshold": self.threshold,
            "severity": self.severity,
            "status": self.status,
        }


@dataclass(frozen=True)
class ValidationReport:
    """Every hypothesis check run on a system, in a fixed order."""

    checks: tuple

    @property
    def passed(self):
        """Whether every check passed."""
        return all(check.passed for check in self.checks)

    @property
    def failed(self):
        """Checks that did not pass."""
        return [check for check in self.checks if not check.passed]

    def __getitem__(self, name):
        """Look up a check by name."""
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def to_dict(self):
        """Return JSON representation."""
        return {"passed": self.passed, "checks": [check.to_dict() for check in self.checks]}


def evaluate(map_spec, x):
    """
    Evaluate a map at a point of the domain.

    Args:
        map_spec (MapSpec):
            The map.
        x (float):
            Point in [-1, 1).
    Returns (float):
        f(x).
    Raises:
        DomainError:
            When x is outside [-1, 1).
    """
    if not in_domain(x):
        raise DomainError("x=%r is outside [-1, 1)" % x)
    return float(map_spec(x))


def noise_range(ifs, i, epsilon=None):
    """Return the admissible noise interval of map i under the system's perturbation model."""
    eps = ifs.epsilon if epsilon is None else epsilon
    if ifs.perturbation == MULTIPLICATIVE:
        return 1.0 - eps, 1.0 + eps
    lam = ifs.maps[i].lam
    return lam - eps, lam + eps


def perturbed_map(ifs, i, noise, x):
    """
    Apply the perturbed branch i with a given noise value.

    Multiplicative: noise * f_i(x) + a_i (1 - noise). AdditiveRatio: noise * x + a_i (1 - noise).

    Args:
        ifs (IFSSpec):
            The system; its perturbation model and epsilon are used.
        i (int):
            Zero-based map index.
        noise (float):
            Noise value inside the admissible interval.
        x (float):
            Point in [-1, 1).
    Returns (float):
        The image point.
    """
    map_spec = ifs.maps[i]
    if ifs.perturbation == ADDITIVE_RATIO and not map_spec.is_affine:
        raise InvalidIFSSpec("AdditiveRatio perturbation needs affine maps")
    low, high = noise_range(ifs, i)
    if not low - EQUALITY_TOL <= noise <= high + EQUALITY_TOL:
        raise DomainError("noise=%r is outside [%r, %r]" % (noise, low, high))
    if not in_domain(x):
        raise DomainError("x=%r is outside [-1, 1)" % x)
    if ifs.perturbation == ADDITIVE_RATIO:
        return noise * x + map_spec.fixpoint * (1.0 - noise)
    return noise * map_spec(x) + map_spec.fixpoint * (1.0 - noise)


def apply_maps(ifs, indices, x):
    """Vectorized f_{indices}(x)."""
    out = np.empty_like(x)
    for i, map_spec in enumerate(ifs.maps):
        mask = indices == i
        out[mask] = map_spec(x[mask])
    return out


def apply_perturbed(ifs, indices, noise, x, model=None):
    """Vectorized perturbed branches for arrays of indices, noise values and points."""
    model = model or ifs.perturbation
    a = ifs.fixpoints[indices]
    if model == ADDITIVE_RATIO:
        return noise * x + a * (1.0 - noise)
    return noise * apply_maps(ifs, indices, x) + a * (1.0 - noise)


def draw_noise(ifs, indices, uniforms, epsilon, model=None):
    """Map uniform [0, 1) draws to noise values uniform on the admissible intervals."""
    model = model or ifs.perturbation
    spread = epsilon * (2.0 * uniforms - 1.0)
    if model == ADDITIVE_RATIO:
        return ifs.lambdas[indices] + spread
    return 1.0 + spread


def contraction_bound(ifs, epsilon=None, model=None):
    """
    Upper bound q of the Lipschitz constants of all perturbed branches.

    Args:
        ifs (IFSSpec):
            The system.
        epsilon (float):
            Noise level, the system's epsilon by default.
        model (str):
            Perturbation model, the system's model by default.
    Returns (float):
        (1 + eps) lambda_max,max for Multiplicative, max |lambda_i| + eps for AdditiveRatio.
    """
    eps = ifs.epsilon if epsilon is None else epsilon
    if (model or ifs.perturbation) == ADDITIVE_RATIO:
        return float(np.max(np.abs(ifs.lambdas))) + eps
    return (1.0 + eps) * ifs.lambda_max_max


def _excess(values):
    """Distance by which values leave [-1, 1]."""
    return float(max(0.0, max(-1.0 - v for v in values), max(v - 1.0 for v in values)))


def _pairs(ifs):
    return itertools.combinations(range(ifs.size), 2)


def validate(ifs):
    """
    Run every hypothesis check on a system.

    Failures are reported, never raised. Range checks of perturbed maps at extreme noise are
    reported with severity 'warning'.

    Args:
        ifs (IFSSpec):
            The system.
    Returns (ValidationReport):
        One entry per check.
    """
    checks = []
    p = ifs.p
    checks.append(Check("probabilities.positive", bool(p.min() > 0.0), float(p.min()), 0.0))
    sum_error = abs(float(p.sum()) - 1.0)
    checks.append(Check("probabilities.sum", sum_error <= EQUALITY_TOL, sum_error, EQUALITY_TOL))

    for i, map_spec in enumerate(ifs.maps):
        prefix = "maps[%d]" % i
        lam_min, lam_max = map_spec.lambda_min, map_spec.lambda_max
        checks.append(Check(prefix + ".lambda_min_positive", lam_min > 0.0, lam_min, 0.0))
        checks.append(Check(prefix + ".lambda_max_below_one", lam_max < 1.0, lam_max, 1.0))

        a = map_spec.fixpoint
        fix_error = abs(float(map_spec(a)) - a) if -1.0 <= a <= 1.0 else math.inf
        checks.append(
            Check(prefix + ".fixpoint", fix_error <= EQUALITY_TOL, fix_error, EQUALITY_TOL)
        )

        points = map_spec.critical_points()
        excess = _excess([float(map_spec(x)) for x in points])
        checks.append(Check(prefix + ".range", excess <= EQUALITY_TOL, excess, EQUALITY_TOL))

        if ifs.perturbation == ADDITIVE_RATIO:
            if not map_spec.is_affine:
                continue
            low, _ = noise_range(ifs, i)
            checks.append(Check(prefix + ".ratio_positive", low > 0.0, low, 0.0))
            images = [y * x + a * (1.0 - y) for y in noise_range(ifs, i) for x in (-1.0, 1.0)]
        else:
            extremes = (1.0 - ifs.epsilon, 1.0 + ifs.epsilon)
            images = [y * float(map_spec(x)) + a * (1.0 - y) for y in extremes for x in points]
        excess = _excess(images)
        check = Check(
            prefix + ".perturbed_range", excess <= EQUALITY_TOL, excess, EQUALITY_TOL, "warning"
        )
        if not check.passed:
            LOG.warning(
                "Perturbed map %d leaves [-1, 1) by %.3g for extreme noise at epsilon=%g",
                i,
                excess,
                ifs.epsilon,
            )
        checks.append(check)

    if ifs.size < 2:
        checks.append(Check("fixpoints.distinct", True, None, DISTINCT_TOL, applicable=False))
    else:
        fixpoints = ifs.fixpoints
        min_gap = float(min(abs(fixpoints[i] - fixpoints[j]) for i, j in _pairs(ifs)))
        checks.append(Check("fixpoints.distinct", min_gap > DISTINCT_TOL, min_gap, DISTINCT_TOL))

    non_affine = sum(1 for m in ifs.maps if not m.is_affine)
    if ifs.perturbation == ADDITIVE_RATIO:
        checks.append(Check("perturbation.affine_maps", non_affine == 0, float(non_affine), 0.0))

    report = ValidationReport(tuple(checks))
    for check in report.failed:
        LOG.debug(
            "Check %s failed: value=%r threshold=%r", check.name, check.value, check.threshold
        )
    return report


def check_l2_condition(ifs):
    """
    Evaluate sum_i p_i^2 lambda_{i,max} / lambda_{i,min}^2 and compare it with 1.

    For affine systems this is sum_i p_i^2 / lambda_i.

    Args:
        ifs (IFSSpec):
            The system.
    Returns (ConditionResult):
        The value and whether it is below 1.
    """
    value = 0.0
    for prob, map_spec in zip(ifs.probabilities, ifs.maps):
        lam_min = map_spec.lambda_min
        if lam_min <= 0.0:
            return ConditionResult(math.inf, False)
        value += prob**2 * map_spec.lambda_max / lam_min**2
    return ConditionResult(value, value < 1.0)


def check_transversality_a1(ifs):
    """
    Evaluate min_{i != j} |a_j lambda_i - a_i lambda_j| / |lambda_i - lambda_j|.

    Pairs with equal ratios count as +inf.

    Args:
        ifs (IFSSpec):
            An affine system.
    Returns (ConditionResult):
        The minimum and whether it exceeds 1.
    """
    if not ifs.all_affine:
        raise InvalidIFSSpec("Transversality condition (a1) needs affine maps")
    if ifs.size < 2:
        LOG.warning("Transversality condition (a1) is not applicable to a single map")
        return ConditionResult(math.inf, True)
    a, lam = ifs.fixpoints, ifs.lambdas
    value = math.inf
    for i, j in _pairs(ifs):
        denominator = abs(lam[i] - lam[j])
        if denominator > 0.0:
            value = min(value, abs(a[j] * lam[i] - a[i] * lam[j]) / denominator)
    return ConditionResult(value, value > 1.0)


def max_epsilon(ifs):
    """
    Return min_{i != j} |a_i - a_j| / (2 + |a_i + a_j|), the bound on admissible epsilon.

    A single map has no pairs; +inf is returned and the case is logged.
    """
    if ifs.size < 2:
        LOG.warning("Epsilon bound is not applicable to a single map, returning inf")
        return math.inf
    a = ifs.fixpoints
    return float(min(abs(a[i] - a[j]) / (2.0 + abs(a[i] + a[j])) for i, j in _pairs(ifs)))


def entropy(p):
    """Entropy -sum p_i log p_i of a probability vector."""
    p = np.asarray(p, dtype=float)
    p = p[p > 0.0]
    return float(-np.sum(p * np.log(p)))


def lyapunov_estimate(ifs, n_samples, seed, burn_in=None):
    """
    Monte Carlo estimate of the Lyapunov exponent E log |Y f_i'(x)|.

    n_samples independent chaos-game chains are run from 0 for burn_in steps, so that their
    positions follow the stationary law, then one more branch and noise draw is made per chain.

    Args:
        ifs (IFSSpec):
            The system; its epsilon and perturbation model are used.
        n_samples (int):
            Number of chains.
        seed (int):
            Seed of the generator.
        burn_in (int):
            Number of steps before sampling; by default the truncation depth for 1e-9.
    Returns (LyapunovEstimate):
        Value, standard error and sample count.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    rng = np.random.default_rng(seed)
    q = contraction_bound(ifs)
    if burn_in is None:
        burn_in = int(math.ceil(math.log(0.5e-9) / math.log(q))) if 0.0 < q < 1.0 else 100

    x = np.zeros(n_samples)
    for _ in range(burn_in):
        indices = rng.choice(ifs.size, size=n_samples, p=ifs.p)
        noise = draw_noise(ifs, indices, rng.random(n_samples), ifs.epsilon)
        x = apply_perturbed(ifs, indices, noise, x)

    indices = rng.choice(ifs.size, size=n_samples, p=ifs.p)
    noise = draw_noise(ifs, indices, rng.random(n_samples), ifs.epsilon)
    if ifs.perturbation == ADDITIVE_RATIO:
        logs = np.log(np.abs(noise))
    else:
        slopes = np.empty(n_samples)
        for i, map_spec in enumerate(ifs.maps):
            mask = indices == i
            slopes[mask] = map_spec.derivative(x[mask])
        logs = np.log(np.abs(noise * slopes))

    stderr = float(np.std(logs, ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else math.inf
    return LyapunovEstimate(float(np.mean(logs)), stderr, n_samples)


def lyapunov(ifs, n_samples, seed):
    """
    Estimate the Lyapunov exponent chi of the random system.

    Raises:
        HypothesisError:
            When the estimate is not negative.
    """
    estimate = lyapunov_estimate(ifs, n_samples, seed)
    if estimate.value >= 0.0:
        raise HypothesisError(
            "System is not contracting on average: Lyapunov exponent estimate %r >= 0"
            % estimate.value
        )
    return estimate.value


def dimension_bound(ifs, n_samples=100000, seed=0):
    """Return the dimension bound h / |chi| with chi estimated by Monte Carlo."""
    return entropy(ifs.p) / abs(lyapunov(ifs, n_samples, seed))
