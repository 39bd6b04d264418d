"""Closed-form constants of the L2-density bounds and of the transversality lemmas."""

from dataclasses import dataclass
import itertools
import logging
import math

from scipy import optimize

from .exceptions import HypothesisError, InvalidIFSSpec
from .ifs_model import (
    ADDITIVE_RATIO,
    ConditionResult,
    check_l2_condition,
    check_transversality_a1,
    max_epsilon,
    validate,
)

LOG = logging.getLogger("ifslab")

T3 = "T3"
T5 = "T5"
MODELS = (T3, T5)

DEFAULT_M = 10
DEFAULT_SIGMA = 0.5
ADMISSIBLE_XTOL = 1e-7


@dataclass(frozen=True)
class BoundsReport:
    """All constants of one parameter set, as printed by the 'bounds' subcommand."""

    model: str
    epsilon: float
    m: float
    c_double_prime: float
    c_eps_m: float
    b_factor: float
    c_prime: float
    l2_bound: float
    sigma: float
    max_epsilon: float
    admissible_epsilon: float

    def to_dict(self):
        """Return JSON representation."""
        return {
            "model": self.model,
            "epsilon": self.epsilon,
            "m": self.m if math.isfinite(self.m) else "inf",
            "c_double_prime": self.c_double_prime,
            "c_eps_m": self.c_eps_m,
            "b_factor": self.b_factor,
            "c_prime": self.c_prime,
            "l2_bound": self.l2_bound,
            "sigma": self.sigma,
            "max_epsilon": self.max_epsilon,
            "admissible_epsilon": self.admissible_epsilon,
        }

    def table(self):
        """Return a human-readable table of the constants."""
        rows = [
            ("model", self.model),
            ("epsilon", self.epsilon),
            ("m", self.m),
            ("C''", self.c_double_prime),
            ("C_eps,m", self.c_eps_m),
            ("b", self.b_factor),
            ("C'", self.c_prime),
            ("L2 bound C'/sqrt(eps)", self.l2_bound),
            ("sigma", self.sigma),
            ("epsilon bound", self.max_epsilon),
            ("largest admissible epsilon", self.admissible_epsilon),
        ]
        width = max(len(name) for name, _ in rows)
        return "\n".join(
            "%s  %s" % (name.ljust(width), "%.6g" % value if isinstance(value, float) else value)
            for name, value in rows
            if value is not None
        )


def model_for(ifs):
    """Bound model, T3 or T5, matching the perturbation of the system."""
    return T5 if ifs.perturbation == ADDITIVE_RATIO else T3


def _pairs(ifs):
    return itertools.combinations(range(ifs.size), 2)


def _require_pairs(ifs, what):
    if ifs.size < 2:
        raise HypothesisError("%s needs at least two maps" % what)


def _c_double_prime_t3_value(ifs, epsilon):
    a = ifs.fixpoints
    return min(
        (abs(a[i] - a[j]) + epsilon * (-abs(a[i] + a[j]) - 2.0)) / (1.0 - epsilon**2)
        for i, j in _pairs(ifs)
    )


def c_double_prime_t3(ifs, epsilon):
    """
    Evaluate C'' = min_{i != j} (|a_i - a_j| + eps (-|a_i + a_j| - 2)) / (1 - eps^2).

    Args:
        ifs (IFSSpec):
            System with at least two maps.
        epsilon (float):
            Noise level in [0, max_epsilon(ifs)).
    Returns (float):
        The constant, positive under the precondition.
    Raises:
        HypothesisError:
            When epsilon is not admissible.
    """
    _require_pairs(ifs, "C''")
    bound = max_epsilon(ifs)
    if not 0.0 <= epsilon < bound:
        raise HypothesisError(
            "epsilon=%r is not admissible: need 0 <= epsilon < min |a_i - a_j| / (2 + |a_i + a_j|)"
            " = %r" % (epsilon, bound)
        )
    return _c_double_prime_t3_value(ifs, epsilon)


def lemma1_correction(ifs, epsilon, m):
    """
    Evaluate 4 (1 + eps) lambda_max,max / (2^m - lambda_max,max (1 + eps)).

    Raises:
        HypothesisError:
            When m is too small for a positive denominator.
    """
    if m == math.inf:
        return 0.0
    lam = ifs.lambda_max_max
    denominator = 2.0**m - lam * (1.0 + epsilon)
    if denominator <= 0.0:
        raise HypothesisError(
            "m=%r is too small: 2^m - lambda_max,max (1 + epsilon) = %r <= 0" % (m, denominator)
        )
    return 4.0 * (1.0 + epsilon) * lam / denominator


def c_eps_m_lemma1(ifs, epsilon, m):
    """
    Evaluate the transversality constant C_eps,m of the cube map.

    It converges to c_double_prime_t3 as m grows; m may be math.inf. A non-positive value means
    m is not large enough and is logged.
    """
    value = c_double_prime_t3(ifs, epsilon) - lemma1_correction(ifs, epsilon, m)
    if value <= 0.0:
        LOG.warning("C_eps,m = %r is not positive for epsilon=%r, m=%r", value, epsilon, m)
    return value


def lemma1_regime_bounds(ifs, epsilon, m):
    """
    Lower bounds of |u_1 - u_2| / eps in the three position regimes of a common image x.

    Args:
        ifs (IFSSpec):
            System with at least two maps.
        epsilon (float):
            Noise level.
        m (int):
            Partition depth.
    Returns (dict):
        Maps (i, j), ordered so that a_i > a_j, to {"upper": x >= a_i, "middle": a_i >= x >= a_j,
        "lower": x <= a_j} bounds.
    """
    _require_pairs(ifs, "Transversality bounds")
    correction = lemma1_correction(ifs, epsilon, m)
    a = ifs.fixpoints
    bounds = {}
    for i, j in itertools.permutations(range(ifs.size), 2):
        if a[i] <= a[j]:
            continue
        bounds[(i, j)] = {
            "upper": (a[i] - a[j] + epsilon * (a[i] + a[j] - 2.0)) / (1.0 - epsilon**2)
            - correction,
            "middle": (a[i] - a[j]) / (1.0 + epsilon) - correction,
            "lower": (a[i] - a[j] - epsilon * (a[i] + a[j] + 2.0)) / (1.0 - epsilon**2)
            - correction,
        }
    return bounds


def b_factor(ifs, epsilon, model=None):
    """
    Evaluate the contraction factor b of the J(r) recursion.

    T3: sum p_i^2 (1 + eps) lambda_{i,max} / ((1 - eps) lambda_{i,min})^2.
    T5: sum p_i^2 (lambda_i + eps) / (lambda_i - eps)^2.
    Values >= 1 are returned; bound operations refuse them.
    """
    model = model or model_for(ifs)
    value = 0.0
    for prob, map_spec in zip(ifs.probabilities, ifs.maps):
        if model == T5:
            low = map_spec.lam - epsilon
            if low <= 0.0:
                return math.inf
            value += prob**2 * (map_spec.lam + epsilon) / low**2
        else:
            low = (1.0 - epsilon) * map_spec.lambda_min
            if low <= 0.0:
                return math.inf
            value += prob**2 * (1.0 + epsilon) * map_spec.lambda_max / low**2
    return value


def c_double_prime_t5(ifs, sigma=DEFAULT_SIGMA):
    """
    Evaluate the sigma-scaled transversality constant of the additive-ratio model.

    sigma * min_{i != j} (|a_i lambda_j - a_j lambda_i| - |lambda_i - lambda_j|)
    / (lambda_i lambda_j)

    Args:
        ifs (IFSSpec):
            Affine system with at least two maps.
        sigma (float):
            Free parameter in (0, 1).
    Returns (float):
        The constant.
    """
    _require_pairs(ifs, "C''")
    if not 0.0 < sigma < 1.0:
        raise HypothesisError("sigma=%r must lie in (0, 1)" % sigma)
    a, lam = ifs.fixpoints, ifs.lambdas
    return sigma * min(
        (abs(a[i] * lam[j] - a[j] * lam[i]) - abs(lam[i] - lam[j])) / (lam[i] * lam[j])
        for i, j in _pairs(ifs)
    )


def t5_corner_condition(ifs, epsilon):
    """
    Check |a_j d_p - a_i d_q| > |d_p - d_q| at the corners of the noise rectangles.

    d_p ranges over {lambda_i - eps, lambda_i + eps} and d_q over {lambda_j - eps, lambda_j + eps}.

    Returns (ConditionResult):
        The smallest margin |a_j d_p - a_i d_q| - |d_p - d_q| and whether it is positive.
    """
    _require_pairs(ifs, "Corner condition")
    a, lam = ifs.fixpoints, ifs.lambdas
    margin = math.inf
    for i, j in _pairs(ifs):
        for d_p in (lam[i] - epsilon, lam[i] + epsilon):
            for d_q in (lam[j] - epsilon, lam[j] + epsilon):
                margin = min(margin, abs(a[j] * d_p - a[i] * d_q) - abs(d_p - d_q))
    return ConditionResult(float(margin), bool(margin > 0.0))


def admissibility_margin(ifs, epsilon, model=None):
    """
    Smallest slack of the admissibility conditions at epsilon; positive iff admissible.

    T3: epsilon bound, b < 1 and C'' > 0. T5: lambda_i - eps > 0, b < 1 and the corner condition.
    """
    model = model or model_for(ifs)
    if model == T5:
        terms = [
            float(min(ifs.lambdas)) - epsilon,
            1.0 - b_factor(ifs, epsilon, T5),
            t5_corner_condition(ifs, epsilon).value,
        ]
    else:
        terms = [
            max_epsilon(ifs) - epsilon,
            1.0 - b_factor(ifs, epsilon, T3),
            _c_double_prime_t3_value(ifs, epsilon),
        ]
    return min(terms)


def max_admissible_epsilon(ifs, model=None):
    """
    Largest epsilon for which every admissibility condition holds, to 1e-6.

    Returns 0.0 when no positive epsilon is admissible.
    """
    model = model or model_for(ifs)
    _require_pairs(ifs, "Admissible epsilon")
    if model == T5:
        high = float(min(ifs.lambdas)) * (1.0 - 1e-12)
    else:
        high = min(max_epsilon(ifs), 1.0 - 1e-9)
    low = 1e-12

    def margin(eps):
        return admissibility_margin(ifs, eps, model)

    if margin(low) <= 0.0:
        LOG.warning("No positive epsilon is admissible for model %s", model)
        return 0.0
    if margin(high) >= 0.0:
        return high
    root = optimize.brentq(margin, low, high, xtol=ADMISSIBLE_XTOL)
    # stay on the admissible side of the root
    return max(low, root - ADMISSIBLE_XTOL)


def _check_hypotheses(ifs, model):
    report = validate(ifs)
    failed = [c.name for c in report.failed if c.severity == "error"]
    if failed:
        raise HypothesisError("System fails hypothesis checks: %s" % ", ".join(failed))
    _require_pairs(ifs, "Bounds")
    if model == T5:
        if not ifs.all_affine:
            raise HypothesisError("Model T5 needs affine maps")
        condition = check_l2_condition(ifs)
        if not condition.passes:
            raise HypothesisError("sum p_i^2 / lambda_i = %r is not below 1" % condition.value)
        a1 = check_transversality_a1(ifs)
        if not a1.passes:
            raise HypothesisError("Transversality condition (a1) fails: %r <= 1" % a1.value)


def bounds_report(ifs, epsilon=None, m=DEFAULT_M, sigma=DEFAULT_SIGMA, model=None):
    """
    Evaluate every constant of the L2-density bound for one parameter set.

    C' = sqrt(32 / ((1 - b) C'')) and the bound on the L2 norm is C' / sqrt(eps).

    Args:
        ifs (IFSSpec):
            The system.
        epsilon (float):
            Noise level, the system's epsilon by default.
        m (int):
            Partition depth of the cube map (math.inf allowed).
        sigma (float):
            Free parameter of the T5 constant.
        model (str):
            "T3" or "T5"; derived from the perturbation model by default.
    Returns (BoundsReport):
        The constants.
    Raises:
        HypothesisError:
            When a hypothesis fails, b >= 1 or C'' <= 0.
    """
    epsilon = ifs.epsilon if epsilon is None else float(epsilon)
    model = model or model_for(ifs)
    if model not in MODELS:
        raise InvalidIFSSpec("Unknown model '%s'" % model)
    _check_hypotheses(ifs, model)

    if model == T5:
        corner = t5_corner_condition(ifs, epsilon)
        if not corner.passes:
            raise HypothesisError(
                "Corner condition |a_j d_p - a_i d_q| > |d_p - d_q| fails: margin %r" % corner.value
            )
        c_double = c_double_prime_t5(ifs, sigma)
        # Finite-m reports reuse the sigma-scaled limit constant.
        c_eps_m = c_double
        used_sigma = sigma
    else:
        c_double = c_double_prime_t3(ifs, epsilon)
        c_eps_m = c_eps_m_lemma1(ifs, epsilon, m)
        used_sigma = None

    b = b_factor(ifs, epsilon, model)
    if b >= 1.0:
        raise HypothesisError("recursion factor not contracting: b=%r >= 1" % b)
    if c_double <= 0.0:
        raise HypothesisError("C''=%r is not positive" % c_double)

    c_prime = math.sqrt(32.0 / ((1.0 - b) * c_double))
    l2_bound = c_prime / math.sqrt(epsilon) if epsilon > 0.0 else math.inf
    return BoundsReport(
        model=model,
        epsilon=epsilon,
        m=m,
        c_double_prime=c_double,
        c_eps_m=c_eps_m,
        b_factor=b,
        c_prime=c_prime,
        l2_bound=l2_bound,
        sigma=used_sigma,
        max_epsilon=max_epsilon(ifs),
        admissible_epsilon=max_admissible_epsilon(ifs, model),
    )


def c_prime_corollary1(ifs, epsilon):
    """C' of an affine system, with sum p_i^2 (1 + eps) / ((1 - eps)^2 lambda_i) in place of b."""
    lam = ifs.lambdas
    b = sum(
        prob**2 * (1.0 + epsilon) / ((1.0 - epsilon) ** 2 * l)
        for prob, l in zip(ifs.probabilities, lam)
    )
    return math.sqrt(32.0 / ((1.0 - b) * c_double_prime_t3(ifs, epsilon)))


def j_recursion_bound(ifs, epsilon, m, k, j0, sigma=DEFAULT_SIGMA, model=None):
    """
    Right-hand side of J(r_k) <= 8 / (C_eps,m eps) (1 - b^k) / (1 - b) + b^k J(r_0).

    Args:
        ifs (IFSSpec):
            The system.
        epsilon (float):
            Noise level (> 0).
        m (int):
            Partition depth.
        k (int):
            Number of recursion steps (math.inf gives the geometric limit).
        j0 (float):
            J(r_0).
    Returns (float):
        The bound.
    """
    report = bounds_report(ifs, epsilon, m, sigma, model)
    if report.c_eps_m <= 0.0:
        raise HypothesisError("C_eps,m=%r is not positive; increase m" % report.c_eps_m)
    if epsilon <= 0.0:
        raise HypothesisError("The recursion bound needs epsilon > 0")
    b = report.b_factor
    scale = 8.0 / (report.c_eps_m * epsilon)
    if k == math.inf:
        return scale / (1.0 - b)
    return scale * (1.0 - b**k) / (1.0 - b) + b**k * j0
