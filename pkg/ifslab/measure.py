"""Empirical measures, the correlation form (rho_1, rho_2)_r and distances between measures."""

from collections import namedtuple
import logging
import math

import numpy as np
import scipy.stats as stats

from .exceptions import DomainError
from .utils.misc import write_csv

LOG = logging.getLogger("ifslab")

INTERVAL = (-1.0, 1.0)
MIN_SAMPLES_PER_WINDOW = 50
STABLE_RATIO = (0.8, 1.25)

L2Estimate = namedtuple(
    "L2Estimate", ["r", "per_r", "usable", "liminf_proxy", "ratios", "stable"]
)


class EmpiricalMeasure(object):
    """Weighted atoms on the line, kept sorted, with an optional histogram over [-1, 1]."""

    def __init__(self, samples, weights=None, bins=None, total_mass=1.0, count=None):
        """
        Initialize.

        Args:
            samples (array-like):
                Atom positions.
            weights (array-like):
                Non-negative atom weights; equal weights by default. They are normalized to
                total_mass.
            bins (int):
                Number of equal-width histogram bins over [-1, 1]; no histogram if None.
            total_mass (float):
                Total mass of the measure.
            count (int):
                Number of draws the measure was built from; defaults to the number of atoms.
        """
        samples = np.asarray(samples, dtype=float).ravel()
        if samples.size == 0:
            raise ValueError("An empirical measure needs at least one sample")
        order = np.argsort(samples, kind="stable")
        self.samples = samples[order]
        self.uniform = weights is None
        if weights is None:
            weights = np.full(samples.size, total_mass / samples.size)
        else:
            weights = np.asarray(weights, dtype=float).ravel()
            if weights.shape != samples.shape:
                raise ValueError("Got %d weights for %d samples" % (weights.size, samples.size))
            weights = weights[order]
            if np.any(weights < 0.0) or weights.sum() <= 0.0:
                raise ValueError("Weights must be non-negative with a positive sum")
            weights = weights * (total_mass / weights.sum())
        self.weights = weights
        self.total_mass = float(total_mass)
        self.count = int(count if count is not None else samples.size)
        self._cumulative = np.concatenate([[0.0], np.cumsum(weights)])
        self.edges = None
        self.masses = None
        if bins is not None:
            self.edges, self.masses = self.histogram(bins)

    @property
    def size(self):
        """Number of atoms."""
        return self.samples.size

    @property
    def effective_size(self):
        """Kish effective sample size (sum w)^2 / sum w^2."""
        return float(self.total_mass**2 / np.sum(self.weights**2))

    def cdf(self, t):
        """Distribution function t -> mu((-inf, t]) / total mass, vectorized."""
        index = np.searchsorted(self.samples, t, side="right")
        return self._cumulative[index] / self.total_mass

    def histogram(self, bins, interval=INTERVAL):
        """
        Equal-width histogram over the interval with masses summing to the total mass.

        Samples outside the interval (truncation slack) are counted in the edge bins.

        Returns ((numpy.ndarray, numpy.ndarray)):
            Bin edges and bin masses.
        """
        if bins < 1:
            raise ValueError("bins must be at least 1")
        clipped = np.clip(self.samples, interval[0], interval[1])
        masses, edges = np.histogram(clipped, bins=bins, range=interval, weights=self.weights)
        return edges, masses

    def merge(self, other):
        """Pool the draws of two measures; each atom keeps its share of its own measure's count."""
        samples = np.concatenate([self.samples, other.samples])
        weights = np.concatenate(
            [
                self.weights / self.total_mass * self.count,
                other.weights / other.total_mass * other.count,
            ]
        )
        return EmpiricalMeasure(samples, weights, count=self.count + other.count)

    def scaled(self, factor):
        """Return the measure multiplied by a positive factor."""
        return EmpiricalMeasure(
            self.samples, self.weights, total_mass=self.total_mass * factor, count=self.count
        )


def _one_sided_form(mu1, mu2, r):
    """Sum of w_a v_b max(0, 2r - |s_a - t_b|) via prefix sums over the sorted atoms of mu2."""
    s, w = mu1.samples, mu1.weights
    t, v = mu2.samples, mu2.weights
    width = 2.0 * r
    cum_v = np.concatenate([[0.0], np.cumsum(v)])
    cum_vt = np.concatenate([[0.0], np.cumsum(v * t)])

    low = np.searchsorted(t, s - width, side="right")
    mid = np.searchsorted(t, s, side="right")
    high = np.searchsorted(t, s + width, side="left")

    # atoms t in (s - 2r, s] overlap by 2r - (s - t), atoms in (s, s + 2r) by 2r - (t - s)
    left = (width - s) * (cum_v[mid] - cum_v[low]) + (cum_vt[mid] - cum_vt[low])
    right = (width + s) * (cum_v[high] - cum_v[mid]) - (cum_vt[high] - cum_vt[mid])
    return float(np.dot(w, left + right))


def correlation_form(mu1, mu2, r):
    """
    Evaluate (mu1, mu2)_r = integral of mu1(B_r(x)) mu2(B_r(x)) dx exactly.

    For atoms s and t the integrand contributes the overlap length max(0, 2r - |s - t|) of the
    two windows, so the integral is a finite sum over pairs of atoms closer than 2r. The sum is
    evaluated in both orders and averaged, which makes the form exactly symmetric.

    Args:
        mu1 (EmpiricalMeasure):
            First measure.
        mu2 (EmpiricalMeasure):
            Second measure.
        r (float):
            Window half-width (> 0).
    Returns (float):
        The form value.
    """
    if not r > 0.0:
        raise DomainError("r must be positive, got %r" % r)
    return 0.5 * (_one_sided_form(mu1, mu2, r) + _one_sided_form(mu2, mu1, r))


def l2_estimate(mu, r_list, min_samples_per_window=MIN_SAMPLES_PER_WINDOW):
    """
    Evaluate (1/r^2)(mu, mu)_r along a decreasing ladder of radii and a liminf proxy.

    A radius is usable when the expected number of samples per window, effective size times r,
    reaches min_samples_per_window. The proxy is the minimum over the last half of the usable
    ladder; the ratios of consecutive values in that tail tell whether it has stabilized.

    Args:
        mu (EmpiricalMeasure):
            The measure.
        r_list ([float]):
            Strictly decreasing positive radii.
        min_samples_per_window (int):
            Resolution rule for the smallest usable r.
    Returns (L2Estimate):
        Per-r values, usable flags, liminf proxy, tail ratios and stability flag.
    """
    r_list = [float(r) for r in r_list]
    if not r_list or any(r <= 0.0 for r in r_list):
        raise DomainError("Radii must be positive")
    if any(b >= a for a, b in zip(r_list, r_list[1:])):
        raise DomainError("Radii must be strictly decreasing")

    per_r = [correlation_form(mu, mu, r) / r**2 for r in r_list]
    n_eff = mu.effective_size
    usable = [n_eff * r >= min_samples_per_window for r in r_list]
    values = [value for value, ok in zip(per_r, usable) if ok]
    if len(values) < len(r_list):
        LOG.warning(
            "%d of %d radii are below the resolution of %d samples",
            len(r_list) - len(values),
            len(r_list),
            int(n_eff),
        )
    if not values:
        return L2Estimate(r_list, per_r, usable, math.nan, [], False)

    tail = values[len(values) // 2:]
    ratios = [b / a for a, b in zip(tail, tail[1:])]
    # one usable value says nothing about stabilization
    stable = bool(ratios) and all(
        STABLE_RATIO[0] <= ratio <= STABLE_RATIO[1] for ratio in ratios
    )
    return L2Estimate(r_list, per_r, usable, float(min(tail)), ratios, stable)


def j_statistic(slices, r):
    """
    Evaluate J(r) = (1/r^2) sum_k w_k (gamma_k, gamma_k)_r over z-slices.

    Args:
        slices ([(float, EmpiricalMeasure)]):
            Slice weights, summing to the z-interval length 2, and conditional x-measures.
        r (float):
            Window half-width.
    Returns (float):
        The statistic.
    """
    if not slices:
        raise ValueError("j_statistic needs at least one slice")
    total = sum(weight for weight, _ in slices)
    if abs(total - 2.0) > 1e-9:
        raise ValueError("Slice weights must sum to 2, got %r" % total)
    return sum(weight * correlation_form(mu, mu, r) for weight, mu in slices) / r**2


def ks_distance(mu1, mu2):
    """
    Kolmogorov-Smirnov distance sup_t |F_1(t) - F_2(t)| between two measures.

    Returns (float):
        Distance in [0, 1].
    """
    if mu1.uniform and mu2.uniform:
        return float(stats.ks_2samp(mu1.samples, mu2.samples).statistic)
    points = np.concatenate([mu1.samples, mu2.samples])
    return float(np.max(np.abs(mu1.cdf(points) - mu2.cdf(points))))


def write_correlation_csv(path, estimate, j_values=None):
    """
    Write the r ladder with form values (1/r^2)(mu, mu)_r and optional J(r) values.

    Args:
        path (str):
            Output file.
        estimate (L2Estimate):
            Result of l2_estimate.
        j_values ([float]):
            J(r) per radius or None.
    """
    j_values = j_values or [""] * len(estimate.r)
    rows = zip(estimate.r, estimate.per_r, j_values)
    return write_csv(path, ["r", "form_value", "j_value"], rows)
