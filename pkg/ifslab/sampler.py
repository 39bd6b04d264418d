"""Monte Carlo samplers of the invariant measures of perturbed and unperturbed systems."""

from dataclasses import dataclass
import logging
import math

import numpy as np

from .exceptions import HypothesisError, RangeEscapeError
from .ifs_model import (
    ADDITIVE_RATIO,
    MULTIPLICATIVE,
    apply_maps,
    apply_perturbed,
    contraction_bound,
    draw_noise,
)
from .measure import EmpiricalMeasure
from .utils.misc import CHUNK_SIZE, log_step, run_chunked, write_csv

LOG = logging.getLogger("ifslab")

TRUNCATION_TARGET = 1e-9
ESCAPE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """Independent draws of a truncated random series.

    truncation_bound is twice the largest realized product of the branch Lipschitz bounds over
    the first truncation_depth compositions, so restarting the composition from any other
    point of [-1, 1] moves no sample by more than it.
    """

    values: np.ndarray
    n: int
    truncation_depth: int
    truncation_bound: float
    seed: int
    model: str
    epsilon: float = 0.0

    def to_dict(self):
        """Return JSON representation without the values."""
        return {
            "n": self.n,
            "truncation_depth": self.truncation_depth,
            "truncation_bound": self.truncation_bound,
            "seed": self.seed,
            "model": self.model,
            "epsilon": self.epsilon,
        }


def default_depth(ifs, epsilon, model=None):
    """
    Smallest depth with 2 q^depth < 1e-9 for the uniform contraction bound q.

    Raises:
        HypothesisError:
            When q >= 1, i.e. the perturbed branches are not uniform contractions.
    """
    q = contraction_bound(ifs, epsilon, model)
    if q >= 1.0:
        raise HypothesisError("Perturbed branches are not contractions: q = %r >= 1" % q)
    if q <= 0.0:
        return 1
    return int(math.floor(math.log(TRUNCATION_TARGET / 2.0) / math.log(q))) + 1


def _series_chunk(ifs, epsilon, depth, model):
    lipschitz = np.array([m.lambda_max for m in ifs.maps])

    def work(size, rng):
        # column k holds the k-th outermost branch, so a deeper run extends the same draws
        indices = np.empty((depth, size), dtype=int)
        uniforms = np.empty((depth, size))
        for k in range(depth):
            indices[k] = rng.choice(ifs.size, size=size, p=ifs.p)
            uniforms[k] = rng.random(size)

        x = np.zeros(size)
        log_factor = np.zeros(size)
        with np.errstate(divide="ignore"):
            for k in range(depth - 1, -1, -1):
                noise = draw_noise(ifs, indices[k], uniforms[k], epsilon, model)
                x = apply_perturbed(ifs, indices[k], noise, x, model)
                if model == ADDITIVE_RATIO:
                    log_factor += np.log(np.abs(noise))
                else:
                    log_factor += np.log(np.abs(noise) * lipschitz[indices[k]])
                escaped = (x < -1.0 - ESCAPE_TOL) | (x >= 1.0 + ESCAPE_TOL)
                if np.any(escaped):
                    raise RangeEscapeError(
                        "Orbit left [-1, 1) at depth %d: x = %r" % (k, float(x[escaped][0]))
                    )
        return np.column_stack([x, log_factor])

    return work


def _sample_series(ifs, epsilon, n, depth, seed, threads, model):
    if n < 1:
        raise ValueError("n must be at least 1")
    if depth is None:
        depth = default_depth(ifs, epsilon, model)
    if depth < 1:
        raise ValueError("depth must be at least 1")
    LOG.info(
        "Drawing %d samples (model %s, epsilon %r, depth %d, seed %d)",
        n,
        model,
        epsilon,
        depth,
        seed,
    )
    data = run_chunked(_series_chunk(ifs, epsilon, depth, model), n, seed, threads, CHUNK_SIZE)
    bound = 2.0 * float(np.exp(np.max(data[:, 1])))
    return SampleBatch(
        values=data[:, 0],
        n=n,
        truncation_depth=depth,
        truncation_bound=bound,
        seed=seed,
        model=model,
        epsilon=float(epsilon),
    )


@log_step("Sample Z epsilon")
def sample_z_epsilon(ifs, epsilon, n, depth=None, seed=0, threads=1):
    """
    Draw n samples of Z_eps = lim f_{i_1,y_1} o ... o f_{i_depth,y_depth}(0).

    Branches are drawn i.i.d. from p and multipliers y i.i.d. uniform on [1 - eps, 1 + eps].
    The composition is evaluated from the innermost branch outwards. Runs with the same seed
    share their branch draws and uniforms, so samples at different eps are coupled.

    Args:
        ifs (IFSSpec):
            The system.
        epsilon (float):
            Noise level.
        n (int):
            Number of samples.
        depth (int):
            Number of compositions; default_depth by default.
        seed (int):
            Root seed.
        threads (int):
            Number of worker threads.
    Returns (SampleBatch):
        The samples.
    Raises:
        RangeEscapeError:
            When an orbit leaves [-1, 1) by more than 1e-9.
    """
    return _sample_series(ifs, epsilon, n, depth, seed, threads, MULTIPLICATIVE)


@log_step("Sample X lambda")
def sample_x_lambda(ifs, epsilon, n, depth=None, seed=0, threads=1):
    """
    Draw n truncated evaluations of X = sum_k a_{i_k} (1 - l_k) prod_{j<k} l_j.

    Each ratio l_k is drawn uniform on [lambda_{i_k} - eps, lambda_{i_k} + eps]. The partial
    series equals the composition of the affine branches with ratios l_k applied to 0.

    Raises:
        HypothesisError:
            When some lambda_i - eps <= 0.
    """
    lambdas = ifs.lambdas
    if np.any(lambdas - epsilon <= 0.0):
        raise HypothesisError(
            "Perturbed ratios must stay positive: min lambda_i - eps = %r"
            % float(np.min(lambdas) - epsilon)
        )
    return _sample_series(ifs, epsilon, n, depth, seed, threads, ADDITIVE_RATIO)


def sample_measure(ifs, epsilon=None, n=100000, depth=None, seed=0, threads=1):
    """Sample the invariant measure of the system's own perturbation model."""
    epsilon = ifs.epsilon if epsilon is None else epsilon
    if ifs.perturbation == ADDITIVE_RATIO:
        return sample_x_lambda(ifs, epsilon, n, depth, seed, threads)
    return sample_z_epsilon(ifs, epsilon, n, depth, seed, threads)


def sample_unperturbed(ifs, n, depth=None, seed=0, threads=1):
    """Sample the unperturbed invariant measure (eps = 0)."""
    return sample_measure(ifs, 0.0, n, depth, seed, threads)


def empirical_measure(batch, bins):
    """
    Build the empirical measure of a batch with an equal-width histogram over [-1, 1].

    Raises:
        ValueError:
            When the batch is empty or bins < 1.
    """
    if batch.n == 0 or len(batch.values) == 0:
        raise ValueError("Cannot build an empirical measure from an empty batch")
    if bins < 1:
        raise ValueError("bins must be at least 1")
    return EmpiricalMeasure(batch.values, bins=bins)


def invariance_pushforward(batch, ifs, bins=None):
    """
    Push the samples through every unperturbed branch: the mixture sum_i p_i nu o f_i^-1.

    Atom f_i(x) gets weight p_i / n.

    Returns (EmpiricalMeasure):
        The mixture measure with l * n atoms.
    """
    values = np.asarray(batch.values)
    images = []
    weights = []
    for i, p_i in enumerate(ifs.probabilities):
        indices = np.full(values.size, i)
        images.append(apply_maps(ifs, indices, values))
        weights.append(np.full(values.size, p_i / values.size))
    return EmpiricalMeasure(
        np.concatenate(images), np.concatenate(weights), bins=bins, count=values.size
    )


def write_batch_csv(path, batch):
    """Write one sample value per row."""
    return write_csv(path, ["value"], ((float(v),) for v in batch.values))


def write_histogram_csv(path, measure):
    """Write the histogram of a measure with columns bin_left, bin_right, mass."""
    if measure.edges is None:
        raise ValueError("Measure has no histogram")
    rows = zip(
        (float(e) for e in measure.edges[:-1]),
        (float(e) for e in measure.edges[1:]),
        (float(m) for m in measure.masses),
    )
    return write_csv(path, ["bin_left", "bin_right", "mass"], rows)
