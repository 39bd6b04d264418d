"""Command-line entry point of the laboratory."""

from collections import namedtuple
import logging
import math
import os

from pubtools.pluggy import pm, task_context
import scipy.stats as stats

from .config import config_hash, load_config, to_ifs
from .constants import T3, bounds_report, lemma1_regime_bounds, model_for
from .convergence import (
    invariance_check,
    ks_vs_epsilon,
    ks_vs_m,
    projection_check,
    recursion_check,
    write_ks_csv,
)
from .exceptions import AcceptanceError, HypothesisError, InvalidConfig, RangeEscapeError
from .ifs_model import (
    ADDITIVE_RATIO,
    NOT_APPLICABLE,
    check_l2_condition,
    check_transversality_a1,
    entropy,
    lyapunov_estimate,
    max_epsilon,
    validate,
)
from .measure import EmpiricalMeasure, l2_estimate, write_correlation_csv
from .sampler import empirical_measure, sample_measure, write_batch_csv, write_histogram_csv
from .skewprod import (
    check_cone_invariance,
    check_jacobian,
    pushforward_measure,
    transversality_gap,
    write_occupation_csv,
)
from .utils.misc import (
    add_args_env_variables,
    log_step,
    setup_arg_parser,
    tool_version,
    write_json,
)
from .utils.stepper import Step, StepFailedError, Stepper

LOG = logging.getLogger("ifslab")

EXIT_OK = 0
EXIT_HYPOTHESIS = 2
EXIT_ACCEPTANCE = 3

INVARIANCE_KS_LIMIT = 0.02
SKEW_KS_LIMIT = 0.03
RECURSION_RADII = 2

CLI_ARGS = {
    ("--config",): {
        "help": "Experiment config file (JSON).",
        "required": True,
        "type": str,
    },
    ("--out",): {
        "help": "Output directory. Can be specified by env variable IFSLAB_OUT_DIR.",
        "required": False,
        "type": str,
        "env_variable": "IFSLAB_OUT_DIR",
    },
    ("--seed",): {
        "help": "Root seed, overrides the config value.",
        "required": False,
        "type": int,
    },
    ("--threads",): {
        "help": "Number of worker threads. Can be specified by env variable IFSLAB_THREADS.",
        "required": False,
        "type": int,
        "env_variable": "IFSLAB_THREADS",
    },
    ("--epsilon",): {
        "help": "Noise level, overrides the config value.",
        "required": False,
        "type": float,
    },
    ("--m",): {
        "help": "Number of dyadic levels of the cube map, overrides the config value.",
        "required": False,
        "type": int,
    },
    ("--sigma",): {
        "help": "Free parameter of the additive-ratio transversality constant.",
        "required": False,
        "type": float,
    },
    ("--debug",): {
        "help": "Log debug messages.",
        "required": False,
        "type": bool,
    },
}

Outcome = namedtuple("Outcome", ["data", "paths", "failed", "hypotheses"])


def _path(config, name):
    return os.path.join(config.out_dir, name)


@log_step("Validate")
def run_validate(config):
    """Run the hypothesis checks and report entropy, Lyapunov exponent and dimension bound."""
    ifs = to_ifs(config)
    report = validate(ifs)
    data = report.to_dict()
    data["l2_condition"] = check_l2_condition(ifs)._asdict()
    if ifs.size < 2:
        # pairwise conditions need two maps
        not_applicable = [check.name for check in report.checks if not check.applicable]
        if ifs.all_affine:
            data["transversality_a1"] = {"value": None, "passes": None, "status": NOT_APPLICABLE}
            not_applicable.append("transversality_a1")
        data["max_epsilon"] = None
        data["not_applicable"] = not_applicable + ["max_epsilon"]
    else:
        if ifs.all_affine:
            transversality = check_transversality_a1(ifs)
            data["transversality_a1"] = dict(
                transversality._asdict(), status="passed" if transversality.passes else "failed"
            )
        data["max_epsilon"] = max_epsilon(ifs)

    estimate = lyapunov_estimate(ifs, config.lyapunov_samples, config.seed)
    h = entropy(ifs.p)
    data["entropy"] = h
    data["lyapunov"] = estimate._asdict()
    data["dimension_bound"] = h / abs(estimate.value) if estimate.value < 0.0 else None

    hypotheses = [check.name for check in report.failed if check.severity == "error"]
    return Outcome(data, [], [], hypotheses)


@log_step("Bounds")
def run_bounds(config):
    """Evaluate the closed-form constants of the L2-density bound."""
    ifs = to_ifs(config)
    report = bounds_report(ifs, config.epsilon, config.m, config.sigma)
    LOG.info("Constants:\n%s", report.table())
    data = report.to_dict()
    if report.model == T3:
        regime_bounds = lemma1_regime_bounds(ifs, config.epsilon, config.m)
        data["regime_bounds"] = {
            "%d,%d" % (i + 1, j + 1): bounds
            for (i, j), bounds in sorted(regime_bounds.items())
        }
    return Outcome(data, [], [], [])


def _sample(config, ifs):
    return sample_measure(
        ifs, config.epsilon, config.n_samples, config.depth, config.seed, config.threads
    )


@log_step("Sample")
def run_sample(config):
    """Sample the perturbed invariant measure and write samples and histogram."""
    ifs = to_ifs(config)
    batch = _sample(config, ifs)
    measure = empirical_measure(batch, config.bins)
    paths = [
        write_batch_csv(_path(config, "samples.csv"), batch),
        write_histogram_csv(_path(config, "histogram.csv"), measure),
    ]
    data = batch.to_dict()
    data["mean"] = float(batch.values.mean())
    data["histogram_mass"] = float(measure.masses.sum())
    return Outcome(data, paths, [], [])


@log_step("L2 estimate")
def run_l2(config):
    """Estimate (1/r^2)(nu, nu)_r along the r ladder and compare with the bound."""
    ifs = to_ifs(config)
    batch = _sample(config, ifs)
    estimate = l2_estimate(EmpiricalMeasure(batch.values), config.r_ladder)
    paths = [write_correlation_csv(_path(config, "correlation.csv"), estimate)]

    has_density = bool(estimate.stable and math.isfinite(estimate.liminf_proxy))
    if not has_density:
        LOG.warning("No density: (1/r^2)(nu, nu)_r does not stabilize as r decreases")
    try:
        bound = bounds_report(ifs, config.epsilon, config.m, config.sigma).l2_bound
    except HypothesisError as e:
        LOG.warning("L2 bound not available: %s", e)
        bound = None

    data = estimate._asdict()
    data.update({"has_density": has_density, "l2_bound": bound})
    failed = []
    if bound is not None and has_density:
        data["below_bound"] = estimate.liminf_proxy < bound**2
        if not data["below_bound"]:
            failed.append("l2.below_bound")
    return Outcome(data, paths, failed, [])


@log_step("Skew product")
def run_skewprod(config):
    """Check Jacobian, cones and transversality and project the cube measure."""
    ifs = to_ifs(config)
    eps, m = config.epsilon, config.m
    variant = model_for(ifs)
    cone = check_cone_invariance(ifs, eps, m, variant, config.trials, config.seed)
    gap = transversality_gap(ifs, eps, m, variant, config.trials, config.seed, config.sigma)
    jac = check_jacobian(ifs, eps, m, variant, config.jacobian_points, config.seed)
    result = pushforward_measure(
        ifs,
        eps,
        m,
        variant,
        config.n_points,
        config.n_steps,
        config.seed,
        config.threads,
        slice_bins=config.slice_bins,
        bins=config.bins,
    )
    paths = [
        write_histogram_csv(_path(config, "projection_histogram.csv"), result.projection),
        write_occupation_csv(_path(config, "occupation.csv"), result),
    ]
    radii = list(config.r_ladder[:RECURSION_RADII])
    recursion = recursion_check(ifs, eps, m, radii, result.slices, sigma=config.sigma)
    projection = projection_check(result, radii)
    z_ks = stats.kstest(result.z_marginal.samples, "uniform", args=(-1.0, 2.0)).statistic

    data = {
        "variant": variant,
        "cone": cone._asdict(),
        "transversality": gap._asdict(),
        "jacobian": jac._asdict(),
        "recursion": [row._asdict() for row in recursion],
        "projection": [row._asdict() for row in projection],
        "z_marginal_ks": float(z_ks),
        "y_slab_masses": result.y_slab_masses,
    }
    failed = [
        name
        for name, passed in (
            ("skewprod.cone", cone.passes),
            ("skewprod.transversality", gap.passes),
            ("skewprod.jacobian", jac.passes),
            ("skewprod.recursion", all(row.passes for row in recursion)),
            ("skewprod.projection", all(row.passes for row in projection)),
        )
        if not passed
    ]
    return Outcome(data, paths, failed, [])


@log_step("Converge")
def run_converge(config):
    """KS distances along the eps and m ladders and the invariance self-consistency check."""
    ifs = to_ifs(config)
    by_epsilon = ks_vs_epsilon(
        ifs, config.epsilon_ladder, config.n_samples, config.depth, config.seed, config.threads
    )
    by_m = ks_vs_m(
        ifs,
        config.epsilon,
        config.m_ladder,
        config.n_points,
        config.n_steps,
        config.n_samples,
        config.depth,
        config.seed,
        config.threads,
    )
    invariance = invariance_check(ifs, config.n_samples, config.depth, config.seed, config.threads)
    paths = [
        write_ks_csv(_path(config, "ks_epsilon.csv"), by_epsilon),
        write_ks_csv(_path(config, "ks_m.csv"), by_m),
    ]
    data = {
        "ks_epsilon": by_epsilon._asdict(),
        "ks_m": by_m._asdict(),
        "invariance": invariance._asdict(),
    }
    checks = [
        ("converge.epsilon_decreasing", by_epsilon.decreasing),
        ("converge.m_decreasing", by_m.decreasing),
        ("converge.m_final", by_m.distances[-1] < SKEW_KS_LIMIT),
        ("converge.invariance", invariance.ks < INVARIANCE_KS_LIMIT),
    ]
    # affine systems also get the additive-ratio ladder when its ratios stay positive
    t4_ladder = ifs.all_affine and ifs.perturbation != ADDITIVE_RATIO
    if t4_ladder and min(ifs.lambdas) <= max(config.epsilon_ladder):
        LOG.warning(
            "Skipping the AdditiveRatio ladder: min lambda_i = %s <= max eps = %s",
            min(ifs.lambdas),
            max(config.epsilon_ladder),
        )
        t4_ladder = False
    if t4_ladder:
        by_t4 = ks_vs_epsilon(
            ifs,
            config.epsilon_ladder,
            config.n_samples,
            config.depth,
            config.seed,
            config.threads,
            model=ADDITIVE_RATIO,
        )
        paths.append(write_ks_csv(_path(config, "ks_epsilon_t4.csv"), by_t4))
        data["ks_epsilon_t4"] = by_t4._asdict()
        checks.append(("converge.t4_decreasing", by_t4.decreasing))
    failed = [name for name, passed in checks if not passed]
    return Outcome(data, paths, failed, [])


class ExperimentStep(Step):
    """A subcommand run as a stage of the 'report' subcommand."""

    NAME = "ExperimentStep"
    RUNNER = None

    def _run(self):
        config = self.external_resources["config"]
        try:
            outcome = type(self).RUNNER(config)
        except (HypothesisError, RangeEscapeError) as e:
            self.results.errors[self.NAME] = str(e)
            raise StepFailedError("%s failed" % self.NAME)
        self.results.results = dict(outcome.data, artifacts=outcome.paths)
        for name in outcome.hypotheses:
            self.results.errors[name] = "hypothesis check failed"
        for name in outcome.failed:
            self.check(name, False)
        if outcome.failed or outcome.hypotheses:
            raise StepFailedError("%s failed" % self.NAME)


class ValidateStep(ExperimentStep):
    """Hypothesis checks."""

    NAME = "validate"
    RUNNER = staticmethod(run_validate)


class BoundsStep(ExperimentStep):
    """Closed-form constants."""

    NAME = "bounds"
    RUNNER = staticmethod(run_bounds)


class SampleStep(ExperimentStep):
    """Sampling."""

    NAME = "sample"
    RUNNER = staticmethod(run_sample)


class L2Step(ExperimentStep):
    """L2 estimation."""

    NAME = "l2"
    RUNNER = staticmethod(run_l2)


class SkewprodStep(ExperimentStep):
    """Cube map checks."""

    NAME = "skewprod"
    RUNNER = staticmethod(run_skewprod)


class ConvergeStep(ExperimentStep):
    """Convergence studies."""

    NAME = "converge"
    RUNNER = staticmethod(run_converge)


REPORT_STEPS = (ValidateStep, BoundsStep, SampleStep, L2Step, SkewprodStep, ConvergeStep)

@log_step("Report")
def run_report(config):
    """Run every stage in sequence and aggregate the results."""
    stepper = Stepper()
    for step_class in REPORT_STEPS:
        stepper.add_step(step_class("1", [], {}, {"config": config}))
    stepper.run()

    paths, failed, hypotheses = [], [], []
    for step in stepper.steps:
        paths.extend(step.results.results.get("artifacts", []))
        failed.extend(step.results.failed_checks)
        hypotheses.extend(sorted(step.results.errors))
    data = stepper.dump()
    data["passed"] = not stepper.failed_steps
    return Outcome(data, paths, failed, hypotheses)


SUBCOMMANDS = {
    "validate": run_validate,
    "bounds": run_bounds,
    "sample": run_sample,
    "l2": run_l2,
    "skewprod": run_skewprod,
    "converge": run_converge,
    "report": run_report,
}


def run(subcommand, config):
    """
    Run a subcommand and write its JSON report.

    Every report embeds the config hash and the tool version.

    Args:
        subcommand (str):
            One of SUBCOMMANDS.
        config (ExperimentConfig):
            Effective configuration.
    Returns ([str]):
        Paths of the written files.
    Raises:
        HypothesisError:
            When a hypothesis check failed; the report is written first. Errors raised by the
            subcommand itself propagate and leave no report.
        AcceptanceError:
            When an acceptance check failed; the report is written first.
    """
    os.makedirs(config.out_dir, exist_ok=True)
    outcome = SUBCOMMANDS[subcommand](config)
    data = dict(outcome.data)
    data.update(
        {
            "subcommand": subcommand,
            "config_hash": config_hash(config),
            "version": tool_version(),
            "seed": config.seed,
        }
    )
    paths = outcome.paths + [write_json(_path(config, "%s.json" % subcommand), data)]
    pm.hook.ifslab_artifacts_written(subcommand=subcommand, paths=paths)

    if outcome.hypotheses:
        raise HypothesisError("Hypothesis checks failed: %s" % ", ".join(outcome.hypotheses))
    if outcome.failed:
        pm.hook.ifslab_acceptance_failed(subcommand=subcommand, checks=outcome.failed)
        raise AcceptanceError("Acceptance checks failed: %s" % ", ".join(outcome.failed))
    return paths


def construct_overrides(args):
    """
    Map command-line arguments to config overrides.

    Args:
        args (argparse.Namespace):
            Parsed command line arguments.
    Returns (dict):
        Config keys and values; unset arguments are None.
    """
    return {
        "out_dir": args.out,
        "seed": args.seed,
        "threads": args.threads,
        "epsilon": args.epsilon,
        "m": args.m,
        "sigma": args.sigma,
    }


def setup_args():
    """Set up argparser without extra parameters, this method is used for auto doc generation."""
    return setup_arg_parser(
        CLI_ARGS, subcommands=list(SUBCOMMANDS), description="Perturbed IFS laboratory."
    )


def main(sysargs=None):
    """Entrypoint of the ifslab command."""
    logging.basicConfig(level=logging.INFO)

    parser = setup_args()
    if sysargs:
        args = parser.parse_args(sysargs[1:])
    else:
        args = parser.parse_args()  # pragma: no cover
    args = add_args_env_variables(args, CLI_ARGS)
    if args.debug:
        LOG.setLevel(logging.DEBUG)

    with task_context():
        try:
            config = load_config(args.config, construct_overrides(args))
            run(args.subcommand, config)
        except (InvalidConfig, HypothesisError, RangeEscapeError) as e:
            LOG.error("%s", e)
            return EXIT_HYPOTHESIS
        except AcceptanceError as e:
            LOG.error("%s", e)
            return EXIT_ACCEPTANCE
    return EXIT_OK
