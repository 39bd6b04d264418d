import abc
import copy
import datetime
import logging

LOG = logging.getLogger("ifslab")

STATES = ("ready", "running", "finished", "failed", "error")


def isodate_now():
    """Return current datetime in iso8601 format."""
    return "%s%s" % (datetime.datetime.utcnow().isoformat(), "Z")


class StepFailedError(Exception):
    """Exception indicating that an acceptance check of a step failed."""


class StepState(object):
    """Enum-like class to store step state."""

    def __init__(self):
        """Init step state."""
        self._state = "ready"

    def get(self):
        """Return step state."""
        return self._state

    def set(self, state):
        """Set step state."""
        if state not in STATES:
            raise ValueError("state has to be one of %s" % (STATES,))
        self._state = state


class StepResults(object):
    """Results of a step: computed values, acceptance checks and errors."""

    def __init__(self):
        """Init step results."""
        self.results = {}
        self.checks = {}
        self.errors = {}

    @property
    def failed_checks(self):
        """Names of the acceptance checks which did not pass."""
        return sorted(name for name, passed in self.checks.items() if not passed)

    def dump(self):
        """Return step results in json-compatible dict object."""
        return {"results": self.results, "checks": self.checks, "errors": self.errors}


class Step(object):
    """Base class for an experiment stage.

    Subclasses overwrite `_run`, which reads the experiment config from
    `external_resources["config"]`, stores JSON-compatible values in
    `self.results.results` and the outcome of every acceptance assertion in
    `self.results.checks`. `_run` raises StepFailedError when an assertion or a
    hypothesis does not hold (state 'failed'); any other exception sets the state
    to 'error' and stops the stepper.
    """

    NAME = "AbstractExperimentStep"
    __metaclass__ = abc.ABCMeta

    def __init__(self, uid, step_args, step_kwargs, external_resources=None):
        """Initialize the step.

        Args:
            uid: (str)
                An unique id for identifying two steps of the same class
            step_args: (list)
                Arguments used for the step
            step_kwargs: (dict)
                Dictionary of a name arguments for the step
            external_resources: any-object
                Resources which are not part of the step data, e.g. the experiment config
        """
        self.step_args = list(step_args)
        self.step_kwargs = dict(step_kwargs)
        self.external_resources = external_resources or {}
        self.uid = uid

        self.stats = {"started": None, "finished": None, "state": "ready"}
        self._state = StepState()
        self.results = StepResults()

    @property
    def fullname(self):
        """Full name of class instance."""
        return "%s:%s" % (self.NAME, self.uid)

    @property
    def state(self):
        """Property for retrieving class state."""
        return self._state.get()

    def set_state(self, state):
        """Set step state."""
        self._state.set(state)

    def run(self):
        """Run the step code. Only steps in 'ready' state are executed."""
        if self.state != "ready":
            return
        self.stats["started"] = isodate_now()
        try:
            self.set_state("running")
            self._run()
        except StepFailedError:
            LOG.warning(
                "Step %s failed: %s",
                self.fullname,
                ", ".join(self.results.failed_checks + sorted(self.results.errors)),
            )
            self.set_state("failed")
        except Exception:
            self.set_state("error")
            raise
        else:
            self.set_state("finished")
        finally:
            self.stats["finished"] = isodate_now()
            self.stats["state"] = self.state

    def check(self, name, passed):
        """Record an acceptance check and return its outcome."""
        self.results.checks[name] = bool(passed)
        return bool(passed)

    @abc.abstractmethod
    def _run(self):  # pragma: no cover
        """Run code of the step."""
        raise NotImplementedError

    def dump(self):
        """Dump step data into json compatible dictionary."""
        return {
            "name": self.NAME,
            "step_args": self.step_args,
            "step_kwargs": self.step_kwargs,
            "uid": self.uid,
            "stats": copy.deepcopy(self.stats),
            "results": self.results.dump(),
        }


class Stepper(object):
    """Class which runs a sequence of experiment steps."""

    def __init__(self):
        """Initialize the stepper."""
        self.steps = []

    def add_step(self, step):
        """Add step to step sequence."""
        self.steps.append(step)

    @property
    def failed_steps(self):
        """Steps which ended in the 'failed' state."""
        return [step for step in self.steps if step.state == "failed"]

    def dump(self):
        """Dump stepper state to json compatible dict."""
        return {"steps": [step.dump() for step in self.steps]}

    def run(self):
        """Run the steps in order; an error in a step stops the sequence."""
        for step in self.steps:
            step.run()
