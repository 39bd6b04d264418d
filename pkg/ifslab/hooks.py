import sys

from pubtools.pluggy import pm, hookspec

# Define hooks here for any events which may be of interest for tools
# post-processing the laboratory artifacts.


@hookspec
def ifslab_artifacts_written(subcommand, paths):
    """Invoked after a subcommand wrote its output files.

    :param subcommand: Name of the subcommand, e.g. "sample".
    :type subcommand: str
    :param paths: Paths of the written files.
    :type paths: list[str]
    """


@hookspec
def ifslab_acceptance_failed(subcommand, checks):
    """Invoked when acceptance checks of a subcommand fail.

    :param subcommand: Name of the subcommand.
    :type subcommand: str
    :param checks: Names of the failed checks.
    :type checks: list[str]
    """


pm.add_hookspecs(sys.modules[__name__])
