import argparse
import csv
import functools
import json
import logging
import os
import pkg_resources

from concurrent import futures
from concurrent.futures.thread import ThreadPoolExecutor

import numpy as np

LOG = logging.getLogger("ifslab")

CHUNK_SIZE = 16384


def setup_arg_parser(args, subcommands=None, description=None):
    """
    Set up ArgumentParser with the provided arguments.

    Args:
        args (dict):
            Dictionary of argument aliases and options to be consumed by ArgumentParser.
        subcommands ([str]):
            If given, a positional 'subcommand' argument restricted to these choices is added.
        description (str):
            Parser description.
    Returns:
        (ArgumentParser) Configured instance of ArgumentParser.
    """
    parser = argparse.ArgumentParser(description=description)
    if subcommands:
        parser.add_argument("subcommand", choices=subcommands, help="Stage to run.")
    arg_groups = {}
    for aliases, arg_data in args.items():
        holder = parser
        if "group" in arg_data:
            arg_groups.setdefault(arg_data["group"], parser.add_argument_group(arg_data["group"]))
            holder = arg_groups[arg_data["group"]]
        action = arg_data.get("action")
        if not action and arg_data["type"] == bool:
            action = "store_true"
        kwargs = {
            "help": arg_data.get("help"),
            "required": arg_data.get("required", False),
            "default": arg_data.get("default"),
        }
        if action:
            kwargs["action"] = action
        else:
            kwargs["type"] = arg_data.get("type", str)
            kwargs["nargs"] = arg_data.get("count")

        holder.add_argument(*aliases, **kwargs)

    return parser


def add_args_env_variables(parsed_args, args):
    """
    Add argument values from environment variables.

    Values are converted with the argument's declared type.

    Args:
        parsed_args (argparse.Namespace):
            Parsed arguments object.
        args (dict):
            Argument definition.
    Returns:
        Modified parsed arguments object.
    """
    for aliases, arg_data in args.items():
        named_alias = [x.lstrip("-").replace("-", "_") for x in aliases if x.startswith("--")][0]
        if arg_data.get("env_variable"):
            env_value = os.environ.get(arg_data["env_variable"])
            if getattr(parsed_args, named_alias) is None and env_value:
                setattr(parsed_args, named_alias, arg_data.get("type", str)(env_value))
    return parsed_args


def task_status(event):
    """Helper function. Expand as necessary."""  # noqa: D401
    return dict(event={"type": event})


def log_step(step_name):
    """
    Log status for functions which constitute an entire experiment stage.

    Args:
        step_name (str):
            Name of the stage, e.g., "Sample Z epsilon".
    """
    event_name = step_name.lower().replace(" ", "-")

    def decorate(fn):
        @functools.wraps(fn)
        def fn_wrapper(*args, **kwargs):
            try:
                LOG.info("%s: Started", step_name, extra=task_status("%s-start" % event_name))
                ret = fn(*args, **kwargs)
                LOG.info("%s: Finished", step_name, extra=task_status("%s-end" % event_name))
                return ret
            except Exception:
                LOG.error("%s: Failed", step_name, extra=task_status("%s-error" % event_name))
                raise

        return fn_wrapper

    return decorate


def tool_version():
    """Return the version string embedded in every report."""
    try:
        version = pkg_resources.get_distribution("ifslab").version
    except pkg_resources.DistributionNotFound:
        version = "0+unknown"
    return "ifslab-%s" % version


def chunk_sizes(n, chunk_size=CHUNK_SIZE):
    """
    Split n work items into fixed-size chunks.

    The split depends on n only, never on the number of workers.

    Args:
        n (int):
            Number of items.
        chunk_size (int):
            Maximum chunk size.
    Returns ([int]):
        Sizes of the consecutive chunks.
    """
    sizes = [chunk_size] * (n // chunk_size)
    if n % chunk_size:
        sizes.append(n % chunk_size)
    return sizes


def run_chunked(work, n, seed, threads=1, chunk_size=CHUNK_SIZE):
    """
    Run a seeded chunk function over n items and concatenate the results in chunk order.

    Chunk c gets its own generator built from the c-th child of SeedSequence(seed), so the
    output is reproducible and does not depend on the number of threads.

    Args:
        work (callable):
            Called as work(size, rng) and returning a numpy array (first axis = items).
        n (int):
            Total number of items.
        seed (int):
            Root seed.
        threads (int):
            Number of worker threads.
        chunk_size (int):
            Maximum number of items per chunk.
    Returns (numpy.ndarray):
        Concatenated chunk results.
    """
    sizes = chunk_sizes(n, chunk_size)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    rngs = [np.random.default_rng(child) for child in children]

    if threads <= 1 or len(sizes) == 1:
        return np.concatenate([work(size, rng) for size, rng in zip(sizes, rngs)])

    results = [None] * len(sizes)
    with ThreadPoolExecutor(max_workers=threads) as executor:
        future_results = {
            executor.submit(work, size, rng): index
            for index, (size, rng) in enumerate(zip(sizes, rngs))
        }
        for future in futures.as_completed(future_results):
            if future.exception():
                raise future.exception()
            results[future_results[future]] = future.result()
    return np.concatenate(results)


def write_json(path, data):
    """
    Write a JSON document with sorted keys.

    Args:
        path (str):
            Output file.
        data (dict):
            JSON-compatible data.
    Returns (str):
        The path.
    """
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True, default=_json_default)
        f.write("\n")
    return path


def write_csv(path, header, rows):
    """
    Write an RFC-4180 CSV file.

    Floats are written with repr() so that reruns produce byte-identical files.

    Args:
        path (str):
            Output file.
        header ([str]):
            Column names.
        rows (iterable):
            Row tuples.
    Returns (str):
        The path.
    """
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return path


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError("Object of type %s is not JSON serializable" % type(value).__name__)
