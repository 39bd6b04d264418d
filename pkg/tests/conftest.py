import json

try:
    import mock
except ImportError:
    from unittest import mock

import pytest

from pubtools.pluggy import pm

from ifslab.ifs_model import ADDITIVE_RATIO, IFSSpec, MapSpec

# flake8: noqa: E501


@pytest.fixture
def hookspy():
    # Yields a list which receives a (name, kwargs) tuple
    # every time a pubtools hook is invoked.
    hooks = []

    def record_hook(hook_name, _hook_impls, kwargs):
        hooks.append((hook_name, kwargs))

    def do_nothing(*args, **kwargs):
        pass

    undo = pm.add_hookcall_monitoring(before=record_hook, after=do_nothing)
    yield hooks
    undo()


@pytest.fixture
def caplog(caplog):
    return caplog


@pytest.fixture
def reference_ifs():
    # two affine maps, lambda = 0.6, fixpoints -0.5 and 0.5, equal weights
    return IFSSpec(
        maps=[MapSpec.affine(0.6, -0.5), MapSpec.affine(0.6, 0.5)],
        probabilities=[0.5, 0.5],
        epsilon=0.01,
    )


@pytest.fixture
def t5_ifs():
    return IFSSpec(
        maps=[MapSpec.affine(0.5, -0.5), MapSpec.affine(0.6, 0.5)],
        probabilities=[0.5, 0.5],
        perturbation=ADDITIVE_RATIO,
        epsilon=0.01,
    )


@pytest.fixture
def point_mass_ifs():
    return IFSSpec(maps=[MapSpec.affine(0.5, 0.0)], probabilities=[1.0], epsilon=0.0)


@pytest.fixture
def reference_config_data():
    return {
        "maps": [
            {"kind": "affine", "lambda": 0.6, "fixpoint": -0.5},
            {"kind": "affine", "lambda": 0.6, "fixpoint": 0.5},
        ],
        "probabilities": [0.5, 0.5],
        "seed": 7,
        "epsilon": 0.01,
        "m": 10,
        "sigma": 0.5,
    }


@pytest.fixture
def tmp_config(tmp_path, reference_config_data):
    def write(**overrides):
        data = dict(reference_config_data)
        data.update(overrides)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(data))
        return str(path)

    return write


@pytest.fixture
def fixture_isodate_now():
    counter = {"i": 0}
    with mock.patch("ifslab.utils.stepper.isodate_now") as mocked:
        mocked.side_effect = lambda: [
            counter.__setitem__("i", counter["i"] + 1),
            "isodate_now_" + str(counter["i"]),
        ][1]
        yield mocked
