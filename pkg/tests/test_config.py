import json

import pytest

from ifslab import config as config_module
from ifslab.exceptions import InvalidConfig


def test_load_config_defaults(tmp_config):
    config = config_module.load_config(tmp_config())
    assert config.seed == 7
    assert config.epsilon == 0.01
    assert config.m == 10
    assert config.n_samples == 100000
    assert config.r_ladder[0] == 0.05
    assert config.r_ladder[-1] == pytest.approx(0.05 / 64)
    assert config.perturbation == "Multiplicative"
    assert config.depth is None


def test_load_config_overrides(tmp_config):
    config = config_module.load_config(
        tmp_config(), {"seed": 11, "epsilon": None, "out_dir": "elsewhere"}
    )
    assert config.seed == 11
    assert config.epsilon == 0.01
    assert config.out_dir == "elsewhere"


@pytest.mark.parametrize("key", ["maps", "probabilities", "seed"])
def test_load_config_missing_key(tmp_path, reference_config_data, key):
    data = dict(reference_config_data)
    del data[key]
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    with pytest.raises(InvalidConfig, match="'%s' must be present in the config." % key):
        config_module.load_config(str(path))


def test_load_config_unknown_key(tmp_config):
    with pytest.raises(InvalidConfig, match="Unknown config keys: colour"):
        config_module.load_config(tmp_config(colour="blue"))


@pytest.mark.parametrize(
    "overrides,message",
    [
        ({"m": 0}, "'m' must be a positive integer"),
        ({"threads": 1.5}, "'threads' must be a positive integer"),
        ({"depth": 0}, "'depth' must be a positive integer or null"),
        ({"seed": -1}, "'seed' must be a non-negative integer"),
        ({"epsilon": -0.1}, "'epsilon' must be non-negative"),
        ({"r_ladder": [0.01, 0.02]}, "strictly decreasing"),
        ({"r_ladder": []}, "strictly decreasing"),
        ({"m_ladder": [4, 0]}, "'m_ladder' must be a non-empty list of positive integers"),
        ({"m_ladder": []}, "'m_ladder' must be a non-empty list"),
        ({"epsilon_ladder": []}, "'epsilon_ladder' must be a non-empty list"),
        ({"epsilon_ladder": [0.1, -0.1]}, "'epsilon_ladder' must be a non-empty list"),
        ({"perturbation": "Other"}, "Invalid system definition"),
        ({"maps": [{"kind": "affine", "fixpoint": 0.0}]}, "Invalid system definition"),
        ({"probabilities": [1.0]}, "Invalid system definition"),
    ],
)
def test_load_config_bad_values(tmp_config, overrides, message):
    with pytest.raises(InvalidConfig, match=message):
        config_module.load_config(tmp_config(**overrides))


def test_load_config_unreadable(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(InvalidConfig, match="Cannot read config"):
        config_module.load_config(str(path))
    with pytest.raises(InvalidConfig, match="Cannot read config"):
        config_module.load_config(str(tmp_path / "missing.json"))


def test_load_config_not_an_object(tmp_path):
    path = tmp_path / "list.json"
    path.write_text("[1, 2]")
    with pytest.raises(InvalidConfig, match="JSON object"):
        config_module.load_config(str(path))


def test_config_hash_ignores_runtime_keys(tmp_config):
    config = config_module.load_config(tmp_config())
    digest = config_module.config_hash(config)
    assert len(digest) == 64
    assert config_module.config_hash(config.replace(threads=8, out_dir="x")) == digest
    assert config_module.config_hash(config.replace(epsilon=0.02)) != digest
    assert config_module.config_hash(config.replace(seed=8)) != digest


def test_config_hash_independent_of_key_order(tmp_path, reference_config_data):
    first = tmp_path / "first.json"
    second = tmp_path / "second.json"
    first.write_text(json.dumps(reference_config_data))
    second.write_text(json.dumps(dict(reversed(list(reference_config_data.items())))))
    assert config_module.config_hash(
        config_module.load_config(str(first))
    ) == config_module.config_hash(config_module.load_config(str(second)))


def test_to_dict(tmp_config):
    data = config_module.load_config(tmp_config()).to_dict()
    assert isinstance(data["maps"], list)
    assert isinstance(data["r_ladder"], list)
    assert data["maps"][0] == {"kind": "affine", "lambda": 0.6, "fixpoint": -0.5}


def test_replace_validates(tmp_config):
    config = config_module.load_config(tmp_config())
    assert config.replace(m=None) == config
    with pytest.raises(InvalidConfig):
        config.replace(bins=0)


def test_to_ifs(tmp_config):
    config = config_module.load_config(tmp_config())
    ifs = config_module.to_ifs(config)
    assert ifs.size == 2
    assert ifs.epsilon == 0.01
    assert config_module.to_ifs(config, epsilon=0.05).epsilon == 0.05
