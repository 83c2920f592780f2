import json

import pytest

from interface_lab.config import COMMANDS, SCHEMA_VERSION, build_config, load_config
from interface_lab.errors import ConfigError


@pytest.mark.parametrize("command", COMMANDS)
def test_defaults_validate(command):
    cfg = build_config(command)
    assert cfg.command == command and cfg.schema_version == SCHEMA_VERSION
    assert len(cfg.digest) == 64


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown configuration keys: bogus"):
        build_config("minimize", {"bogus": 1})


@pytest.mark.parametrize("raw,msg", [
    ({"mass": 1.5}, r"m in \(-1, 1\)"),
    ({"grid": 100}, "power of two"),
    ({"epsilon": 0}, "positive"),
    ({"init": {"kind": "spiral"}}, "init.kind"),
    ({"init": {"kind": "disk", "angle": 1}}, "init: unknown"),
    ({"seeds": []}, "seeds"),
    ({"sigma": True}, "boolean"),
    ({"stepping": "rk4"}, "stepping"),
])
def test_minimize_violations(raw, msg):
    with pytest.raises(ConfigError, match=msg):
        build_config("minimize", raw)


def test_gamma_constraints():
    with pytest.raises(ConfigError, match="strictly decreasing"):
        build_config("gamma", {"epsilons": [0.01, 0.02]})
    with pytest.raises(ConfigError, match=r"\[0, 1 - 2/pi\)"):
        build_config("gamma", {"sigma": 1.0, "mass": 0.5})
    with pytest.raises(ConfigError, match="sqrt"):
        build_config("gamma", {"sigma": 1.0, "r": 0.3})
    # sigma = 0 does not need the penalization window
    assert build_config("gamma", {"mass": 0.5}).density is None


def test_density_defaults_follow_r():
    cfg = build_config("minimize", {"sigma": 2.0, "r": 0.42})
    assert cfg.density == {"kind": "uniform_disk", "center": [0.0, 0.0], "radius": 0.42}


def test_wrong_command_and_schema():
    with pytest.raises(ConfigError, match="not 'gamma'"):
        build_config("gamma", {"command": "place"})
    with pytest.raises(ConfigError, match="schema_version"):
        build_config("place", {"schema_version": 2})


def test_digest_is_order_independent():
    a = build_config("place", {"mass": 0.1, "seed": 3})
    b = build_config("place", {"seed": 3, "mass": 0.1})
    assert a.digest == b.digest
    assert a.digest != build_config("place", {"seed": 4, "mass": 0.1}).digest


def test_load_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"sigma_step": 0.1}))
    cfg = load_config("phase-diagram", p, {"seed": 9})
    assert cfg.sigma_step == 0.1 and cfg.seed == 9
    with pytest.raises(ConfigError, match="not found"):
        load_config("place", tmp_path / "missing.json")
    p.write_text("[1, 2]")
    with pytest.raises(ConfigError, match="JSON object"):
        load_config("place", p)
