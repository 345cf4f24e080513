import json

import pytest

from twistlab.cli import main
from twistlab.config import ScenarioConfig, dump_config, from_mapping, load_config
from twistlab.errors import ConfigInvalid
from twistlab.suites import SUITES, default_config, run_suite, sweep


def test_config_roundtrip(tmp_path):
    cfg = ScenarioConfig(kind="circle_crossed", N=64, K=512, seed=3, tolerances={"numeric": 1e-9},
                         params={"sweep_N": [64, 128]})
    p = tmp_path / "c.toml"
    p.write_text(dump_config(cfg))
    assert load_config(p) == cfg


@pytest.mark.parametrize("data", [
    {"version": 2},
    {"scenario": {"kind": "torus"}},
    {"scenario": {"bogus": 1}},
    {"extras": {}},
    {"scenario": {"q": "1"}},
    {"scenario": {"beta": 1.5}},
    {"scenario": {"kind": "circle_crossed", "N": 128, "K": 100}},
    {"tolerances": {"x": -1}},
])
def test_config_invalid(data):
    with pytest.raises(ConfigInvalid):
        from_mapping(data)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigInvalid):
        load_config(tmp_path / "nope.toml")


def test_unknown_suite_and_wrong_kind():
    with pytest.raises(ConfigInvalid):
        default_config("nope")
    with pytest.raises(ConfigInvalid):
        run_suite(ScenarioConfig(kind="circle"), "homology")


def test_every_suite_has_a_valid_default():
    for name in SUITES:
        assert default_config(name).kind in SUITES[name].kinds


def test_verify_json_is_byte_stable(capsys):
    assert main(["verify", "homology", "--json", "--seed", "4"]) == 0
    a = capsys.readouterr().out
    assert main(["verify", "homology", "--json", "--seed", "4"]) == 0
    b = capsys.readouterr().out
    strip = lambda s: {k: v for k, v in json.loads(s).items() if k != "wall_time"}
    assert strip(a) == strip(b)
    assert json.loads(a)["suite"] == "homology"


def test_verify_writes_out_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("TWISTLAB_OUT", str(tmp_path))
    assert main(["verify", "distance"]) == 0
    assert (tmp_path / "distance.json").exists()


def test_gated_failure_sets_exit_code(tmp_path, capsys):
    p = tmp_path / "c.toml"
    p.write_text('version = 1\n[scenario]\nkind = "circle_crossed"\nN = 64\nK = 512\n[params]\nsweep_N = [64, 96]\n')
    # two nearby N give growth < 2x, so the untwisted gate fails
    assert main(["verify", "twisted_boundedness", "--config", str(p)]) == 1


def test_config_errors_exit_2(capsys):
    assert main(["verify", "nope"]) == 2
    assert main(["sweep", "--param", "N", "--values", "", "--metric", "twisted_norm"]) == 2
    assert main(["sweep", "--param", "t", "--values", "64", "--metric", "twisted_norm"]) == 2
    assert "ConfigInvalid" in capsys.readouterr().err


def test_list_and_show(capsys):
    assert main(["list-suites"]) == 0
    out = capsys.readouterr().out
    assert all(n in out for n in SUITES)
    assert main(["show-config", "character"]) == 0
    assert 'kind = "circle"' in capsys.readouterr().out


def test_sweep_csv():
    text = sweep(default_config("character", N=512), "t", [2.0**-4, 2.0**-5, 2.0**-6], "psi_t_error")
    lines = text.strip().splitlines()
    assert lines[0] == "t,psi_t_error"
    assert len(lines) == 5 and lines[-1].startswith("slope,")
    text = sweep(default_config("twisted_boundedness"), "N", [64, 128], "untwisted_norm")
    slope = float(text.strip().splitlines()[-1].split(",")[1])
    assert 0.8 < slope < 1.3  # ||[D, aU]|| grows linearly in N
