import json

import pytest

from stratanet.config import BootstrapConfig, PathsConfig, PipelineConfig, SbmConfig
from stratanet.model import InputError


def make_config(**kw):
    return PipelineConfig(paths=PathsConfig(["events.csv"], "roster.csv", None, "out"), **kw)


def test_json_round_trip():
    cfg = make_config(alpha=0.05, seed=7, bootstrap=BootstrapConfig(n=12, fix_size_to="ind_side"),
                      sbm=SbmConfig(n_sweeps=40, rmi_samples=2), levels=["org_main", "ind_side"])
    back = PipelineConfig.from_json(cfg.to_json())
    assert back == cfg
    assert back.config_hash() == cfg.config_hash()


def test_level_aliases_normalized():
    cfg = make_config(levels=["org-main", "IND_SIDE"])
    assert cfg.levels == ["org_main", "ind_side"]


@pytest.mark.parametrize("change", [
    {"alpha": 0.2},
    {"seed": 1},
    {"bootstrap": BootstrapConfig(n=301)},
    {"bootstrap": BootstrapConfig(fix_size_to="org_side")},
    {"sbm": SbmConfig(n_sweeps=11)},
    {"timezone": "UTC"},
])
def test_hash_changes_with_analysis_fields(change):
    assert make_config(**change).config_hash() != make_config().config_hash()


def test_hash_ignores_locations_and_level_selection():
    a = make_config()
    b = PipelineConfig(paths=PathsConfig(["elsewhere/e.csv"], "r.csv", "k.txt", "o2"), levels=["org_main"],
                       modules={"ergm": False})
    assert a.config_hash() == b.config_hash()


def test_hash_ignores_kind_order():
    a = make_config()
    a.filter.kinds = ["retweet", "reply"]
    b = make_config()
    b.filter.kinds = ["reply", "retweet"]
    assert a.config_hash() == b.config_hash()


@pytest.mark.parametrize("bad", [
    {"alpha": 0.0},
    {"alpha": 1.5},
    {"levels": ["org_top"]},
    {"bootstrap": BootstrapConfig(n=0)},
    {"sbm": SbmConfig(n_sweeps=0)},
    {"modules": {"plotting": True}},
])
def test_invalid_values_rejected(bad):
    with pytest.raises(InputError):
        make_config(**bad)


def test_unknown_keys_rejected():
    with pytest.raises(InputError, match="unknown config keys"):
        PipelineConfig.from_dict({"alpah": 0.1})
    with pytest.raises(InputError, match="unknown keys in sbm"):
        PipelineConfig.from_dict({"sbm": {"sweeps": 3}})


def test_malformed_json_rejected():
    with pytest.raises(InputError, match="not valid JSON"):
        PipelineConfig.from_json("{alpha: ")


def test_load_resolves_relative_paths(tmp_path):
    sub = tmp_path / "cfg"
    sub.mkdir()
    (sub / "c.json").write_text(json.dumps({"paths": {"events": ["e.csv"], "roster": "r.csv",
                                                      "keywords": "k.txt", "out_dir": "o"}}))
    cfg = PipelineConfig.load(sub / "c.json")
    assert cfg.paths.events == [str(sub / "e.csv")]
    assert cfg.paths.roster == str(sub / "r.csv")
    assert cfg.paths.out_dir == str(sub / "o")


def test_missing_config_file(tmp_path):
    with pytest.raises(InputError, match="missing config file"):
        PipelineConfig.load(tmp_path / "nope.json")


def test_window_validated():
    cfg = make_config()
    cfg.filter.window = ["2020-01-01T00:00:00Z"]
    with pytest.raises(InputError):
        cfg.validate()
