import dataclasses

import pytest

from multinorm.config import RunConfig, load_config_file, parse_config_text, resolve
from multinorm.errors import ConfigurationError

DEFAULTS = {
    "task": "normalization", "variant": "plain", "char_emb": 100, "pos_emb": 50, "hidden": 200,
    "context_hidden": 200, "ensemble": 5, "max_epochs": None, "patience": 10, "alpha": 0.2, "beam": 3,
    "lm_order": 3, "lm_smoothing": "witten_bell", "lambda_lm": 0.0, "learning_rate": 0.1, "clip_norm": 5.0,
    "seed": 0, "precision": "float64", "case_insensitive": False, "max_context": None, "data": None,
    "out": None,
}


def test_defaults_table():
    assert dataclasses.asdict(RunConfig()) == DEFAULTS


@pytest.mark.parametrize("task,epochs", [("normalization", 40), ("lemmatization", 30), ("segmentation", 30)])
def test_epoch_default_follows_task(task, epochs):
    assert RunConfig(task=task).epochs == epochs
    assert RunConfig(task=task, max_epochs=7).epochs == 7


def test_derived_configs():
    cfg = RunConfig(task="segmentation", variant="context", seed=3, ensemble=2, hidden=8)
    assert cfg.member_seeds() == [3, 4]
    assert cfg.model_config(4).hidden == 8 and cfg.model_config(4).seed == 4
    tc = cfg.train_config()
    assert tc.boundary == "|" and tc.max_epochs == 30 and tc.patience == 10


def test_file_then_flags_precedence():
    text = "# comment\nhidden = 64\nbeam = 5\nlambda-lm = 0.4\ncase_insensitive = yes\nmax_context =\n"
    values = parse_config_text(text)
    assert values == {"hidden": 64, "beam": 5, "lambda_lm": 0.4, "case_insensitive": True, "max_context": None}
    cfg = resolve(values, {"beam": 2, "seed": None})
    assert (cfg.hidden, cfg.beam, cfg.lambda_lm, cfg.seed) == (64, 2, 0.4, 0)


def test_round_trip_through_text(tmp_path):
    cfg = RunConfig(task="lemmatization", variant="context_gold_pos", hidden=16, lambda_lm=0.25, data="d")
    path = tmp_path / "run.conf"
    path.write_text(cfg.to_text())
    assert resolve(load_config_file(path)) == cfg


@pytest.mark.parametrize("text", ["hidden 3", "colour = red", "hidden = many", "case_insensitive = maybe"])
def test_bad_files(text):
    with pytest.raises(ConfigurationError):
        parse_config_text(text)


@pytest.mark.parametrize("kw", [dict(task="tagging"), dict(variant="fancy"), dict(beam=0), dict(ensemble=0)])
def test_invalid_values(kw):
    with pytest.raises(ConfigurationError):
        RunConfig(**kw)
