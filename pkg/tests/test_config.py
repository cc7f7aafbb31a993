import pytest

from nestex.utils.config import RunConfig, load_config, parse_config_text
from nestex.utils.errors import ConfigError


def test_defaults():
    c = RunConfig()
    assert (c.fnn_layers, c.dropout, c.lr, c.weight_decay, c.epochs) == (2, 0.4, 1e-3, 1e-5, 100)
    assert (c.beam_theta, c.beta_t, c.beta_e) == (20, 2, 2)
    assert c.use_prompt and not c.ablate_per and not c.entity_typed
    assert c.clip_norm == 0.0


def test_parse_key_values():
    c = parse_config_text("""
        # ablation: no prompts, no pivot head
        use_prompt = false
        ablate_per=yes
        lr=0.01   # faster
        epochs=7
    """)
    assert c.use_prompt is False and c.ablate_per is True
    assert c.lr == 0.01 and c.epochs == 7


@pytest.mark.parametrize("text", ["epoch=3", "epochs=three", "use_prompt=maybe", "just words", "dropout=1.5"])
def test_bad_config(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_text_form_reparses():
    c = RunConfig(lr=0.005, entity_typed=True, seed=99)
    assert parse_config_text(c.to_text()) == c


def test_load_config_layers(tmp_path, monkeypatch):
    path = tmp_path / "run.cfg"
    path.write_text("epochs=5\nworkers=2\n", encoding="utf-8")
    monkeypatch.setenv("NESTEX_WORKERS", "3")
    c = load_config(str(path), {"epochs": "6"})
    assert c.epochs == 6 and c.workers == 3


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "absent.cfg"))
