import json

import pytest

from sophie.config import (
    DEFAULT_IDEAL_TRAJECTORY,
    ENV_VAR,
    Config,
    ConfigError,
    load_config,
    resolve_config,
)
from sophie.content import ContentError, collect_content_errors, load_content


def test_defaults_are_valid():
    cfg = load_config(None)
    assert cfg.port == 8000
    assert cfg.bin_count == len(DEFAULT_IDEAL_TRAJECTORY)
    assert cfg.lecture_ms == 30000 and cfg.lecture_words == 75


def test_load_config_file(tmp_path):
    path = tmp_path / "sophie.conf"
    path.write_text(
        "# service\n"
        "port = 9001\n"
        "data_dir = var/data\n"
        "lexicon_hedges = /abs/hedges.txt\n"
        "session_idle_hours = 1.5\n"
        "ideal_trajectory = 0.1, 0.2, 0.3, 0.4\n"
        "bin_count = 4\n"
    )
    cfg = load_config(path)
    assert cfg.port == 9001
    assert cfg.data_dir == tmp_path / "var/data"
    assert str(cfg.lexicon_hedges) == "/abs/hedges.txt"
    assert cfg.session_idle_hours == 1.5
    assert cfg.ideal_trajectory == (0.1, 0.2, 0.3, 0.4)


def test_load_config_errors(tmp_path):
    cases = [
        ("port = much\n", "bad value"),
        ("mystery = 1\n", "unknown key"),
        ("port 8000\n", "expected key = value"),
        ("bin_count = 1\n", "bin_count"),
        ("ideal_trajectory = 0.5, 2.0\nbin_count = 2\n", "outside"),
        ("ideal_trajectory = 0.1\n", "bins"),
        ("lecture_ms = 0\n", "positive"),
        ("session_idle_hours = -2\n", "positive"),
    ]
    for body, fragment in cases:
        path = tmp_path / "bad.conf"
        path.write_text(body)
        with pytest.raises(ConfigError) as excinfo:
            load_config(path)
        assert fragment in str(excinfo.value), body


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.conf")


def test_resolve_config_precedence(tmp_path, monkeypatch):
    env_conf = tmp_path / "env.conf"
    env_conf.write_text("port = 7001\n")
    flag_conf = tmp_path / "flag.conf"
    flag_conf.write_text("port = 7002\n")

    monkeypatch.delenv(ENV_VAR, raising=False)
    assert resolve_config(None).port == 8000
    monkeypatch.setenv(ENV_VAR, str(env_conf))
    assert resolve_config(None).port == 7001
    assert resolve_config(str(flag_conf)).port == 7002


# ---------------------------------------------------------------------------
# Content loading


def test_bundled_content_loads(cfg, content):
    assert set(content.schemas) >= {"lung-cancer-prognosis"}
    assert "bad-news" in content.trees
    for tree_id, tree in content.trees.items():
        assert tree.id == tree_id


def test_collect_content_errors_reports_file_and_message(tmp_path):
    (tmp_path / "good.rules").write_text("tree: good\n* => gist: ok\n")
    (tmp_path / "broken.rules").write_text("tree: broken\n* !ghost * => gist: x\n")
    (tmp_path / "broken.json").write_text("{not json")
    content, errors = collect_content_errors(tmp_path)
    assert content is None
    files = {file for file, _ in errors}
    assert any(f.endswith("broken.rules") for f in files)
    assert any(f.endswith("broken.json") for f in files)
    assert all("good.rules" not in f for f in files)


def test_collect_content_errors_tree_id_must_match_filename(tmp_path):
    (tmp_path / "alpha.rules").write_text("tree: beta\n* => gist: ok\n")
    _, errors = collect_content_errors(tmp_path)
    assert errors and "alpha" in errors[0][1]


def test_collect_content_errors_duplicate_schema_id(tmp_path):
    (tmp_path / "ack.rules").write_text("tree: ack\n* => gist: the user responded\n")
    schema = {
        "id": "twin",
        "description": "d",
        "default_reaction": "r",
        "episodes": [
            {"say": {"text": "hi", "gist": "g"}},
            {
                "expect_user": {
                    "interp_tree": "ack",
                    "reactions": [{"gist_pattern": "*", "action": "continue"}],
                }
            },
        ],
    }
    (tmp_path / "a.json").write_text(json.dumps(schema))
    (tmp_path / "b.json").write_text(json.dumps(schema))
    _, errors = collect_content_errors(tmp_path)
    assert errors and "twin" in errors[0][1]


def test_collect_content_errors_requires_schemas(tmp_path):
    (tmp_path / "ack.rules").write_text("tree: ack\n* => gist: ok\n")
    _, errors = collect_content_errors(tmp_path)
    assert errors and "no schema files" in errors[0][1]


def test_collect_content_errors_missing_dir(tmp_path):
    content, errors = collect_content_errors(tmp_path / "nowhere")
    assert content is None
    assert errors == [(str(tmp_path / "nowhere"), "not a directory")]


def test_load_content_raises_on_first_error(tmp_path):
    (tmp_path / "bad.rules").write_text("no header\n")
    with pytest.raises(ContentError, match="bad.rules"):
        load_content(tmp_path)
