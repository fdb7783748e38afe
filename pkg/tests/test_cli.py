"""CLI surface: ingest, search, trake, dedup-report, exit codes."""
from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from madt.cli import main
from madt.demo import write_demo_inputs


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def cli_corpus(tmp_path_factory, runner):
    root = tmp_path_factory.mktemp("cli")
    kfe, jsonl = write_demo_inputs(root / "inputs")
    out = root / "corpus"
    result = runner.invoke(
        main,
        [
            "ingest",
            "--embeddings", str(kfe),
            "--metadata", str(jsonl),
            "--out", str(out),
            "--stub-seed", "7",
        ],
    )
    assert result.exit_code == 0, result.output
    return out


class TestIngestCommand:
    def test_reports_counts(self, cli_corpus, runner):
        # The fixture already ingested; spot-check the persisted report.
        result = runner.invoke(
            main, ["dedup-report", "--corpus", str(cli_corpus), "--format", "json"]
        )
        assert result.exit_code == 0
        report = json.loads(result.output)
        assert report["kept"] + report["dropped_phash"] + report["dropped_cosine"] == 17

    def test_missing_input_is_usage_error(self, runner):
        result = runner.invoke(main, ["ingest", "--embeddings", "/nope.kfe"])
        assert result.exit_code == 2

    def test_bad_kfe_is_corpus_error(self, runner, tmp_path):
        bad = tmp_path / "bad.kfe"
        bad.write_bytes(b"XXXX not a kfe")
        meta = tmp_path / "m.jsonl"
        meta.write_text("")
        result = runner.invoke(
            main,
            ["ingest", "--embeddings", str(bad), "--metadata", str(meta), "--out", str(tmp_path / "c")],
        )
        assert result.exit_code == 3


class TestSearchCommand:
    def test_json_output(self, cli_corpus, runner):
        result = runner.invoke(
            main,
            ["search", "--corpus", str(cli_corpus), "--text", "goal", "--k", "5", "--format", "json"],
        )
        assert result.exit_code == 0, result.output
        rows = json.loads(result.output)
        assert len(rows) == 5
        assert {"id", "score", "final"} <= set(rows[0])

    def test_filter_narrows(self, cli_corpus, runner):
        result = runner.invoke(
            main,
            [
                "search", "--corpus", str(cli_corpus), "--text", "bridge",
                "--video", "V0002", "--k", "10", "--format", "json",
            ],
        )
        rows = json.loads(result.output)
        assert rows and all(r["id"].startswith("V0002/") for r in rows)

    def test_table_output(self, cli_corpus, runner):
        result = runner.invoke(
            main, ["search", "--corpus", str(cli_corpus), "--text", "goal", "--k", "3"]
        )
        assert result.exit_code == 0
        assert "id" in result.output.splitlines()[0]

    def test_bad_corpus_dir_is_corpus_error(self, runner, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        result = runner.invoke(main, ["search", "--corpus", str(empty), "--text", "x"])
        assert result.exit_code == 3


class TestTrakeCommand:
    def test_structured_events(self, cli_corpus, runner):
        result = runner.invoke(
            main,
            [
                "trake", "--corpus", str(cli_corpus),
                "--context", "football match",
                "--event", "kickoff whistle",
                "--event", "player kicks the ball",
                "--event", "scores a goal",
                "--tau", "10", "--format", "json",
            ],
        )
        assert result.exit_code == 0, result.output
        rows = json.loads(result.output)
        assert rows[0]["start"] == "V0001/0010"
        assert rows[0]["path"].split() == ["V0001/0010", "V0001/0020", "V0001/0030"]

    def test_raw_query(self, cli_corpus, runner):
        result = runner.invoke(
            main,
            [
                "trake", "--corpus", str(cli_corpus),
                "--query", "football match: kickoff then goal",
                "--tau", "10", "--format", "json",
            ],
        )
        assert result.exit_code == 0, result.output
        assert json.loads(result.output)

    def test_single_event_degenerates(self, cli_corpus, runner):
        result = runner.invoke(
            main,
            ["trake", "--corpus", str(cli_corpus), "--event", "goal", "--format", "json"],
        )
        assert result.exit_code == 0
        rows = json.loads(result.output)
        assert rows and "score" in rows[0]

    def test_no_events_is_usage_error(self, cli_corpus, runner):
        result = runner.invoke(main, ["trake", "--corpus", str(cli_corpus)])
        assert result.exit_code == 2


class TestConfigPlumbing:
    def test_config_file_defaults_applied(self, cli_corpus, runner, tmp_path):
        cfg = tmp_path / "app.toml"
        cfg.write_text("tau_s = 10.0\n")
        result = runner.invoke(
            main,
            [
                "--config", str(cfg),
                "trake", "--corpus", str(cli_corpus),
                "--event", "kickoff whistle", "--event", "scores a goal",
                "--format", "json",
            ],
        )
        assert result.exit_code == 0, result.output

    def test_bad_config_rejected(self, runner, tmp_path):
        cfg = tmp_path / "app.toml"
        cfg.write_text("no_such_key = 1\n")
        result = runner.invoke(main, ["--config", str(cfg), "dedup-report", "--corpus", "."])
        assert result.exit_code == 3
