import json
from importlib import resources

import pytest

from srl_forge.cli import run
from srl_forge.core import GoldSentence, PredicateArgumentStructure, PredicateInstance
from srl_forge.corpus import write_gold_jsonl
from srl_forge.synthetic import corruption_fixture, gold_corpus, hit_rate_fixture


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    with resources.as_file(resources.files("srl_forge") / "data") as data:
        assert run(["-q", "build-db", "--frames", str(data / "frames_en"), "--adjuncts",
                    str(data / "adjuncts_en.txt"), "--out", str(root / "db.json")]) == 0
    write_gold_jsonl(gold_corpus(20, seed=6), root / "gold.jsonl")
    write_gold_jsonl(corruption_fixture(20), root / "corrupt.jsonl")
    return root


def _score(capsys, gold, pred, *extra):
    capsys.readouterr()
    assert run(["-q", "score", "--gold", str(gold), "--pred", str(pred), "--json", *extra]) == 0
    return json.loads(capsys.readouterr().out)


def test_gold_annotate_then_score(workspace, capsys):
    out = workspace / "pred.jsonl"
    for flags in ([], ["--predicates-given"], ["--workers", "3", "--trace"]):
        assert run(["-q", "annotate", "--db", str(workspace / "db.json"), "--corpus", str(workspace / "gold.jsonl"),
                    "--backend", "gold", "--out", str(out), *flags]) == 0
        assert _score(capsys, workspace / "gold.jsonl", out)["f1"] == 100.0
    assert _score(capsys, workspace / "gold.jsonl", out, "--predicates")["f1"] == 100.0
    capsys.readouterr()
    assert run(["-q", "score", "--gold", str(workspace / "gold.jsonl"), "--pred", str(out), "--per-role"]) == 0
    assert "overall" in capsys.readouterr().out


def test_corrupt_iterations(workspace, capsys):
    f1 = {}
    for n in (0, 1):
        out = workspace / f"c{n}.jsonl"
        assert run(["-q", "annotate", "--db", str(workspace / "db.json"), "--corpus", str(workspace / "corrupt.jsonl"),
                    "--backend", "corrupt", "--seed", "4", "--iterations", str(n), "--out", str(out)]) == 0
        f1[n] = _score(capsys, workspace / "corrupt.jsonl", out)["f1"]
    assert f1[0] < f1[1] == 100.0


def test_annotate_is_reproducible(workspace):
    outs = []
    for i in range(2):
        out = workspace / f"r{i}.jsonl"
        run(["-q", "annotate", "--db", str(workspace / "db.json"), "--corpus", str(workspace / "corrupt.jsonl"),
             "--backend", "corrupt", "--seed", "2", "--iterations", "2", "--workers", "4", "--out", str(out)])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_hit_rate_cpb_shaped_fixture(workspace, capsys):
    corpus = [GoldSentence(s, tuple(PredicateArgumentStructure(PredicateInstance.at(s, p)) for p in preds))
              for s, preds in hit_rate_fixture(3513, 0, seed=2)]
    path = workspace / "cpb.jsonl"
    write_gold_jsonl(corpus, path)
    capsys.readouterr()
    assert run(["-q", "hit-rate", "--db", str(workspace / "db.json"), "--corpus", str(path)]) == 0
    assert capsys.readouterr().out.strip() == "3513 0 100.00"


def test_export_and_subsample(workspace, capsys):
    a, b = workspace / "t1.jsonl", workspace / "t2.jsonl"
    for out in (a, b):
        assert run(["-q", "export-train", "--db", str(workspace / "db.json"), "--corpus", str(workspace / "gold.jsonl"),
                    "--iterations", "2", "--seed", "1", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    capsys.readouterr()
    assert run(["-q", "subsample", "--corpus", str(workspace / "gold.jsonl"), "--n", "5", "--seed", "3"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 5 and all(json.loads(x)["id"].startswith("syn-") for x in lines)


def test_exit_codes(workspace, tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        run(["annotate", "--bogus"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        run([])
    assert info.value.code == 1
    assert run(["-q", "subsample", "--corpus", str(workspace / "gold.jsonl"), "--n", "-1", "--seed", "0"]) == 1
    assert run(["-q", "hit-rate", "--db", str(workspace / "db.json"), "--corpus", str(tmp_path / "missing.jsonl")]) == 2
    broken = tmp_path / "broken.jsonl"
    broken.write_text("{not json\n", encoding="utf-8")
    assert run(["-q", "score", "--gold", str(broken), "--pred", str(broken)]) == 2
    assert run(["-q", "annotate", "--db", str(workspace / "db.json"), "--corpus", str(workspace / "gold.jsonl"),
                "--backend", "http", "--out", str(tmp_path / "x.jsonl")]) == 1
    config = tmp_path / "srl.ini"
    config.write_text("[backend]\nendpoint = http://127.0.0.1:9/v1/chat/completions\nmodel = m\n"
                      "max_retries = 0\ntimeout = 2\n", encoding="utf-8")
    assert run(["-q", "--config", str(config), "annotate", "--db", str(workspace / "db.json"), "--corpus",
                str(workspace / "gold.jsonl"), "--backend", "http", "--out", str(tmp_path / "x.jsonl")]) == 3
    assert "backend failure" in capsys.readouterr().err


def test_env_overrides_config(tmp_path, monkeypatch):
    from srl_forge.cli import read_config

    config = tmp_path / "c.ini"
    config.write_text("[backend]\nendpoint = http://file\nmodel = a\n[pipeline]\niterations = 2\n", encoding="utf-8")
    monkeypatch.setenv("SRL_FORGE_ENDPOINT", "http://env")
    settings = read_config(str(config))
    assert settings == {"endpoint": "http://env", "model": "a", "iterations": "2"}
