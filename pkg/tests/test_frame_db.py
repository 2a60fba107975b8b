import json

import pytest

from srl_forge.core import RoleLabel
from srl_forge.frame_db import (
    DuplicateFramesetId,
    FrameDB,
    MalformedLexicon,
    build_db,
    lookup,
    merge_entries,
    read_adjunct_inventory,
    read_lexicon,
    role_set,
)

ACT = [
    {"lemma": "act", "explanation": "play a role; behave",
     "framesets": [{"id": "act.01", "roles": [{"label": "A0", "desc": "player"}, {"label": "A1", "desc": "role"}]}]},
    {"lemma": "act", "explanation": "do something",
     "framesets": [{"id": "act.02", "roles": [{"label": "A0", "desc": "actor"}]}]},
]


def _write(path, records):
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")
    return path


def test_merge_act_records(tmp_path):
    _write(tmp_path / "a.jsonl", ACT[1:])
    _write(tmp_path / "b.jsonl", ACT[:1])
    db = build_db(tmp_path)
    entry = db.lookup("act")
    assert [f.id for f in entry.framesets] == ["act.01", "act.02"]
    assert entry.explanation == "play a role; behave; do something"
    assert build_db(list(reversed(sorted(tmp_path.glob("*.jsonl"))))).lookup("act") == entry


def test_conflicting_duplicate_frameset(tmp_path):
    clash = dict(ACT[0], framesets=[{"id": "act.01", "roles": [{"label": "A2", "desc": "x"}]}])
    records = read_lexicon(_write(tmp_path / "x.jsonl", [ACT[0], clash]))
    with pytest.raises(DuplicateFramesetId):
        merge_entries(records)
    same = read_lexicon(_write(tmp_path / "y.jsonl", [ACT[0], ACT[0]]))
    assert len(merge_entries(same)["act"].framesets) == 1


@pytest.mark.parametrize("line,reason", [
    ("{not json", "invalid JSON"),
    ('{"framesets": []}', "missing field"),
    ('[1, 2]', "not a JSON object"),
    ('{"lemma": "x", "framesets": [{"id": "x.01", "roles": []}]}', "no core roles"),
])
def test_malformed_lexicon_reports_line(tmp_path, line, reason):
    path = tmp_path / "bad.jsonl"
    path.write_text(json.dumps(ACT[0]) + "\n" + line + "\n", encoding="utf-8")
    with pytest.raises(MalformedLexicon) as info:
        read_lexicon(path)
    assert info.value.line == 2
    assert reason in str(info.value)


def test_empty_lexicon_dir(tmp_path):
    with pytest.raises(MalformedLexicon):
        build_db(tmp_path)


def test_adjunct_inventory(tmp_path):
    path = tmp_path / "adj.txt"
    path.write_text("TMP: temporal\nLOC: location\n\n", encoding="utf-8")
    assert read_adjunct_inventory(path) == ((RoleLabel("TMP"), "temporal"), (RoleLabel("LOC"), "location"))
    path.write_text("TMP temporal\n", encoding="utf-8")
    with pytest.raises(MalformedLexicon):
        read_adjunct_inventory(path)


def test_bundled_db_lookup_and_roles(db):
    assert db.match("was").lemma == "be"
    assert db.match("bought").lemma == "buy"
    assert lookup(db, "goal") is None
    be = role_set(db, "be")
    assert [(l.rendered, d) for l, d in be.core] == [("A1", "topic"), ("A1", "comment"), ("A1", "thing that is")]
    generic = role_set(db, "unknown")
    assert [l.rendered for l, _ in generic.core] == ["A0", "A1", "A2", "A3", "A4", "A5"]
    assert len(be.adjunct) == 20


def test_db_json_round_trip(db, tmp_path):
    path = tmp_path / "db.json"
    db.save(path)
    again = FrameDB.load(path)
    assert again == db
    assert again.dumps() == path.read_text(encoding="utf-8")


def test_without_removes_lemmas(db):
    smaller = db.without("be", "buy")
    assert "be" not in smaller and "go" in smaller and "be" in db
