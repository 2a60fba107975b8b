import shutil
from importlib import resources

import pytest

from srl_forge.core import Sentence
from srl_forge.frame_db import role_set
from srl_forge.prompting import (
    Conversation,
    Speaker,
    TemplateSet,
    TemplateSlotMissing,
    Turn,
    build_argument_correction,
    build_argument_prompt,
    build_predicate_correction,
    build_predicate_prompt,
    fill,
    frames_block,
)
from srl_forge.retrieval_agent import candidates
from srl_forge.tagging import render_predicates

SUGAR = Sentence.from_words("t6", "That country recently bought 200,000 tons of sugar .".split())


def test_fill_drops_lines_with_empty_slots():
    assert fill("a {X}\nb {Y}\nc", X="1", Y="") == "a 1\nc"
    with pytest.raises(TemplateSlotMissing):
        fill("{X}")


def test_conversation_alternation():
    conv = Conversation((Turn(Speaker.SYSTEM, "s"), Turn(Speaker.USER, "u")))
    conv = conv.append(Speaker.ASSISTANT, "a")
    assert [m["role"] for m in conv.messages()] == ["system", "user", "assistant"]
    assert Conversation.from_messages(conv.messages()) == conv
    with pytest.raises(ValueError):
        conv.append(Speaker.ASSISTANT, "again")
    with pytest.raises(ValueError):
        Conversation((Turn(Speaker.USER, "u"),))
    with pytest.raises(ValueError):
        Turn(Speaker.USER, "")


def test_template_sets_load(tpl, zh_tpl):
    assert tpl.stop_phrase == "Stop checking."
    assert zh_tpl.stop_phrase == "停止检查。"
    assert tpl.fragments["role_separator"] == ", "
    assert tpl.result_label("argument") == "Argument labeling result:"


def test_template_missing_slot(tmp_path, tpl):
    root = tmp_path / "en"
    with resources.as_file(resources.files("srl_forge") / "templates" / "en") as path:
        shutil.copytree(path, root)
    (root / "argument_task.txt").write_text("Text: {TEXT_TAGGED}\n{FRAMES}\n", encoding="utf-8")
    with pytest.raises(TemplateSlotMissing):
        TemplateSet.load(root)


def test_predicate_prompt_without_candidates(db, tpl):
    s = Sentence.from_words("x", ["Nothing", "here"])
    r = candidates(s, db)
    conv = build_predicate_prompt(s, r.candidates, r.hint, tpl)
    assert "functions as a predicate" not in conv.last.text
    assert 'Possible predicate results in the text are: "Nothing here"' in conv.last.text


def test_argument_prompt_frames(db, tpl):
    r = candidates(SUGAR, db)
    d1 = build_predicate_prompt(SUGAR, r.candidates, r.hint, tpl)
    prior = d1.append(Speaker.ASSISTANT, render_predicates(SUGAR, {3}).text)
    entry = db.lookup("buy")
    conv = build_argument_prompt(prior, render_predicates(SUGAR, {3}), db.role_set("buy"), entry.framesets,
                                 tpl, lemma="buy", pos_hint="verb")
    text = conv.last.text
    assert 'For the predicate "bought" in this text, it has the following frames:' in text
    assert "For buy as a verb:" in text
    assert "Frame 1: The core arguments it has are: A0: buyer, " in text
    assert "TMP: temporal" in text
    assert "Text: That country recently @@bought## 200,000 tons of sugar ." in text
    with pytest.raises(ValueError):
        build_argument_prompt(d1, render_predicates(SUGAR, {3}), db.role_set("buy"), (), tpl)
    with pytest.raises(ValueError):
        build_argument_prompt(prior, render_predicates(SUGAR, {1, 3}), db.role_set("buy"), (), tpl)


def test_frames_block_generic(db, tpl):
    text = frames_block("glorped", role_set(db, "glorp"), (), tpl)
    assert text.startswith('For the predicate "glorped" in this text, no frames are available.')
    assert "A5: other" in text


def test_correction_prompts_carry_result_and_issues(db, tpl):
    r = candidates(SUGAR, db)
    d1 = build_predicate_prompt(SUGAR, r.candidates, r.hint, tpl)
    c1 = build_predicate_correction(d1, "raw", tpl)
    assert c1.turns[-2].text == "raw"
    assert "Issues detected in the previous round" not in c1.last.text
    c2 = build_predicate_correction(c1, "Issues detected: x Predicate identification result: y", tpl,
                                    result="y", issues="x")
    assert "For the generated predicate identification result: y," in c2.last.text
    assert c2.last.text.endswith("Issues detected in the previous round: x")
    a = build_argument_correction(d1, "out", tpl)
    assert "Stop checking." in a.last.text


def test_chinese_prompt(zh_db, zh_tpl):
    s = Sentence.from_words("z", ["集团", "在", "上海", "追加", "投资"], "zh")
    r = candidates(s, zh_db)
    conv = build_predicate_prompt(s, r.candidates, r.hint, zh_tpl)
    assert "集团在上海@@追加##@@投资##" in conv.last.text
