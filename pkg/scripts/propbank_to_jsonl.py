"""Convert PropBank frame XML files into srl-forge lexicon JSONL.

    python3 scripts/propbank_to_jsonl.py frames/*.xml > frames_en/propbank.jsonl

Numbered roles become A0..A5, "A" becomes ARGA; modifier roles ("M") are
skipped since adjuncts come from the inventory file.
"""

import argparse
import json
import sys
import xml.etree.ElementTree as ET


def role_label(n: str):
    if n.isdigit():
        return f"A{n}"
    if n.upper() == "A":
        return "ARGA"
    return None


def convert(path):
    root = ET.parse(path).getroot()
    for pred in root.iter("predicate"):
        lemma = pred.get("lemma", "").replace("_", " ")
        framesets, names = [], []
        for rs in pred.iter("roleset"):
            roles = []
            for role in rs.iter("role"):
                label = role_label(role.get("n", ""))
                if label:
                    roles.append({"label": label, "desc": (role.get("descr") or "").strip()})
            framesets.append({"id": rs.get("id"), "roles": roles})
            if rs.get("name"):
                names.append(rs.get("name").strip())
        if lemma and framesets:
            yield {"lemma": lemma, "pos_hint": "verb", "explanation": "; ".join(names) or lemma,
                   "framesets": framesets}


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("xml", nargs="+")
    args = p.parse_args(argv)
    for path in args.xml:
        for rec in convert(path):
            sys.stdout.write(json.dumps(rec, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
