"""Deterministic rule-table lemmatizer.

English candidates come from an irregular-form table followed by suffix
rules (-s/-es, -ed/-d, -ing) with consonant undoubling and silent-e
restoration.  Chinese words are their own base form.
"""

from __future__ import annotations

from functools import lru_cache

from .core import Language

# base: inflected forms
_IRREGULAR_VERBS = """
be am are is was were been being 's 're 'm
have has had having 've 'd
do does did done doing
go goes went gone going
say says said
make makes made
get gets got gotten
know knows knew known
take takes took taken
see sees saw seen
come comes came
think thinks thought
give gives gave given
find finds found
tell tells told
become becomes became
leave leaves left
feel feels felt
bring brings brought
begin begins began begun
keep keeps kept
hold holds held
write writes wrote written
stand stands stood
hear hears heard
let lets
mean means meant
set sets
meet meets met
run runs ran running
pay pays paid
sit sits sat sitting
speak speaks spoke spoken
lie lies lay lain lying
lead leads led
read reads
grow grows grew grown
lose loses lost
fall falls fell fallen
send sends sent
build builds built
understand understands understood
draw draws drew drawn
break breaks broke broken
spend spends spent
cut cuts cutting
rise rises rose risen
drive drives drove driven
buy buys bought
wear wears wore worn
choose chooses chose chosen
seek seeks sought
throw throws threw thrown
catch catches caught
deal deals dealt
win wins won winning
forget forgets forgot forgotten
sell sells sold
fight fights fought
teach teaches taught
eat eats ate eaten
sing sings sang sung
fly flies flew flown
hit hits hitting
shake shakes shook shaken
ride rides rode ridden
hide hides hid hidden
steal steals stole stolen
swim swims swam swum
bear bears bore borne
beat beats beaten
bind binds bound
bite bites bit bitten
blow blows blew blown
feed feeds fed
freeze freezes froze frozen
hang hangs hung
lay lays laid
light lights lit
prove proves proven
put puts putting
quit quits
shoot shoots shot
shut shuts
sink sinks sank sunk
slide slides slid
spin spins spun
split splits
spread spreads
stick sticks stuck
strike strikes struck
swear swears swore sworn
sweep sweeps swept
tear tears tore torn
wake wakes woke woken
withdraw withdraws withdrew withdrawn
undergo undergoes underwent undergone
overcome overcomes overcame
forecast forecasts
upset upsets
arise arises arose arisen
bet bets
bid bids
cast casts
cost costs
hurt hurts
can could
will would
shall should
may might
"""

_IRREGULAR_NOUNS = """
man men
woman women
child children
person people
foot feet
tooth teeth
mouse mice
goose geese
analysis analyses
crisis crises
datum data
criterion criteria
phenomenon phenomena
"""


def _build_table(*blocks: str) -> dict[str, list[str]]:
    table: dict[str, list[str]] = {}
    for block in blocks:
        for line in block.strip().splitlines():
            base, *forms = line.split()
            for form in forms:
                bases = table.setdefault(form, [])
                if base not in bases:
                    bases.append(base)
    return table


IRREGULAR = _build_table(_IRREGULAR_VERBS, _IRREGULAR_NOUNS)

_VOWELS = set("aeiou")
# doubled finals that usually belong to the base (called, passed, buzzed)
_KEEP_DOUBLE = set("lsfz")


def _is_consonant(ch: str) -> bool:
    return ch.isalpha() and ch not in _VOWELS


def _needs_silent_e(stem: str) -> bool:
    """Guess whether a bare stem lost a final e: hop -> hope, danc -> dance."""
    last = stem[-1]
    if last in "cv" or stem.endswith(("dg", "rg", "lg")):
        return True
    if last in "sz" and stem[-2] in _VOWELS:
        return True
    if len(stem) == 2:
        return stem[0] in _VOWELS
    return stem[-2] in _VOWELS and _is_consonant(stem[-3])


def _restore_stem(stem: str) -> list[str]:
    """Candidates for a stem left after stripping -ed or -ing."""
    if len(stem) < 2:
        return []
    last = stem[-1]
    if len(stem) >= 3 and last == stem[-2] and _is_consonant(last):
        undoubled = stem[:-1]
        return [stem, undoubled] if last in _KEEP_DOUBLE else [undoubled, stem]
    if not _is_consonant(last) or last in "wxy":
        return [stem]
    with_e = stem + "e"
    return [with_e, stem] if _needs_silent_e(stem) else [stem, with_e]


def _suffix_candidates(word: str) -> list[str]:
    n = len(word)
    if word.endswith("ies") and n > 4:
        return [word[:-3] + "y"]
    if word.endswith("ied"):
        return [word[:-3] + "y"] if n > 4 else [word[:-1]]
    if word.endswith("es") and n > 3:
        stem = word[:-2]
        if stem.endswith(("ss", "x", "ch", "sh", "zz")):
            return [stem]
        if stem.endswith(("s", "z")):
            return [word[:-1], stem]
        return [word[:-1]]
    if word.endswith("s") and n > 3 and not word.endswith(("ss", "us", "is")):
        return [word[:-1]]
    if word.endswith("eed") and n > 4:
        return [word[:-1]]
    if word.endswith("ed") and n > 3:
        return _restore_stem(word[:-2])
    if word.endswith("ing") and n > 4:
        return _restore_stem(word[:-3])
    return []


@lru_cache(maxsize=65536)
def _lemmatize_english(surface: str) -> tuple[str, ...]:
    word = surface.lower()
    out: list[str] = []
    for base in IRREGULAR.get(word, ()):
        out.append(base)
    if not out and word.isalpha():
        out.extend(_suffix_candidates(word))
    out.append(word)
    seen: list[str] = []
    for cand in out:
        if cand and cand not in seen:
            seen.append(cand)
    return tuple(seen)


def lemmatize(surface: str, language: "Language | str" = Language.ENGLISH) -> list[str]:
    """Ordered candidate base forms; the (lowercased) surface is always last."""
    if not surface:
        raise ValueError("cannot lemmatize an empty string")
    language = Language.parse(language)
    if language is Language.CHINESE:
        return [surface]
    return list(_lemmatize_english(surface))
