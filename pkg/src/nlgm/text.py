"""Tokenization and token-sequence primitives shared by every metric.

A token sequence is a plain ``list[str]``; no wrapper type is needed.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import IO, Iterable, Sequence

PUNCTUATION = ".,!?;:'\"()"
_PUNCT_RE = re.compile("([" + re.escape(PUNCTUATION) + "])")

TokenSeq = list


def tokenize(raw: str, lowercase: bool = True) -> list[str]:
    """Split a raw sentence into tokens.

    Punctuation marks in ``.,!?;:'"()`` become standalone tokens, everything
    else is split on whitespace.

    >>> tokenize("I am looking for a Chinese restaurant.")
    ['i', 'am', 'looking', 'for', 'a', 'chinese', 'restaurant', '.']
    """
    if lowercase:
        raw = raw.lower()
    return _PUNCT_RE.sub(r" \1 ", raw).split()


def ngrams(seq: Sequence[str], n: int) -> Counter:
    """Multiset of contiguous n-grams (as tuples) of ``seq``."""
    if n < 1:
        raise ValueError(f"n-gram order must be >= 1, got {n}")
    return Counter(zip(*(seq[i:] for i in range(n))))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Length of a longest common subsequence, O(|a|*|b|) time, O(min) memory."""
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            if x == y:
                cur.append(prev[j] + 1)
            else:
                cur.append(max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


# ---------------------------------------------------------------------------
# Porter stemmer (1980 rule set).
#
# Rules, applied in order; within a step the longest matching suffix is
# selected and, if its condition fails, the step does nothing.
#
#   m      = measure of the stem, the k in [C](VC){k}[V]
#   *v*    = stem contains a vowel
#   *d     = stem ends in a double consonant
#   *o     = stem ends consonant-vowel-consonant, last not w, x or y
#   'y' is a vowel when it follows a consonant.
#
#   1a  sses->ss  ies->i  ss->ss  s->
#   1b  (m>0) eed->ee   (*v*) ed->   (*v*) ing->
#       after ed/ing: at->ate bl->ble iz->ize; (*d, not l/s/z) drop last;
#       (m=1 and *o) add e
#   1c  (*v*) y->i
#   2   (m>0) ational->ate tional->tion enci->ence anci->ance izer->ize
#       abli->able alli->al entli->ent eli->e ousli->ous ization->ize
#       ation->ate ator->ate alism->al iveness->ive fulness->ful
#       ousness->ous aliti->al iviti->ive biliti->ble
#   3   (m>0) icate->ic ative-> alize->al iciti->ic ical->ic ful-> ness->
#   4   (m>1) al ance ence er ic able ible ant ement ment ent
#       ion (stem ends s or t) ou ism ate iti ous ive ize  -> removed
#   5a  (m>1) e->   (m=1, not *o) e->
#   5b  (m>1, *d, ends l) drop last
#
# Words of length <= 2 are returned unchanged. The single pass above is not
# idempotent on every input, so ``stem`` iterates it to a fixed point.
# ---------------------------------------------------------------------------

_STEP2 = {
    "ational": "ate", "tional": "tion", "enci": "ence", "anci": "ance",
    "izer": "ize", "abli": "able", "alli": "al", "entli": "ent", "eli": "e",
    "ousli": "ous", "ization": "ize", "ation": "ate", "ator": "ate",
    "alism": "al", "iveness": "ive", "fulness": "ful", "ousness": "ous",
    "aliti": "al", "iviti": "ive", "biliti": "ble",
}
_STEP3 = {
    "icate": "ic", "ative": "", "alize": "al", "iciti": "ic", "ical": "ic",
    "ful": "", "ness": "",
}
_STEP4 = (
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment",
    "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
)


def _is_consonant(word: str, i: int) -> bool:
    ch = word[i].lower()
    if ch in "aeiou":
        return False
    if ch == "y":
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def _measure(stem: str) -> int:
    m = 0
    prev_vowel = False
    for i in range(len(stem)):
        vowel = not _is_consonant(stem, i)
        if prev_vowel and not vowel:
            m += 1
        prev_vowel = vowel
    return m


def _has_vowel(stem: str) -> bool:
    return any(not _is_consonant(stem, i) for i in range(len(stem)))


def _double_consonant(stem: str) -> bool:
    return (len(stem) >= 2 and stem[-1] == stem[-2]
            and _is_consonant(stem, len(stem) - 1))


def _cvc(stem: str) -> bool:
    if len(stem) < 3:
        return False
    k = len(stem) - 1
    return (_is_consonant(stem, k) and not _is_consonant(stem, k - 1)
            and _is_consonant(stem, k - 2) and stem[k].lower() not in "wxy")


def _longest_suffix(word: str, suffixes: Iterable[str]) -> str | None:
    best = None
    for suf in suffixes:
        if word.endswith(suf) and (best is None or len(suf) > len(best)):
            best = suf
    return best


def _step1(w: str) -> str:
    if w.endswith("sses"):
        w = w[:-2]
    elif w.endswith("ies"):
        w = w[:-2]
    elif w.endswith("ss"):
        pass
    elif w.endswith("s"):
        w = w[:-1]

    cleanup = False
    if w.endswith("eed"):
        if _measure(w[:-3]) > 0:
            w = w[:-1]
    elif w.endswith("ed") and _has_vowel(w[:-2]):
        w, cleanup = w[:-2], True
    elif w.endswith("ing") and _has_vowel(w[:-3]):
        w, cleanup = w[:-3], True
    if cleanup:
        if w.endswith(("at", "bl", "iz")):
            w += "e"
        elif _double_consonant(w) and w[-1] not in "lsz":
            w = w[:-1]
        elif _measure(w) == 1 and _cvc(w):
            w += "e"

    if w.endswith("y") and _has_vowel(w[:-1]):
        w = w[:-1] + "i"
    return w


def _map_step(w: str, table: dict[str, str], min_m: int) -> str:
    suf = _longest_suffix(w, table)
    if suf is not None and _measure(w[:-len(suf)]) > min_m:
        return w[:-len(suf)] + table[suf]
    return w


def _step4(w: str) -> str:
    suf = _longest_suffix(w, _STEP4)
    if suf is None:
        return w
    stem = w[:-len(suf)]
    if _measure(stem) <= 1:
        return w
    if suf == "ion" and not stem.endswith(("s", "t")):
        return w
    return stem


def _step5(w: str) -> str:
    if w.endswith("e"):
        stem = w[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _cvc(stem)):
            w = stem
    if w.endswith("ll") and _measure(w) > 1:
        w = w[:-1]
    return w


def porter_pass(word: str) -> str:
    """One pass of the Porter rules (not necessarily idempotent)."""
    if len(word) <= 2:
        return word
    w = _step1(word)
    w = _map_step(w, _STEP2, 0)
    w = _map_step(w, _STEP3, 0)
    w = _step4(w)
    return _step5(w)


@lru_cache(maxsize=65536)
def stem(token: str) -> str:
    """Porter stem of ``token``, iterated until it no longer changes.

    >>> stem("restaurants")
    'restaur'
    """
    cur = token
    # each pass shortens the word or only rewrites a final y, so this ends fast
    for _ in range(len(token) + 1):
        nxt = porter_pass(cur)
        if nxt == cur:
            return cur
        cur = nxt
    return cur


@dataclass(frozen=True)
class SynonymLexicon:
    """Synonym groups; two words match when they share a group."""

    groups: tuple[frozenset[str], ...] = ()
    index: dict[str, frozenset[int]] = field(default_factory=dict, compare=False)

    @classmethod
    def from_groups(cls, groups: Iterable[Iterable[str]]) -> SynonymLexicon:
        frozen = tuple(frozenset(w.lower() for w in g) for g in groups)
        index: dict[str, set[int]] = {}
        for gid, group in enumerate(frozen):
            for word in group:
                index.setdefault(word, set()).add(gid)
        return cls(frozen, {w: frozenset(ids) for w, ids in index.items()})

    @classmethod
    def load(cls, source: IO[bytes]) -> SynonymLexicon:
        """Read a lexicon: UTF-8, one whitespace-separated group per line."""
        text = source.read().decode("utf-8")
        return cls.from_groups(line.split() for line in text.splitlines() if line.strip())

    def groups_of(self, word: str) -> frozenset[int]:
        return self.index.get(word.lower(), frozenset())


def synonym_match(a: str, b: str, lex: SynonymLexicon | None) -> bool:
    if a == b:
        return True
    if lex is None:
        return False
    return bool(lex.groups_of(a) & lex.groups_of(b))
