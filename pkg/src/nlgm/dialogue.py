"""Dialogue-act utilities: DA vectors, (de)lexicalization, slot error rate and
the random retrieval baseline.

Placeholders are the upper-cased slot type (``food`` -> ``FOOD``); act-slot
keys are ``ACT-SLOTTYPE`` (``INFORM-FOOD``), or just ``ACT`` for slotless acts.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Corpus, DataError, DialogueAct
from .text import tokenize

log = logging.getLogger(__name__)

SPECIAL_VALUES = frozenset({"yes", "no", "dontcare"})


def _canon(s: str) -> str:
    return "_".join(s.strip().upper().split())


def placeholder(slot_type: str) -> str:
    return _canon(slot_type)


def fused_key(da: DialogueAct) -> str:
    if da.slot_type is None:
        return _canon(da.act)
    return f"{_canon(da.act)}-{_canon(da.slot_type)}"


def is_special(value: str) -> bool:
    return "".join(ch for ch in value.lower() if ch.isalnum()) in SPECIAL_VALUES


def _valued_slots(acts: Iterable[DialogueAct]) -> list[DialogueAct]:
    return [da for da in acts if da.slot_type is not None and da.slot_value is not None
            and not is_special(da.slot_value)]


def signature(acts: Iterable[DialogueAct]) -> frozenset[str]:
    """Set of fused act-slot keys, slot values ignored."""
    return frozenset(fused_key(da) for da in acts)


# -- DA vectors -----------------------------------------------------------------

def build_da_vocabulary(corpus: Corpus) -> list[str]:
    keys: set[str] = set()
    annotated = False
    for inst in corpus:
        if inst.acts is not None:
            annotated = True
            keys |= signature(inst.acts)
    if not annotated:
        raise DataError("corpus carries no dialogue-act annotations")
    return sorted(keys)


def encode_da_vector(acts: Iterable[DialogueAct], vocab: Sequence[str]) -> np.ndarray:
    position = {k: i for i, k in enumerate(vocab)}
    bits = np.zeros(len(vocab), dtype=np.int8)
    for key in signature(acts):
        if key not in position:
            raise DataError(f"act-slot pair {key} is not in the vocabulary")
        bits[position[key]] = 1
    return bits


# -- delexicalization -----------------------------------------------------------

@dataclass
class Substitution:
    slot_type: str
    value: str
    placeholder: str
    count: int = 0
    special: bool = False

    @property
    def placed(self) -> bool:
        return self.count > 0


@dataclass
class DelexResult:
    sentence: str
    substitutions: list[Substitution] = field(default_factory=list)

    @property
    def unplaced(self) -> list[Substitution]:
        return [s for s in self.substitutions if not s.placed and not s.special]


def delexicalize(sentence: str, acts: Iterable[DialogueAct]) -> DelexResult:
    """Replace slot values in ``sentence`` by slot-type placeholders.

    Matching is on token boundaries and case-insensitive, longest value
    first. The output is the tokenized sentence joined by spaces. Special
    values (yes / no / dontcare) are recorded but never substituted.
    """
    tokens = tokenize(sentence)
    subs = []
    for da in acts:
        if da.slot_type is None or da.slot_value is None:
            continue
        subs.append(Substitution(da.slot_type, da.slot_value, placeholder(da.slot_type),
                                 special=is_special(da.slot_value)))
    # None marks a position already consumed by a placeholder
    slots: list[str | None] = list(tokens)
    out: list[str | tuple[str]] = list(tokens)
    order = sorted((s for s in subs if not s.special),
                   key=lambda s: (-len(tokenize(s.value)), -len(s.value)))
    for sub in order:
        value = tokenize(sub.value)
        if not value:
            continue
        n = len(value)
        i = 0
        while i + n <= len(slots):
            if slots[i:i + n] == value:
                out[i] = (sub.placeholder,)
                for k in range(i, i + n):
                    slots[k] = None
                for k in range(i + 1, i + n):
                    out[k] = None
                sub.count += 1
                i += n
            else:
                i += 1
    words = [t[0] if isinstance(t, tuple) else t for t in out if t is not None]
    return DelexResult(" ".join(words), subs)


def relexicalize(delex: str, acts: Iterable[DialogueAct]) -> str:
    """Fill placeholders left to right with the acts' slot values.

    Several placeholders of one type consume that type's values in act order;
    once they run out, the last value is reused.
    """
    values: dict[str, list[str]] = {}
    for da in acts:
        if da.slot_type is not None and da.slot_value is not None:
            values.setdefault(placeholder(da.slot_type), []).append(da.slot_value)
    used: Counter = Counter()
    out = []
    for tok in delex.split():
        if is_placeholder(tok):
            vals = values.get(tok)
            if not vals:
                raise DataError(f"placeholder {tok} has no slot value")
            out.append(vals[min(used[tok], len(vals) - 1)])
            used[tok] += 1
        else:
            out.append(tok)
    return " ".join(out)


def is_placeholder(tok: str) -> bool:
    """Delexicalized text is lower-cased, so any upper-case word is a placeholder."""
    return tok.isupper() and any(c.isalpha() for c in tok)


def slot_error_rate(candidate: Sequence[str], acts: Iterable[DialogueAct]) -> float | None:
    """(missing + redundant) / required for a delexicalized token sequence.

    Required slots are the valued, non-special slots of ``acts`` (with
    multiplicity). Returns None when there are no required slots.
    """
    required = Counter(placeholder(da.slot_type) for da in _valued_slots(acts))
    total = sum(required.values())
    if total == 0:
        return None
    present = Counter(t for t in candidate if t in required)
    missing = sum(max(0, n - present[p]) for p, n in required.items())
    redundant = sum(max(0, present[p] - n) for p, n in required.items())
    return (missing + redundant) / total


# -- random baseline ------------------------------------------------------------

@dataclass(frozen=True)
class BaselineIndex:
    buckets: Mapping[frozenset[str], tuple[str, ...]]

    def __len__(self) -> int:
        return len(self.buckets)


def build_baseline_index(train: Corpus) -> BaselineIndex:
    """Delexicalize every training reference and bucket it by act signature."""
    buckets: dict[frozenset[str], list[str]] = {}
    for inst in train:
        if not inst.acts:
            log.warning("instance %s has no dialogue acts; skipped", inst.id)
            continue
        sig = signature(inst.acts)
        for ref in inst.references:
            buckets.setdefault(sig, []).append(delexicalize(ref, inst.acts).sentence)
    return BaselineIndex({k: tuple(v) for k, v in buckets.items()})


def _jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    union = a | b
    return len(a & b) / len(union) if union else 1.0


def _fillable(sentence: str, acts: Sequence[DialogueAct]) -> bool:
    try:
        relexicalize(sentence, acts)
    except DataError:
        return False
    return True


def baseline_generate(acts: Sequence[DialogueAct], index: BaselineIndex,
                      rng: np.random.Generator) -> str:
    """Draw a training sentence with the same act signature and relexicalize it.

    Unseen signatures back off to the stored signature with the highest
    Jaccard overlap (ties: lexicographically first sorted key list), keeping
    only sentences whose placeholders the query can fill.
    """
    if not index.buckets:
        raise DataError("baseline index is empty")
    sig = signature(acts)
    bucket = index.buckets.get(sig)
    if bucket is None:
        ranked = sorted(index.buckets,
                        key=lambda s: (-_jaccard(sig, s), sorted(s)))
        for cand in ranked:
            fillable = [s for s in index.buckets[cand] if _fillable(s, acts)]
            if fillable:
                bucket = tuple(fillable)
                break
        else:
            raise DataError(f"no stored sentence can realize acts {sorted(sig)}")
    choice = bucket[int(rng.integers(len(bucket)))]
    return relexicalize(choice, acts)
