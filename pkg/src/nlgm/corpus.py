"""Data model and loaders for corpora, embeddings, sentence vectors and ratings.

All loaders take binary streams, decode strictly as UTF-8 and raise
:class:`DataError` (with a line number where one exists) on bad input.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import IO, Iterator, Mapping, Sequence

import numpy as np


class DataError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass(frozen=True)
class DialogueAct:
    act: str
    slot_type: str | None = None
    slot_value: str | None = None

    def __post_init__(self):
        if not self.act:
            raise DataError("dialogue act name must be non-empty")
        if self.slot_value is not None and self.slot_type is None:
            raise DataError(f"slot value {self.slot_value!r} given without a slot type")


DialogueActSet = tuple  # tuple[DialogueAct, ...]


@dataclass(frozen=True)
class EvalInstance:
    id: str
    hypothesis: str
    references: tuple[str, ...]
    acts: tuple[DialogueAct, ...] | None = None

    def __post_init__(self):
        if not self.references:
            raise DataError(f"instance {self.id!r} has an empty reference list")


@dataclass(frozen=True)
class Corpus:
    instances: tuple[EvalInstance, ...]

    def __post_init__(self):
        seen = set()
        for inst in self.instances:
            if inst.id in seen:
                raise DataError(f"duplicate instance id {inst.id!r}")
            seen.add(inst.id)

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self) -> Iterator[EvalInstance]:
        return iter(self.instances)

    def ids(self) -> list[str]:
        return [inst.id for inst in self.instances]


def _decode(source: IO[bytes] | bytes) -> str:
    data = source if isinstance(source, bytes) else source.read()
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise DataError(f"input is not valid UTF-8: {e}") from None


def _lines(text: str) -> list[str]:
    # split on \n only; str.splitlines would also break on U+0085, U+2028, ...
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [line[:-1] if line.endswith("\r") else line for line in lines]


# -- corpus -----------------------------------------------------------------

def acts_from_json(raw) -> tuple[DialogueAct, ...]:
    """Parse ``[{act, slots: [{type, value}]}]`` into a flat act tuple."""
    if not isinstance(raw, list):
        raise DataError("'acts' must be a list")
    out = []
    for entry in raw:
        if not isinstance(entry, dict) or not isinstance(entry.get("act"), str):
            raise DataError(f"bad act entry {entry!r}")
        slots = entry.get("slots") or []
        if not slots:
            out.append(DialogueAct(entry["act"]))
        for slot in slots:
            if not isinstance(slot, dict) or not isinstance(slot.get("type"), str):
                raise DataError(f"bad slot entry {slot!r}")
            value = slot.get("value")
            out.append(DialogueAct(entry["act"], slot["type"],
                                   None if value is None else str(value)))
    return tuple(out)


def acts_to_json(acts: Sequence[DialogueAct]) -> list[dict]:
    """Inverse of :func:`acts_from_json`; consecutive slots of one act are grouped."""
    out: list[dict] = []
    for da in acts:
        if da.slot_type is None:
            out.append({"act": da.act, "slots": []})
            continue
        slot = {"type": da.slot_type}
        if da.slot_value is not None:
            slot["value"] = da.slot_value
        if out and out[-1]["act"] == da.act and out[-1]["slots"]:
            out[-1]["slots"].append(slot)
        else:
            out.append({"act": da.act, "slots": [slot]})
    return out


def load_corpus_jsonl(source: IO[bytes] | bytes) -> Corpus:
    instances = []
    for lineno, line in enumerate(_lines(_decode(source)), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise DataError(f"line {lineno}: malformed JSON ({e.msg})") from None
        if not isinstance(rec, dict):
            raise DataError(f"line {lineno}: record must be a JSON object")
        try:
            ident, hyp, refs = rec["id"], rec["hypothesis"], rec["references"]
        except KeyError as e:
            raise DataError(f"line {lineno}: missing field {e.args[0]!r}") from None
        if not isinstance(hyp, str) or not isinstance(refs, list) \
                or not all(isinstance(r, str) for r in refs):
            raise DataError(f"line {lineno}: hypothesis must be a string and "
                            "references a list of strings")
        try:
            acts = acts_from_json(rec["acts"]) if rec.get("acts") is not None else None
            instances.append(EvalInstance(str(ident), hyp, tuple(refs), acts))
        except DataError as e:
            raise DataError(f"line {lineno}: {e}") from None
    return Corpus(tuple(instances))


def load_corpus_parallel(hyp: IO[bytes] | bytes,
                         refs: Sequence[IO[bytes] | bytes]) -> Corpus:
    """One hypothesis file plus N reference files, aligned by line.

    Instance ids are 1-based line numbers.
    """
    if not refs:
        raise DataError("at least one reference file is required")
    hyp_lines = _lines(_decode(hyp))
    ref_lines = [_lines(_decode(r)) for r in refs]
    for k, lines in enumerate(ref_lines):
        if len(lines) != len(hyp_lines):
            raise DataError(f"unequal line counts: hypothesis file has {len(hyp_lines)} "
                            f"lines, reference file {k + 1} has {len(lines)}")
    return Corpus(tuple(
        EvalInstance(str(i + 1), h, tuple(r[i] for r in ref_lines))
        for i, h in enumerate(hyp_lines)))


def load_corpus(source, format: str = "jsonl", refs=None) -> Corpus:
    if format == "jsonl":
        return load_corpus_jsonl(source)
    if format == "parallel-text":
        return load_corpus_parallel(source, refs or [])
    raise ValueError(f"unknown corpus format {format!r}")


def instance_to_json(inst: EvalInstance) -> dict:
    rec = {"id": inst.id, "hypothesis": inst.hypothesis, "references": list(inst.references)}
    if inst.acts is not None:
        rec["acts"] = acts_to_json(inst.acts)
    return rec


def dump_corpus_jsonl(corpus: Corpus) -> bytes:
    return "".join(json.dumps(instance_to_json(inst), ensure_ascii=False) + "\n"
                   for inst in corpus).encode("utf-8")


# -- vectors ------------------------------------------------------------------

@dataclass(frozen=True)
class VectorTable:
    """Immutable key -> vector mapping of fixed dimension."""

    dim: int
    entries: Mapping[str, np.ndarray] = field(repr=False)

    def __contains__(self, key: str) -> bool:
        return key in self.entries

    def __getitem__(self, key: str) -> np.ndarray:
        return self.entries[key]

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, key: str):
        return self.entries.get(key)

    def scaled(self, factor: float):
        return type(self).from_dict({k: v * factor for k, v in self.entries.items()})

    @classmethod
    def from_dict(cls, entries: Mapping[str, Sequence[float]]):
        arrays = {}
        dim = None
        for key, vec in entries.items():
            arr = np.asarray(vec, dtype=np.float64)
            if dim is None:
                dim = arr.shape[0]
            if arr.shape != (dim,):
                raise DataError(f"inconsistent dimension for {key!r}")
            arr.setflags(write=False)
            arrays[key] = arr
        if dim is None or dim == 0:
            raise DataError("empty vector table")
        return cls(dim, MappingProxyType(arrays))


class EmbeddingTable(VectorTable):
    """Word embeddings."""


class SentenceVectorTable(VectorTable):
    """Precomputed sentence vectors keyed by sentence id."""


def _parse_vectors(text: str) -> tuple[int, dict[str, np.ndarray]]:
    lines = _lines(text)
    start = 0
    first = lines[0].split() if lines else []
    if len(first) == 2 and first[0].isdigit() and first[1].isdigit():
        start = 1  # word2vec-style "count dim" header
    entries: dict[str, np.ndarray] = {}
    dim = None
    for lineno, line in enumerate(lines[start:], start=start + 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) < 2:
            raise DataError(f"line {lineno}: no vector components")
        try:
            vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
        except ValueError:
            raise DataError(f"line {lineno}: non-numeric component") from None
        if dim is None:
            dim = vec.shape[0]
        elif vec.shape[0] != dim:
            raise DataError(f"inconsistent dimension at line {lineno}: "
                            f"expected {dim}, got {vec.shape[0]}")
        vec.setflags(write=False)
        entries[parts[0]] = vec  # last occurrence wins
    if dim is None:
        raise DataError("empty file")
    return dim, entries


def load_embeddings(source: IO[bytes] | bytes) -> EmbeddingTable:
    """Text embeddings: ``word v1 ... vd`` per line, optional ``count dim`` header.

    Duplicate words: the last line wins.
    """
    dim, entries = _parse_vectors(_decode(source))
    return EmbeddingTable(dim, MappingProxyType(entries))


def load_sentence_vectors(source: IO[bytes] | bytes) -> SentenceVectorTable:
    dim, entries = _parse_vectors(_decode(source))
    return SentenceVectorTable(dim, MappingProxyType(entries))


# -- ratings --------------------------------------------------------------------

@dataclass(frozen=True)
class RatingMatrix:
    """Sparse item x rater grid of Likert scores in 1..5."""

    items: tuple[str, ...]
    raters: tuple[str, ...]
    scores: Mapping[tuple[str, str], int]

    def score(self, item: str, rater: str) -> int | None:
        return self.scores.get((item, rater))

    def rater_scores(self, rater: str) -> dict[str, int]:
        return {i: s for (i, r), s in self.scores.items() if r == rater}

    def restrict(self, raters: Sequence[str]) -> RatingMatrix:
        keep = set(raters)
        scores = {k: v for k, v in self.scores.items() if k[1] in keep}
        items = tuple(i for i in self.items if any((i, r) in scores for r in raters))
        return RatingMatrix(items, tuple(r for r in self.raters if r in keep),
                            MappingProxyType(scores))

    @classmethod
    def from_triples(cls, triples) -> RatingMatrix:
        items: dict[str, None] = {}
        raters: dict[str, None] = {}
        scores: dict[tuple[str, str], int] = {}
        for item, rater, score in triples:
            if (item, rater) in scores:
                raise DataError(f"duplicate rating for item {item!r}, rater {rater!r}")
            if not 1 <= score <= 5:
                raise DataError(f"score out of range: {score}")
            items.setdefault(item)
            raters.setdefault(rater)
            scores[(item, rater)] = int(score)
        return cls(tuple(items), tuple(raters), MappingProxyType(scores))


def load_ratings(source: IO[bytes] | bytes) -> RatingMatrix:
    """CSV with header ``item_id,rater_id,score``."""
    reader = csv.reader(io.StringIO(_decode(source)))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["item_id", "rater_id", "score"]:
        raise DataError("ratings CSV must start with header 'item_id,rater_id,score'")
    triples = []
    seen = set()
    for row in reader:
        lineno = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise DataError(f"line {lineno}: expected 3 columns, got {len(row)}")
        item, rater, raw = (c.strip() for c in row)
        try:
            score = int(raw)
        except ValueError:
            raise DataError(f"line {lineno}: non-integer score {raw!r}") from None
        if not 1 <= score <= 5:
            raise DataError(f"line {lineno}: score out of range: {score}")
        if (item, rater) in seen:
            raise DataError(f"line {lineno}: duplicate rating for item {item!r}, "
                            f"rater {rater!r}")
        seen.add((item, rater))
        triples.append((item, rater, score))
    return RatingMatrix.from_triples(triples)
