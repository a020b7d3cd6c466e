"""Bag-of-words TF-IDF features as sparse vectors.

Terms are whitespace tokens; feature ids are assigned in lexicographic
term order for determinism.  Weights use raw term frequency times the
smoothed idf ln((1+N)/(1+df)) + 1, L2-normalized per document.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import InputError


@dataclass(frozen=True)
class SparseVector:
    """Sorted (feature id, weight) pairs; no zeros, all finite."""
    entries: tuple[tuple[int, float], ...]

    def __post_init__(self):
        prev = -1
        for idx, w in self.entries:
            if idx <= prev:
                raise InputError("sparse vector indices must be strictly increasing")
            if w == 0.0 or not math.isfinite(w):
                raise InputError(f"sparse vector weight must be nonzero finite, got {w}")
            prev = idx

    @classmethod
    def from_dict(cls, weights: dict[int, float]) -> "SparseVector":
        entries = tuple(sorted((i, w) for i, w in weights.items() if w != 0.0))
        return cls(entries)

    def __len__(self) -> int:
        return len(self.entries)

    def norm(self) -> float:
        return math.sqrt(sum(w * w for _, w in self.entries))


EMPTY_VECTOR = SparseVector(())


def dot(a: SparseVector, b: SparseVector) -> float:
    """Sparse dot product via a merge walk over the sorted entries."""
    i = j = 0
    total = 0.0
    ea, eb = a.entries, b.entries
    while i < len(ea) and j < len(eb):
        ia, wa = ea[i]
        ib, wb = eb[j]
        if ia == ib:
            total += wa * wb
            i += 1
            j += 1
        elif ia < ib:
            i += 1
        else:
            j += 1
    return total


def add_scaled(a: SparseVector, b: SparseVector, s: float) -> SparseVector:
    """a + s*b, with exact-zero results elided."""
    out: dict[int, float] = dict(a.entries)
    for idx, w in b.entries:
        out[idx] = out.get(idx, 0.0) + s * w
    return SparseVector.from_dict(out)


@dataclass(frozen=True)
class TermIndex:
    terms: tuple[str, ...]            # feature id -> term
    document_frequency: tuple[int, ...]
    num_docs: int

    def __post_init__(self):
        if len(self.terms) != len(self.document_frequency):
            raise InputError("terms and document_frequency lengths differ")
        for term, df in zip(self.terms, self.document_frequency):
            if not (1 <= df <= self.num_docs):
                raise InputError(f"df for {term!r} out of range: {df}")

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def term_to_id(self) -> dict[str, int]:
        cached = getattr(self, "_term_to_id", None)
        if cached is None:
            cached = {t: i for i, t in enumerate(self.terms)}
            object.__setattr__(self, "_term_to_id", cached)
        return cached

    def idf(self, feature_id: int) -> float:
        df = self.document_frequency[feature_id]
        return math.log((1 + self.num_docs) / (1 + df)) + 1.0


def fit_term_index(texts: list[str], min_df: int = 1) -> TermIndex:
    """Index every whitespace token appearing in >= min_df documents."""
    if not texts:
        raise InputError("fit_term_index requires a non-empty list of texts")
    if min_df < 1:
        raise InputError("min_df must be >= 1")
    df: dict[str, int] = {}
    any_token = False
    for text in texts:
        tokens = set(text.split())
        if tokens:
            any_token = True
        for t in tokens:
            df[t] = df.get(t, 0) + 1
    if not any_token:
        raise InputError("all documents are empty; nothing to index")
    terms = tuple(sorted(t for t, d in df.items() if d >= min_df))
    return TermIndex(terms=terms,
                     document_frequency=tuple(df[t] for t in terms),
                     num_docs=len(texts))


def count_vector(text: str, idx: TermIndex) -> SparseVector:
    """Raw term-count vector over the index; out-of-index terms ignored."""
    counts: dict[int, float] = {}
    t2i = idx.term_to_id
    for tok in text.split():
        fid = t2i.get(tok)
        if fid is not None:
            counts[fid] = counts.get(fid, 0.0) + 1.0
    return SparseVector.from_dict(counts)


def tfidf_transform(text: str, idx: TermIndex) -> SparseVector:
    """tf * idf, L2-normalized when nonzero."""
    weights: dict[int, float] = {}
    t2i = idx.term_to_id
    for tok in text.split():
        fid = t2i.get(tok)
        if fid is not None:
            weights[fid] = weights.get(fid, 0.0) + 1.0
    for fid in weights:
        weights[fid] *= idx.idf(fid)
    norm = math.sqrt(sum(w * w for w in weights.values()))
    if norm > 0:
        for fid in weights:
            weights[fid] /= norm
    return SparseVector.from_dict(weights)


def save_term_index(idx: TermIndex, path: str | Path) -> None:
    payload = {"terms": list(idx.terms),
               "df": list(idx.document_frequency),
               "num_docs": idx.num_docs}
    Path(path).write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")


def load_term_index(path: str | Path) -> TermIndex:
    path = Path(path)
    if not path.exists():
        raise InputError(f"term index file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        return TermIndex(terms=tuple(payload["terms"]),
                         document_frequency=tuple(payload["df"]),
                         num_docs=int(payload["num_docs"]))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise InputError(f"malformed term index {path}: {e}") from None
