"""Ranking dataset containers, SVMLight/LETOR parsing, and synthetic data.

Datasets are grouped per query: each :class:`QueryGroup` holds the feature
matrix and integer relevance grades of one query's candidate items.  Grades
are mapped to real-valued relevances ``2**grade - 1`` at construction, so a
grade of 0 means zero relevance.  All arrays are frozen after construction,
which makes a :class:`Dataset` safe to share across threads.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

MAX_GRADE = 4

VALID_SPLITS = ("train", "validation", "test")


class SvmLightParseError(ValueError):
    """Malformed SVMLight/LETOR input, with the offending line number."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


def grades_to_relevances(grades: np.ndarray) -> np.ndarray:
    """Map integer grades to relevances via 2**grade - 1."""
    return np.exp2(np.asarray(grades, dtype=np.float64)) - 1.0


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class QueryGroup:
    """One query's candidate items: features, grades, derived relevances."""

    query_id: str
    features: np.ndarray  # (n_items, feature_dim) float64
    labels: np.ndarray  # (n_items,) integer grades in [0, MAX_GRADE]
    relevances: np.ndarray = field(init=False)

    def __post_init__(self):
        features = _frozen(np.ascontiguousarray(self.features, dtype=np.float64))
        labels = _frozen(np.ascontiguousarray(self.labels, dtype=np.int64))
        if features.ndim != 2:
            raise ValueError("features must be a 2-D (items x features) array")
        if labels.shape != (features.shape[0],):
            raise ValueError("labels must have one entry per item")
        if features.shape[0] < 1:
            raise ValueError("a query group needs at least one item")
        if labels.min() < 0 or labels.max() > MAX_GRADE:
            raise ValueError(f"grades must lie in [0, {MAX_GRADE}]")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "relevances", _frozen(grades_to_relevances(labels)))

    @property
    def n_items(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True, eq=False)
class Dataset:
    """A split's query groups with a consistent feature dimension."""

    groups: tuple[QueryGroup, ...]
    feature_dim: int
    split: str

    def __post_init__(self):
        if self.split not in VALID_SPLITS:
            raise ValueError(f"split must be one of {VALID_SPLITS}")
        seen = set()
        for g in self.groups:
            if g.features.shape[1] != self.feature_dim:
                raise ValueError(
                    f"group {g.query_id!r} has feature dim {g.features.shape[1]}, "
                    f"expected {self.feature_dim}"
                )
            if g.query_id in seen:
                raise ValueError(f"duplicate query id {g.query_id!r} in split")
            seen.add(g.query_id)

    @property
    def n_queries(self) -> int:
        return len(self.groups)


def datasets_equal(a: Dataset, b: Dataset) -> bool:
    """Exact (bitwise) equality of two datasets."""
    if a.feature_dim != b.feature_dim or a.split != b.split:
        return False
    if len(a.groups) != len(b.groups):
        return False
    for ga, gb in zip(a.groups, b.groups):
        if ga.query_id != gb.query_id:
            return False
        if not np.array_equal(ga.labels, gb.labels):
            return False
        if not np.array_equal(ga.features, gb.features):
            return False
    return True


def parse_svmlight(source, split: str = "train") -> Dataset:
    """Parse SVMLight/LETOR text into a Dataset.

    ``source`` may be a file-like object, a string of file content, or any
    iterable of lines.  Each nonempty line must look like::

        <grade> qid:<id> <fid>:<val> <fid>:<val> ... # optional comment

    Feature ids are positive integers; ids absent from a line default to
    0.0; the feature dimension is the maximum id seen anywhere.  Items with
    equal qid are merged into one group regardless of line order (groups
    are emitted in order of first appearance, items in line order).
    """
    if isinstance(source, str):
        source = io.StringIO(source)

    raw: dict[str, list[tuple[int, dict[int, float]]]] = {}
    order: list[str] = []
    max_fid = 0
    n_items = 0

    for line_no, line in enumerate(source, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) < 2:
            raise SvmLightParseError(line_no, "expected '<grade> qid:<id> ...'")
        try:
            grade = int(tokens[0])
        except ValueError:
            raise SvmLightParseError(line_no, f"non-integer grade {tokens[0]!r}") from None
        if grade < 0:
            raise SvmLightParseError(line_no, f"negative grade {grade}")
        if grade > MAX_GRADE:
            raise SvmLightParseError(line_no, f"grade {grade} exceeds the maximum of {MAX_GRADE}")
        if not tokens[1].startswith("qid:") or len(tokens[1]) == 4:
            raise SvmLightParseError(line_no, "second token must be 'qid:<id>'")
        qid = tokens[1][4:]

        feats: dict[int, float] = {}
        for tok in tokens[2:]:
            fid_str, sep, val_str = tok.partition(":")
            if not sep:
                raise SvmLightParseError(line_no, f"expected '<fid>:<val>', got {tok!r}")
            try:
                fid = int(fid_str)
                val = float(val_str)
            except ValueError:
                raise SvmLightParseError(line_no, f"bad feature token {tok!r}") from None
            if fid < 1:
                raise SvmLightParseError(line_no, f"feature id must be positive, got {fid}")
            if fid in feats:
                raise SvmLightParseError(line_no, f"duplicate feature id {fid}")
            feats[fid] = val
            max_fid = max(max_fid, fid)

        if qid not in raw:
            raw[qid] = []
            order.append(qid)
        raw[qid].append((grade, feats))
        n_items += 1

    if n_items == 0:
        raise SvmLightParseError(0, "empty input")

    groups = []
    for qid in order:
        items = raw[qid]
        labels = np.array([grade for grade, _ in items], dtype=np.int64)
        features = np.zeros((len(items), max_fid), dtype=np.float64)
        for row, (_, feats) in enumerate(items):
            for fid, val in feats.items():
                features[row, fid - 1] = val
        groups.append(QueryGroup(query_id=qid, features=features, labels=labels))

    return Dataset(groups=tuple(groups), feature_dim=max_fid, split=split)


def load_svmlight(path, split: str = "train") -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_svmlight(fh, split=split)


def to_svmlight(dataset: Dataset) -> str:
    """Serialize a Dataset to dense SVMLight text (round-trips exactly)."""
    lines = []
    for group in dataset.groups:
        for grade, row in zip(group.labels, group.features):
            feats = " ".join(f"{fid}:{float(val)!r}" for fid, val in enumerate(row, start=1))
            lines.append(f"{grade} qid:{group.query_id} {feats}")
    return "\n".join(lines) + "\n"


def feature_stats(dataset: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature (min, max) over all items of a dataset."""
    stacked = np.concatenate([g.features for g in dataset.groups], axis=0)
    return stacked.min(axis=0), stacked.max(axis=0)


def normalize_features(dataset: Dataset, stats=None) -> Dataset:
    """Min-max scale each feature to [0, 1].

    ``stats`` should be the (min, max) pair computed from the train split;
    when omitted the dataset's own statistics are used.  Constant features
    map to 0.0.  Values are clipped to [0, 1] so validation/test features
    outside the train range cannot escape the unit box.
    """
    if stats is None:
        stats = feature_stats(dataset)
    lo, hi = stats
    span = hi - lo
    safe_span = np.where(span > 0, span, 1.0)
    groups = []
    for g in dataset.groups:
        scaled = np.clip((g.features - lo) / safe_span, 0.0, 1.0)
        scaled[:, span <= 0] = 0.0
        groups.append(QueryGroup(query_id=g.query_id, features=scaled, labels=g.labels))
    return Dataset(groups=tuple(groups), feature_dim=dataset.feature_dim, split=dataset.split)


def synth_dataset(
    num_queries: int,
    items_per_query: int,
    feature_dim: int,
    label_levels: int,
    seed: int,
    split: str = "train",
) -> Dataset:
    """Generate a deterministic synthetic ranking dataset.

    Recipe: each item draws a grade uniformly from {0, ..., label_levels-1}
    (so every level occurs with nonzero probability) and a latent signal
    t = grade / (label_levels - 1).  The first ceil(feature_dim / 2)
    features are informative, 0.8*t + 0.2*Uniform(0,1); the rest are pure
    Uniform(0,1) noise.  A ranker that orders by true relevance therefore
    beats a random ranker, and the grades are recoverable from features.
    """
    if num_queries < 1 or items_per_query < 1 or feature_dim < 1:
        raise ValueError("num_queries, items_per_query and feature_dim must be >= 1")
    if not 2 <= label_levels <= MAX_GRADE + 1:
        raise ValueError(f"label_levels must lie in [2, {MAX_GRADE + 1}]")

    rng = np.random.default_rng(seed)
    n_informative = (feature_dim + 1) // 2
    groups = []
    for q in range(num_queries):
        labels = rng.integers(0, label_levels, size=items_per_query)
        signal = labels / (label_levels - 1)
        noise = rng.uniform(size=(items_per_query, feature_dim))
        features = noise.copy()
        features[:, :n_informative] = 0.8 * signal[:, None] + 0.2 * noise[:, :n_informative]
        groups.append(QueryGroup(query_id=f"synth-{q}", features=features, labels=labels))
    return Dataset(groups=tuple(groups), feature_dim=feature_dim, split=split)


def split_by_query(
    dataset: Dataset,
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> tuple[Dataset, Dataset, Dataset]:
    """Partition one dataset into train/validation/test splits by query.

    Queries are shuffled with ``seed`` before slicing, so the partition is
    deterministic for a fixed seed.  Every split receives at least one
    query when the dataset has three or more.
    """
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("fractions must sum to 1")
    n = dataset.n_queries
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(round(fractions[0] * n))
    n_val = int(round(fractions[1] * n))
    if n >= 3:
        n_train = min(max(n_train, 1), n - 2)
        n_val = min(max(n_val, 1), n - n_train - 1)
    picks = (perm[:n_train], perm[n_train : n_train + n_val], perm[n_train + n_val :])
    out = []
    for split, idx in zip(VALID_SPLITS, picks):
        groups = tuple(dataset.groups[i] for i in sorted(idx))
        out.append(Dataset(groups=groups, feature_dim=dataset.feature_dim, split=split))
    return tuple(out)
