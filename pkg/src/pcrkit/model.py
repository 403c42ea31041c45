"""Feature vectors, replicated databases, quantization and CSV ingestion."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence


class IngestError(ValueError):
    """Raised when a dataset or quantization config cannot be used."""


@dataclass(frozen=True)
class FeatureVector:
    """A point of ``[0:R]^d``."""

    entries: tuple[int, ...]
    R: int

    def __post_init__(self):
        entries = tuple(int(v) for v in self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise ValueError("feature vector must have at least one entry")
        bad = [v for v in entries if not 0 <= v <= self.R]
        if bad:
            raise ValueError(f"entries {bad} outside [0, {self.R}]")

    @property
    def d(self) -> int:
        return len(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, k):
        return self.entries[k]


@dataclass(frozen=True)
class Database:
    """Ordered accepted-sample store ``y_1..y_M``; public indexing is 1-based."""

    records: tuple[FeatureVector, ...]
    R: int

    def __post_init__(self):
        recs = tuple(self.records)
        object.__setattr__(self, "records", recs)
        if recs:
            d = recs[0].d
            for r in recs:
                if r.d != d:
                    raise ValueError("records differ in dimension")
                if r.R != self.R:
                    raise ValueError("records differ in bound R")

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[int]], R: int | None = None) -> Database:
        rows = [tuple(int(v) for v in r) for r in rows]
        if R is None:
            R = max((max(r) for r in rows), default=0)
        return cls(tuple(FeatureVector(r, R) for r in rows), R)

    @property
    def M(self) -> int:
        return len(self.records)

    @property
    def d(self) -> int:
        return self.records[0].d if self.records else 0

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def record(self, i: int) -> FeatureVector:
        """Record ``y_i`` for ``i`` in ``1..M``."""
        if not 1 <= i <= self.M:
            raise IndexError(f"record index {i} outside [1, {self.M}]")
        return self.records[i - 1]

    def rows(self) -> list[tuple[int, ...]]:
        return [r.entries for r in self.records]


@dataclass(frozen=True)
class ImmutableSet:
    """Sorted 1-based feature indices that the counterfactual must keep."""

    indices: tuple[int, ...]
    d: int
    F: int | None = None

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"immutable indices must be strictly increasing: {idx}")
        if any(not 1 <= i <= self.d for i in idx):
            raise ValueError(f"immutable indices must lie in [1, {self.d}]")
        if self.F is not None and len(idx) > self.F:
            raise ValueError(f"|I|={len(idx)} exceeds F={self.F}")

    @classmethod
    def of(cls, indices: Iterable[int], d: int, F: int | None = None) -> ImmutableSet:
        return cls(tuple(sorted(set(indices))), d, F)

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, k: int) -> bool:
        return k in self.indices

    def mask(self) -> list[int]:
        """0/1 indicator over features."""
        return [1 if k in self.indices else 0 for k in range(1, self.d + 1)]

    def zero_based(self) -> tuple[int, ...]:
        return tuple(i - 1 for i in self.indices)


@dataclass(frozen=True)
class WeightVector:
    """Per-feature actionability weights in ``[1, L1]``."""

    entries: tuple[int, ...]
    L1: int

    def __post_init__(self):
        entries = tuple(int(v) for v in self.entries)
        object.__setattr__(self, "entries", entries)
        bad = [v for v in entries if not 1 <= v <= self.L1]
        if bad:
            raise ValueError(f"weights {bad} outside [1, {self.L1}]")

    @classmethod
    def ones(cls, d: int) -> WeightVector:
        return cls((1,) * d, 1)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


@dataclass(frozen=True)
class FeatureRange:
    name: str
    min: float
    max: float


@dataclass(frozen=True)
class QuantizationConfig:
    """Uniform quantizer onto ``levels`` integer levels ``0..levels-1`` per feature.

    ``features`` may be empty, in which case the ranges are taken from the
    observed data at ingestion time.
    """

    levels: int
    features: tuple[FeatureRange, ...] = ()
    label: str | None = None
    accepted_value: str | None = None
    accepted_threshold: float | None = None
    dedup: bool = False

    def __post_init__(self):
        if self.levels < 2:
            raise ValueError(f"levels must be >= 2, got {self.levels}")
        object.__setattr__(self, "features", tuple(self.features))
        for f in self.features:
            if not f.min < f.max:
                raise ValueError(f"degenerate range for feature {f.name!r}: min={f.min}, max={f.max}")

    @property
    def R(self) -> int:
        return self.levels - 1

    @classmethod
    def from_ranges(cls, levels: int, mins: Sequence[float], maxs: Sequence[float], names=None) -> QuantizationConfig:
        names = names or [f"f{k}" for k in range(len(mins))]
        return cls(levels, tuple(FeatureRange(n, float(a), float(b)) for n, a, b in zip(names, mins, maxs)))

    @classmethod
    def from_json(cls, path: str | Path) -> QuantizationConfig:
        """Load the JSON sidecar format (keys ``levels``, ``features``, ``label``, ...)."""
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        feats = tuple(
            FeatureRange(f["name"], float(f["min"]), float(f["max"]))
            for f in raw.get("features", [])
            if f.get("min") is not None and f.get("max") is not None
        )
        acc = raw.get("accepted_value")
        return cls(
            levels=int(raw["levels"]),
            features=feats,
            label=raw.get("label"),
            accepted_value=None if acc is None else str(acc),
            accepted_threshold=raw.get("accepted_threshold"),
            dedup=bool(raw.get("dedup", False)),
        )

    def to_json(self) -> dict:
        return {
            "levels": self.levels,
            "features": [{"name": f.name, "min": f.min, "max": f.max} for f in self.features],
            "label": self.label,
            "accepted_value": self.accepted_value,
            "accepted_threshold": self.accepted_threshold,
            "dedup": self.dedup,
        }

    def with_ranges(self, names: Sequence[str], mins: Sequence[float], maxs: Sequence[float]) -> QuantizationConfig:
        """Copy of this config with explicit ranges for ``names``.

        Features already listed keep their configured range.
        """
        known = {f.name: f for f in self.features}
        feats = []
        for n, a, b in zip(names, mins, maxs):
            feats.append(known.get(n) or FeatureRange(n, float(a), float(b)))
        return QuantizationConfig(
            self.levels, tuple(feats), self.label, self.accepted_value, self.accepted_threshold, self.dedup
        )


def _round_half_up(v: float) -> int:
    return math.floor(v + 0.5)


def quantize(x: Sequence[float], cfg: QuantizationConfig) -> FeatureVector:
    """Map a real vector onto ``[0:R]^d`` with round-half-up and clamping."""
    if len(x) != len(cfg.features):
        raise ValueError(f"dimension mismatch: |x|={len(x)}, config has {len(cfg.features)} features")
    R = cfg.R
    out = []
    for v, f in zip(x, cfg.features):
        q = _round_half_up((float(v) - f.min) / (f.max - f.min) * R)
        out.append(min(max(q, 0), R))
    return FeatureVector(tuple(out), R)


def dequantize(v: FeatureVector, cfg: QuantizationConfig) -> list[float]:
    R = cfg.R
    return [f.min + e / R * (f.max - f.min) for e, f in zip(v.entries, cfg.features)]


@dataclass
class IngestResult:
    accepted: Database
    rejected: list[FeatureVector]
    config: QuantizationConfig
    feature_names: list[str] = field(default_factory=list)
    duplicates_dropped: int = 0


def read_table(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise IngestError(f"{path}: empty file") from None
        rows = [row for row in reader if row and any(c.strip() for c in row)]
    return header, rows


def _parse_float(cell: str, row: int, col: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise IngestError(f"non-numeric value {cell!r} at row {row}, column {col!r}") from None


def _is_accepted(label: str, cfg: QuantizationConfig, row: int, col: str) -> bool:
    if cfg.accepted_threshold is not None:
        return _parse_float(label, row, col) >= cfg.accepted_threshold
    want = cfg.accepted_value
    if want is None:
        raise IngestError("config needs accepted_value or accepted_threshold")
    if label.strip() == want.strip():
        return True
    try:
        return float(label) == float(want)
    except ValueError:
        return False


def ingest_csv(
    path: str | Path,
    cfg: QuantizationConfig,
    label: str | None = None,
    accepted_value: str | None = None,
    dedup: bool | None = None,
) -> IngestResult:
    """Split a labelled CSV into a quantized accepted database and rejected list.

    Feature columns are those named in ``cfg.features``, or every column but
    the label when the config lists none. Missing ranges default to the
    observed column min/max. Row numbers in errors are 1-based data rows
    (the header is row 0).
    """
    label = label or cfg.label
    if accepted_value is not None:
        cfg = QuantizationConfig(cfg.levels, cfg.features, cfg.label, str(accepted_value), None, cfg.dedup)
    dedup = cfg.dedup if dedup is None else dedup
    if label is None:
        raise IngestError("no label column given")
    header, rows = read_table(path)
    if label not in header:
        raise IngestError(f"missing label column {label!r}")
    names = [f.name for f in cfg.features] or [h for h in header if h != label]
    missing = [n for n in names if n not in header]
    if missing:
        raise IngestError(f"missing feature column {missing[0]!r}")
    cols = [header.index(n) for n in names]
    li = header.index(label)

    values, labels = [], []
    for r, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise IngestError(f"row {r} has {len(row)} cells, header has {len(header)}")
        values.append([_parse_float(row[c], r, header[c]) for c in cols])
        labels.append(_is_accepted(row[li], cfg, r, label))
    if not values:
        raise IngestError(f"{path}: no data rows")

    mins = [min(v[k] for v in values) for k in range(len(names))]
    maxs = [max(v[k] for v in values) for k in range(len(names))]
    try:
        cfg = cfg.with_ranges(names, mins, maxs)
    except ValueError as exc:
        raise IngestError(str(exc)) from None

    acc, rej = [], []
    for v, ok in zip(values, labels):
        (acc if ok else rej).append(quantize(v, cfg))
    if not acc:
        raise IngestError("no accepted rows")
    if not rej:
        raise IngestError("no rejected rows")
    dropped = 0
    if dedup:
        seen, uniq = set(), []
        for fv in acc:
            if fv.entries not in seen:
                seen.add(fv.entries)
                uniq.append(fv)
        dropped = len(acc) - len(uniq)
        acc = uniq
    return IngestResult(Database(tuple(acc), cfg.R), rej, cfg, names, dropped)


def write_vectors(path: str | Path, vectors: Iterable[FeatureVector], names: Sequence[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for v in vectors:
            w.writerow(v.entries)


def read_vectors(path: str | Path, R: int | None = None) -> tuple[list[str], list[tuple[int, ...]]]:
    """Read a canonical quantized file: header row, then integer rows."""
    header, rows = read_table(path)
    out = []
    for r, row in enumerate(rows, start=1):
        vec = []
        for c, cell in zip(header, row):
            try:
                vec.append(int(cell))
            except ValueError:
                raise IngestError(f"non-integer value {cell!r} at row {r}, column {c!r}") from None
        out.append(tuple(vec))
    if R is not None:
        for r, vec in enumerate(out, start=1):
            if any(not 0 <= v <= R for v in vec):
                raise IngestError(f"row {r} has entries outside [0, {R}]")
    return header, out


def read_database(path: str | Path, R: int | None = None) -> Database:
    _, rows = read_vectors(path, R)
    if not rows:
        raise IngestError(f"{path}: empty database")
    return Database.from_rows(rows, R)


def read_real_matrix(path: str | Path) -> tuple[list[str], list[list[float]]]:
    """Header plus float rows; used for unquantized experiment inputs."""
    header, rows = read_table(path)
    return header, [[_parse_float(c, r, h) for c, h in zip(row, header)] for r, row in enumerate(rows, start=1)]
