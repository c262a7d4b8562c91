"""Count histogram data model and TSV ingestion.

Mutation-count data for a domain with N positions is carried around in its
tallied form: a sparse map from count value j to the number of positions
n_j that show exactly j mutations. The raw per-position vector and the
histogram are equivalent; real data is heavily tied (few distinct counts,
many positions), so the sparse form is the canonical one.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import InputError

# Count values above this are treated as corrupt input rather than data.
MAX_COUNT = 10**6


@dataclass(frozen=True)
class CountHistogram:
    """Sparse histogram of mutation counts over positions.

    Attributes
    ----------
    counts : dict
        Maps count value j to n_j >= 1. Absent keys mean n_j = 0.
    N : int
        Total number of positions, sum of all n_j.
    K : int
        Largest observed count value (n_K >= 1).
    """

    counts: dict[int, int]
    N: int = field(init=False)
    K: int = field(init=False)

    def __post_init__(self):
        if not self.counts:
            raise InputError("no positions")
        for j, n in self.counts.items():
            if j < 0 or n <= 0:
                raise InputError(f"invalid histogram cell ({j}, {n})")
            if j > MAX_COUNT:
                raise InputError(f"count {j} exceeds ceiling {MAX_COUNT}; input treated as corrupt")
        object.__setattr__(self, "N", int(sum(self.counts.values())))
        object.__setattr__(self, "K", int(max(self.counts)))

    @property
    def support(self) -> tuple[int, ...]:
        """Sorted count values with n_j > 0."""
        return tuple(sorted(self.counts))

    def n(self, j: int) -> int:
        """Number of positions with count j (0 off support)."""
        return self.counts.get(int(j), 0)

    def dense(self, upto: int | None = None) -> np.ndarray:
        """n_j as a dense int array over 0..upto (default 0..K)."""
        hi = self.K if upto is None else int(upto)
        out = np.zeros(hi + 1, dtype=np.int64)
        for j, n in self.counts.items():
            if j <= hi:
                out[j] = n
        return out

    def to_positions(self) -> np.ndarray:
        """Expand back to a sorted per-position count vector."""
        return np.repeat(
            np.fromiter(sorted(self.counts), dtype=np.int64),
            [self.counts[j] for j in sorted(self.counts)],
        )


def from_positions(a: Iterable[int]) -> CountHistogram:
    """Tally a per-position count vector into a CountHistogram.

    Parameters
    ----------
    a : iterable of nonnegative int
        Mutation count at each position. Must be non-empty.
    """
    arr = np.asarray(list(a))
    if arr.size == 0:
        raise InputError("no positions")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == np.floor(arr)):
            raise InputError("position counts must be integers")
        arr = arr.astype(np.int64)
    if np.any(arr < 0):
        raise InputError("position counts must be nonnegative")
    return CountHistogram(dict(Counter(int(x) for x in arr)))


def null_mass_split(h: CountHistogram, C: int) -> tuple[int, int]:
    """Split N into the positions at counts <= C and the rest.

    Returns (n, N - n) where n = sum of n_j over j <= C.
    """
    if C < 0 or C > h.K:
        raise ValueError("cut-off beyond support")
    n = sum(v for j, v in h.counts.items() if j <= C)
    return n, h.N - n


def read_counts_tsv(path) -> CountHistogram:
    """Read a histogram from a TSV file, auto-detecting the schema.

    Two schemas are accepted, distinguished by the header row:

    * ``position<TAB>count`` -- one row per position; the position column
      is carried for readability only and is otherwise ignored.
    * ``count<TAB>n_positions`` -- one row per unique count value.

    Lines starting with ``#`` and blank lines are skipped. UTF-8 only.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise InputError(f"{path} is not UTF-8 text") from exc

    rows = [ln for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise InputError(f"{path}: no data rows")

    header = [c.strip().lower() for c in rows[0].split("\t")]
    body = rows[1:]
    if header == ["position", "count"]:
        return _parse_position_rows(body, path)
    if header == ["count", "n_positions"]:
        return _parse_tally_rows(body, path)
    raise InputError(
        f"{path}: unrecognized header {rows[0]!r}; expected "
        "'position<TAB>count' or 'count<TAB>n_positions'"
    )


def _split_int_row(line: str, path, ncols: int = 2) -> list[int]:
    parts = line.split("\t")
    if len(parts) != ncols:
        raise InputError(f"{path}: expected {ncols} tab-separated fields, got {line!r}")
    try:
        return [int(p) for p in parts]
    except ValueError as exc:
        raise InputError(f"{path}: non-integer field in {line!r}") from exc


def _parse_position_rows(body, path) -> CountHistogram:
    counts: Counter[int] = Counter()
    for line in body:
        _, c = _split_int_row(line, path)
        if c < 0:
            raise InputError(f"{path}: negative count {c}")
        if c > MAX_COUNT:
            raise InputError(f"{path}: count {c} exceeds ceiling {MAX_COUNT}")
        counts[c] += 1
    if not counts:
        raise InputError(f"{path}: no positions")
    return CountHistogram(dict(counts))


def _parse_tally_rows(body, path) -> CountHistogram:
    counts: dict[int, int] = {}
    for line in body:
        j, n = _split_int_row(line, path)
        if j < 0:
            raise InputError(f"{path}: negative count value {j}")
        if j > MAX_COUNT:
            raise InputError(f"{path}: count {j} exceeds ceiling {MAX_COUNT}")
        if n <= 0:
            raise InputError(f"{path}: n_positions must be positive, got {n}")
        if j in counts:
            raise InputError(f"{path}: duplicate row for count {j}")
        counts[j] = n
    if not counts:
        raise InputError(f"{path}: no positions")
    return CountHistogram(counts)


def write_counts_tsv(h: CountHistogram, path) -> None:
    """Write a histogram in the ``count<TAB>n_positions`` schema."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("count\tn_positions\n")
        for j in sorted(h.counts):
            fh.write(f"{j}\t{h.counts[j]}\n")
