"""Streaming ingestion and the per-cell census.

Sources are delimited UTF-8 text files (optionally gzip-compressed), a
directory of such shards, or a list of either.  Rows are parsed with a
configurable column mapping, classified by the contract-flag pair, and
bucketed into periods.  Everything is a fold with an associative,
commutative merge, so shards can be counted independently and combined.

With an explicit period specification the census is a single streaming
pass.  When the period count has to be split over the observed span, a
cheap span-scan pass runs first, because bucketing needs the boundaries
before the first row can be counted.
"""
from __future__ import annotations

import csv
import gzip
import io
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

from .model import CATEGORIES, Category, PeriodPartition, TransferRecord, classify

DEFAULT_COLUMNS = {
    "sender": "from",
    "receiver": "to",
    "sender_flag": "fromIsContract",
    "receiver_flag": "toIsContract",
    "timestamp": "timestamp",
}

_COLUMN_KEYS = tuple(DEFAULT_COLUMNS)

_FLAG_FORMS = {
    "0": False, "1": True,
    "false": False, "true": True,
    "False": False, "True": True,
    "FALSE": False, "TRUE": True,
}

#: (sender_flag_text, receiver_flag_text) -> Category, covering every accepted
#: textual form; a single dict probe classifies the row or flags it malformed.
_FLAG_PAIR_TO_CATEGORY = {
    (a, b): classify(av, bv)
    for a, av in _FLAG_FORMS.items()
    for b, bv in _FLAG_FORMS.items()
}


class IngestError(ValueError):
    """Dataset-level failure: unusable source, empty span, mismatched shards."""


class ParseError(ValueError):
    """A row (or header) violates the expected shape.

    Carries the source name, 1-based row number, and offending column so
    fail-fast runs point at the exact cell.
    """

    def __init__(self, message: str, *, source: str, row_number: int, column: str):
        super().__init__(f"{source}:{row_number}: column {column!r}: {message}")
        self.source = source
        self.row_number = row_number
        self.column = column


@dataclass(frozen=True)
class IngestOptions:
    """How to read and how strictly to validate."""

    columns: dict = field(default_factory=lambda: dict(DEFAULT_COLUMNS))
    delimiter: str = ","
    has_header: bool = True
    fail_fast: bool = False

    def __post_init__(self) -> None:
        missing = [k for k in _COLUMN_KEYS if k not in self.columns]
        if missing:
            raise ValueError(f"column mapping is missing {missing}")
        if len(self.delimiter) != 1:
            raise ValueError("delimiter must be a single character")
        if not self.has_header:
            bad = [k for k, v in self.columns.items() if not isinstance(v, int)]
            if bad:
                raise ValueError(f"headerless input needs integer positions for {bad}")


def source_paths(source) -> list[Path]:
    """Expand a file, directory, or mixed list into a sorted shard list."""
    if isinstance(source, (str, Path)):
        source = [source]
    paths: list[Path] = []
    for entry in source:
        p = Path(entry)
        if p.is_dir():
            shards = sorted(q for q in p.iterdir() if q.is_file())
            if not shards:
                raise IngestError(f"directory {p} holds no shard files")
            paths.extend(shards)
        elif p.is_file():
            paths.append(p)
        else:
            raise FileNotFoundError(f"no such input: {p}")
    if not paths:
        raise IngestError("no input files given")
    return paths


def _open_text(path: Path) -> io.TextIOBase:
    if path.suffix == ".gz":
        return gzip.open(path, "rt", encoding="utf-8", newline="")
    return open(path, "rt", encoding="utf-8", newline="")


def _resolve_indices(options: IngestOptions, header: list[str] | None,
                     source: str) -> tuple[int, int, int, int, int]:
    """Column positions for (sender, receiver, sender_flag, receiver_flag, ts)."""
    out = []
    for key in _COLUMN_KEYS:
        spec = options.columns[key]
        if isinstance(spec, int):
            out.append(spec)
        elif header is None:
            raise ParseError("named column needs a header row", source=source,
                             row_number=1, column=str(spec))
        else:
            try:
                out.append(header.index(spec))
            except ValueError:
                raise ParseError(f"column {spec!r} not in header {header}",
                                 source=source, row_number=1, column=str(spec)) from None
    return tuple(out)  # type: ignore[return-value]


@dataclass
class RowCounters:
    rows_read: int = 0
    malformed: int = 0


def iter_classified(paths: Sequence[Path], options: IngestOptions,
                    counters: RowCounters) -> Iterator[tuple[str, str, Category, int]]:
    """Yield (sender, receiver, category, timestamp) for each well-formed row.

    Malformed rows either raise :class:`ParseError` (fail-fast) or bump
    ``counters.malformed``.  ``counters.rows_read`` counts data rows seen,
    well-formed or not.
    """
    flag_pairs = _FLAG_PAIR_TO_CATEGORY
    for path in paths:
        name = str(path)
        with _open_text(path) as fh:
            reader = csv.reader(fh, delimiter=options.delimiter)
            header = next(reader, None) if options.has_header else None
            if options.has_header and header is None:
                continue  # empty shard
            idx = _resolve_indices(options, header, name)
            i_s, i_r, i_sf, i_rf, i_ts = idx
            width = max(idx) + 1
            for row in reader:
                counters.rows_read += 1
                if len(row) < width:
                    if options.fail_fast:
                        raise ParseError(f"expected at least {width} fields, got {len(row)}",
                                         source=name, row_number=reader.line_num,
                                         column="<row>")
                    counters.malformed += 1
                    continue
                category = flag_pairs.get((row[i_sf], row[i_rf]))
                sender = row[i_s]
                receiver = row[i_r]
                ts_text = row[i_ts]
                # isascii guard: unicode digit forms satisfy isdigit but not int()
                if (category is None or not sender or not receiver
                        or not (ts_text.isdigit() and ts_text.isascii())):
                    if options.fail_fast:
                        raise _describe_bad_row(row, idx, name, reader.line_num)
                    counters.malformed += 1
                    continue
                yield sender, receiver, category, int(ts_text)


def _describe_bad_row(row: list[str], idx: tuple[int, ...], source: str,
                      row_number: int) -> ParseError:
    i_s, i_r, i_sf, i_rf, i_ts = idx
    if not row[i_s]:
        return ParseError("empty account id", source=source, row_number=row_number,
                          column="sender")
    if not row[i_r]:
        return ParseError("empty account id", source=source, row_number=row_number,
                          column="receiver")
    if row[i_sf] not in _FLAG_FORMS:
        return ParseError(f"bad contract flag {row[i_sf]!r}", source=source,
                          row_number=row_number, column="sender_flag")
    if row[i_rf] not in _FLAG_FORMS:
        return ParseError(f"bad contract flag {row[i_rf]!r}", source=source,
                          row_number=row_number, column="receiver_flag")
    return ParseError(f"bad timestamp {row[i_ts]!r}", source=source,
                      row_number=row_number, column="timestamp")


def parse_record(fields: Sequence[str],
                 positions: Sequence[int] = (0, 1, 2, 3, 4)) -> TransferRecord:
    """Parse one row of text fields into a :class:`TransferRecord`.

    ``positions`` lists the field indices of (sender, receiver, sender_flag,
    receiver_flag, timestamp), defaulting to the standard column order.
    Raises :class:`ParseError` naming the offending column, same as the
    streaming path.
    """
    idx = tuple(positions)
    row = list(fields)
    i_s, i_r, i_sf, i_rf, i_ts = idx
    if len(row) < max(idx) + 1:
        raise ParseError(f"expected at least {max(idx) + 1} fields, got {len(row)}",
                         source="<fields>", row_number=1, column="<row>")
    category = _FLAG_PAIR_TO_CATEGORY.get((row[i_sf], row[i_rf]))
    if (category is None or not row[i_s] or not row[i_r]
            or not (row[i_ts].isdigit() and row[i_ts].isascii())):
        raise _describe_bad_row(row, idx, "<fields>", 1)
    sf, rf = _FLAG_FORMS[row[i_sf]], _FLAG_FORMS[row[i_rf]]
    return TransferRecord(row[i_s], row[i_r], sf, rf, int(row[i_ts]))


@dataclass(frozen=True)
class SpanScan:
    min_ts: int
    max_ts: int
    rows_read: int
    malformed: int


def scan_span(source, options: IngestOptions | None = None) -> SpanScan:
    """One streaming pass recording the observed timestamp span."""
    options = options or IngestOptions()
    counters = RowCounters()
    lo, hi = None, None
    for _, _, _, ts in iter_classified(source_paths(source), options, counters):
        if lo is None or ts < lo:
            lo = ts
        if hi is None or ts > hi:
            hi = ts
    if lo is None:
        raise IngestError("no well-formed rows; cannot derive a time span")
    return SpanScan(min_ts=lo, max_ts=hi, rows_read=counters.rows_read,
                    malformed=counters.malformed)


def resolve_partition(source, periods, options: IngestOptions | None = None) -> PeriodPartition:
    """Turn a period specification into concrete boundaries.

    ``periods`` may be a ready :class:`PeriodPartition`, an explicit
    boundary sequence, or an integer k, in which case the observed span is
    scanned and split into k near-equal pieces.
    """
    if isinstance(periods, PeriodPartition):
        return periods
    if isinstance(periods, int):
        span = scan_span(source, options)
        return PeriodPartition.from_observed(span.min_ts, span.max_ts, periods)
    return PeriodPartition(tuple(int(b) for b in periods))


@dataclass
class DatasetSummary:
    """Census of one or more shards: row counts per (category, period).

    Summaries over the same partition merge by plain addition, so shard
    censuses can be folded in any order with the same result.
    """

    partition: PeriodPartition
    counts: dict = field(default_factory=dict)  # Category -> [count per period]
    rows_read: int = 0
    malformed_rows: int = 0
    out_of_span_rows: int = 0
    min_ts: int | None = None
    max_ts: int | None = None

    def __post_init__(self) -> None:
        for cat in CATEGORIES:
            self.counts.setdefault(cat, [0] * self.partition.k)

    @property
    def total(self) -> int:
        return sum(sum(per) for per in self.counts.values())

    def merge(self, other: "DatasetSummary") -> "DatasetSummary":
        if other.partition.boundaries != self.partition.boundaries:
            raise IngestError("cannot merge censuses over different partitions")
        merged = DatasetSummary(self.partition)
        for cat in CATEGORIES:
            merged.counts[cat] = [a + b for a, b in zip(self.counts[cat], other.counts[cat])]
        merged.rows_read = self.rows_read + other.rows_read
        merged.malformed_rows = self.malformed_rows + other.malformed_rows
        merged.out_of_span_rows = self.out_of_span_rows + other.out_of_span_rows
        lows = [t for t in (self.min_ts, other.min_ts) if t is not None]
        highs = [t for t in (self.max_ts, other.max_ts) if t is not None]
        merged.min_ts = min(lows) if lows else None
        merged.max_ts = max(highs) if highs else None
        return merged

    def to_dict(self) -> dict:
        """JSON-ready form with a fixed key order."""
        return {
            "schema_version": 1,
            "boundaries": list(self.partition.boundaries),
            "census": {
                cat.value: {str(p + 1): self.counts[cat][p] for p in range(self.partition.k)}
                for cat in CATEGORIES
            },
            "total": self.total,
            "rows_read": self.rows_read,
            "malformed_rows": self.malformed_rows,
            "out_of_span_rows": self.out_of_span_rows,
            "time_span": {"min_ts": self.min_ts, "max_ts": self.max_ts},
        }


def ingest_census(source, periods=3, options: IngestOptions | None = None) -> DatasetSummary:
    """Count well-formed rows per (category, period) over the source.

    ``periods`` follows :func:`resolve_partition`; passing an integer costs
    an extra span-scan pass before counting.
    """
    options = options or IngestOptions()
    partition = resolve_partition(source, periods, options)
    paths = source_paths(source)
    summary = DatasetSummary(partition)
    counts = summary.counts
    boundaries = list(partition.boundaries)
    lo_bound, hi_bound = boundaries[0], boundaries[-1]
    counters = RowCounters()
    lo, hi = None, None
    for _, _, category, ts in iter_classified(paths, options, counters):
        if lo is None or ts < lo:
            lo = ts
        if hi is None or ts > hi:
            hi = ts
        if ts < lo_bound or ts >= hi_bound:
            summary.out_of_span_rows += 1
            continue
        counts[category][bisect_right(boundaries, ts) - 1] += 1
    summary.rows_read = counters.rows_read
    summary.malformed_rows = counters.malformed
    summary.min_ts = lo
    summary.max_ts = hi
    return summary


__all__ = [
    "DEFAULT_COLUMNS",
    "IngestOptions",
    "IngestError",
    "ParseError",
    "RowCounters",
    "SpanScan",
    "DatasetSummary",
    "source_paths",
    "iter_classified",
    "parse_record",
    "scan_span",
    "resolve_partition",
    "ingest_census",
]
