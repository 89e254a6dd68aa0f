"""Core vocabulary for transfer-ledger analytics.

A transfer row carries two boolean contract flags (sender side, receiver
side).  The flag pair maps onto four interaction categories, and every
downstream statistic is computed per (category, period) cell, usually split
again by the account's role in the row.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum


class Category(str, Enum):
    """Interaction category from the (fromIsContract, toIsContract) pair."""

    EOA_EOA = "EOA_EOA"
    EOA_SC = "EOA_SC"
    SC_EOA = "SC_EOA"
    SC_SC = "SC_SC"


#: Categories in their fixed reporting order.
CATEGORIES: tuple[Category, ...] = (
    Category.EOA_EOA,
    Category.EOA_SC,
    Category.SC_EOA,
    Category.SC_SC,
)

_FLAG_TO_CATEGORY = {
    (False, False): Category.EOA_EOA,
    (False, True): Category.EOA_SC,
    (True, False): Category.SC_EOA,
    (True, True): Category.SC_SC,
}

_CATEGORY_TO_FLAGS = {v: k for k, v in _FLAG_TO_CATEGORY.items()}


class Role(str, Enum):
    SENDER = "sender"
    RECEIVER = "receiver"


ROLES: tuple[Role, ...] = (Role.SENDER, Role.RECEIVER)


@dataclass(frozen=True)
class TransferRecord:
    """One well-formed ledger row.

    ``timestamp`` is a non-negative Unix time in seconds (UTC).
    """

    sender: str
    receiver: str
    sender_is_contract: bool
    receiver_is_contract: bool
    timestamp: int

    def __post_init__(self) -> None:
        if not self.sender or not self.receiver:
            raise ValueError("account identifiers must be non-empty")
        if self.timestamp < 0:
            raise ValueError("timestamp must be >= 0")

    @property
    def category(self) -> Category:
        return classify(self.sender_is_contract, self.receiver_is_contract)


def classify(sender_is_contract: bool, receiver_is_contract: bool) -> Category:
    """Map a flag pair to its interaction category (a bijection)."""
    return _FLAG_TO_CATEGORY[(bool(sender_is_contract), bool(receiver_is_contract))]


def category_flags(category: Category) -> tuple[bool, bool]:
    """Inverse of :func:`classify`."""
    return _CATEGORY_TO_FLAGS[Category(category)]


def to_utc_date(timestamp: int) -> str:
    """Render a Unix timestamp as a UTC calendar date, ``YYYY-MM-DD``."""
    return datetime.fromtimestamp(timestamp, tz=timezone.utc).strftime("%Y-%m-%d")


@dataclass(frozen=True)
class PeriodPartition:
    """Half-open, contiguous partition of a time span into k periods.

    ``boundaries`` has k + 1 strictly increasing entries; period i (1-based)
    covers ``[boundaries[i-1], boundaries[i])``.  Timestamps outside
    ``[boundaries[0], boundaries[-1])`` belong to no period.
    """

    boundaries: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.boundaries) < 2:
            raise ValueError("a partition needs at least 2 boundaries")
        if any(b >= c for b, c in zip(self.boundaries, self.boundaries[1:])):
            raise ValueError("boundaries must be strictly increasing")

    @classmethod
    def equal_spans(cls, start_ts: int, end_ts: int, k: int) -> "PeriodPartition":
        """Split ``[start_ts, end_ts)`` into k near-equal periods.

        Boundary i is ``start + floor(i * span / k)``, so period lengths
        differ by at most one second when k does not divide the span.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        if end_ts <= start_ts:
            raise ValueError("end_ts must exceed start_ts")
        span = end_ts - start_ts
        if span < k:
            raise ValueError(f"span of {span}s cannot hold {k} non-empty periods")
        bounds = tuple(start_ts + (i * span) // k for i in range(k + 1))
        return cls(bounds)

    @classmethod
    def from_observed(cls, min_ts: int, max_ts: int, k: int) -> "PeriodPartition":
        """Partition the observed span ``[min_ts, max_ts + 1)`` into k periods."""
        return cls.equal_spans(min_ts, max_ts + 1, k)

    @property
    def k(self) -> int:
        return len(self.boundaries) - 1

    @property
    def start(self) -> int:
        return self.boundaries[0]

    @property
    def end(self) -> int:
        return self.boundaries[-1]

    def period_of(self, timestamp: int) -> int | None:
        """1-based period index for ``timestamp``, or None if out of span."""
        if timestamp < self.boundaries[0] or timestamp >= self.boundaries[-1]:
            return None
        return bisect.bisect_right(self.boundaries, timestamp)

    def period_span(self, period: int) -> tuple[int, int]:
        """(start, end) of the half-open window for 1-based ``period``."""
        if not 1 <= period <= self.k:
            raise ValueError(f"period must be in [1, {self.k}]")
        return self.boundaries[period - 1], self.boundaries[period]

    def hour_count(self, period: int) -> int:
        """Number of 1-hour bins covering the period (last may be partial)."""
        start, end = self.period_span(period)
        return -((start - end) // 3600)

    def hour_of(self, timestamp: int, period: int) -> int:
        """0-based hour-bin index of ``timestamp`` within ``period``."""
        start, end = self.period_span(period)
        if not start <= timestamp < end:
            raise ValueError("timestamp outside period")
        return (timestamp - start) // 3600


__all__ = [
    "Category",
    "CATEGORIES",
    "Role",
    "ROLES",
    "TransferRecord",
    "classify",
    "category_flags",
    "to_utc_date",
    "PeriodPartition",
]
