"""Seeded synthetic data: known-answer samplers and ledger fabrication.

Everything here is driven by numpy's PCG64 through ``SeedSequence`` spawn
keys, so any (parameters, seed) pair reproduces bit-identically and each
generated stream is independent of the others.  The ledger fabricator emits
a delimited transfer file plus a JSON sidecar holding the ground truth the
generator intended (per-cell censuses, sender profiles, hourly counts);
re-ingesting the file must reproduce the sidecar exactly, which is what the
round-trip tests check.
"""
from __future__ import annotations

import csv
import gzip
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .hurwitz import hurwitz_zeta
from .model import CATEGORIES, Category, PeriodPartition, category_flags

_SHUFFLE_STREAM = 0xF00D


class ScenarioError(ValueError):
    """Scenario failed validation; message lists every problem found."""


def substream(seed: int, *path: int) -> np.random.Generator:
    """Independent PCG64 stream for (master seed, derivation path)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.default_rng(ss)


def sample_discrete_power_law(n: int, gamma: float, x_min: int,
                              rng: np.random.Generator) -> np.ndarray:
    """Draw n integers from p(x) = x^(-gamma) / zeta(gamma, x_min), x >= x_min.

    Exact inverse-CDF sampling: each uniform u maps to the smallest x with
    CDF(x) >= u, where CDF(x) = 1 - zeta(gamma, x+1) / zeta(gamma, x_min).
    The bulk resolves against a precomputed CDF table; draws beyond the
    table fall back to doubling-then-bisection on the same CDF, vectorized
    over the stragglers.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if x_min < 1:
        raise ValueError("x_min must be >= 1")
    norm = hurwitz_zeta(gamma, float(x_min))

    def cdf(x_arr):
        return 1.0 - hurwitz_zeta(gamma, np.asarray(x_arr, dtype=float) + 1.0) / norm

    table_size = 1 << 16
    table_cdf = cdf(x_min + np.arange(table_size))
    u = rng.random(n)
    idx = np.searchsorted(table_cdf, u, side="left")
    out = np.empty(n, dtype=np.int64)
    in_table = idx < table_size
    out[in_table] = x_min + idx[in_table]

    rest = np.flatnonzero(~in_table)
    if rest.size:
        ur = u[rest]
        lo = np.full(rest.size, x_min + table_size - 1, dtype=np.int64)  # cdf(lo) < u
        hi = lo * 2
        while True:
            need = cdf(hi) < ur
            if not need.any():
                break
            if np.any(hi[need] > (1 << 61)):
                raise OverflowError("power-law quantile exceeds int64 range; "
                                    "gamma is too close to 1 for exact sampling")
            lo[need] = hi[need]
            hi[need] *= 2
        while np.any(hi - lo > 1):
            mid = (lo + hi) // 2
            ge = cdf(mid) >= ur
            hi[ge] = mid[ge]
            lo[~ge] = mid[~ge]
        out[rest] = hi
    return out


def sample_discrete_exponential(n: int, lam: float, x_min: int,
                                rng: np.random.Generator) -> np.ndarray:
    """Draw from pmf (1 - e^(-lam)) e^(-lam (x - x_min)), x >= x_min."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    # shifted geometric; numpy's geometric is the exact inverse-CDF draw
    return x_min - 1 + rng.geometric(-math.expm1(-lam), size=n).astype(np.int64)


def gen_poisson_accounts(rates, n_hours: int, rng: np.random.Generator) -> np.ndarray:
    """Independent hourly Poisson counts, one row per account rate."""
    rates = np.asarray(rates, dtype=float)
    if np.any(rates < 0):
        raise ValueError("rates must be non-negative")
    return rng.poisson(lam=rates[:, None], size=(rates.size, n_hours))

def gen_common_mode_accounts(rates, n_hours: int, c: float,
                             rng: np.random.Generator) -> np.ndarray:
    """Poisson counts modulated by a shared hourly factor.

    The factor f_t is gamma-distributed with mean 1 and variance c, so each
    account's marginal hourly count has mean mu and variance mu + c mu^2:
    tuning c slides the fluctuation-scaling exponent from 1 toward 2.
    c = 0 reduces exactly to :func:`gen_poisson_accounts`.
    """
    rates = np.asarray(rates, dtype=float)
    if c < 0:
        raise ValueError("c must be >= 0")
    if c == 0.0:
        return gen_poisson_accounts(rates, n_hours, rng)
    factors = rng.gamma(shape=1.0 / c, scale=c, size=n_hours)
    return rng.poisson(lam=rates[:, None] * factors[None, :])


def gen_random_walk(n_steps: int, rng: np.random.Generator, *, start: float = 0.0,
                    step_sd: float = 1.0, integer_counts: bool = False) -> np.ndarray:
    """Gaussian random walk; optionally rounded and floored at zero."""
    walk = start + np.cumsum(rng.normal(0.0, step_sd, size=n_steps))
    if integer_counts:
        return np.maximum(np.rint(walk), 0.0).astype(np.int64)
    return walk


# ---------------------------------------------------------------------------
# ledger fabrication


_STYLES = ("uniform", "pair_grid", "powerlaw_tail", "poisson_rates")


@dataclass(frozen=True)
class CategoryBlock:
    """Row-generation recipe for one interaction category."""

    style: str
    rows_per_period: tuple[int, ...] = ()          # uniform
    n_senders: int = 0
    n_receivers: int = 1
    v_multiplier: int = 7                          # pair_grid: V = multiplier * N
    n_values: tuple[int, ...] = ()                 # pair_grid: distinct receiver counts
    senders_per_value: int = 1
    gamma: float = 2.5                             # powerlaw_tail
    x_min: int = 1
    n_accounts: int = 0                            # poisson_rates
    rate_min: float = 1.0
    rate_max: float = 1.0
    common_mode_c: float = 0.0


@dataclass(frozen=True)
class ScenarioSpec:
    """Full fabrication recipe: time layout plus one block per category."""

    start_ts: int
    k_periods: int
    period_seconds: int
    blocks: dict[Category, CategoryBlock] = field(default_factory=dict)

    def __post_init__(self) -> None:
        problems = []
        if self.k_periods < 1:
            problems.append("k_periods must be >= 1")
        if self.period_seconds < 1:
            problems.append("period_seconds must be >= 1")
        if self.start_ts < 0:
            problems.append("start_ts must be >= 0")
        if not self.blocks:
            problems.append("at least one category block is required")
        for cat, block in self.blocks.items():
            tag = f"{cat.value}: "
            if block.style not in _STYLES:
                problems.append(tag + f"unknown style {block.style!r}")
                continue
            if block.style == "uniform":
                if len(block.rows_per_period) not in (1, self.k_periods):
                    problems.append(tag + "rows_per_period must list 1 or k_periods quotas")
                if any(r < 0 for r in block.rows_per_period):
                    problems.append(tag + "row quotas must be >= 0")
                if block.n_senders < 1 or block.n_receivers < 1:
                    problems.append(tag + "uniform style needs sender and receiver pools")
            elif block.style == "pair_grid":
                if not block.n_values or any(v < 1 for v in block.n_values):
                    problems.append(tag + "n_values must be positive receiver counts")
                if block.v_multiplier < 1 or block.senders_per_value < 1:
                    problems.append(tag + "v_multiplier and senders_per_value must be >= 1")
            elif block.style == "powerlaw_tail":
                if block.n_senders < 1:
                    problems.append(tag + "powerlaw_tail needs n_senders >= 1")
                if not block.gamma > 1.0:
                    problems.append(tag + "gamma must exceed 1")
                if block.x_min < 1:
                    problems.append(tag + "x_min must be >= 1")
                if block.n_receivers < 1:
                    problems.append(tag + "n_receivers must be >= 1")
            elif block.style == "poisson_rates":
                if block.n_accounts < 1:
                    problems.append(tag + "poisson_rates needs n_accounts >= 1")
                if not 0.0 < block.rate_min <= block.rate_max:
                    problems.append(tag + "need 0 < rate_min <= rate_max")
                if block.common_mode_c < 0:
                    problems.append(tag + "common_mode_c must be >= 0")
                if block.n_receivers < 1:
                    problems.append(tag + "n_receivers must be >= 1")
                if self.period_seconds % 3600 != 0:
                    problems.append(tag + "poisson_rates needs period_seconds divisible by 3600")
        if problems:
            raise ScenarioError("; ".join(problems))

    @property
    def partition(self) -> PeriodPartition:
        end = self.start_ts + self.k_periods * self.period_seconds
        return PeriodPartition.equal_spans(self.start_ts, end, self.k_periods)

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioSpec":
        try:
            cats = raw["categories"]
        except KeyError as exc:
            raise ScenarioError("scenario is missing the 'categories' table") from exc
        blocks: dict[Category, CategoryBlock] = {}
        for name, params in cats.items():
            try:
                cat = Category(name)
            except ValueError as exc:
                raise ScenarioError(f"unknown category {name!r}") from exc
            params = dict(params)
            for key in ("rows_per_period", "n_values"):
                if key in params:
                    val = params[key]
                    params[key] = tuple(val) if isinstance(val, (list, tuple)) else (val,)
            try:
                blocks[cat] = CategoryBlock(**params)
            except TypeError as exc:
                raise ScenarioError(f"{name}: {exc}") from exc
        try:
            return cls(start_ts=int(raw.get("start_ts", 0)),
                       k_periods=int(raw.get("k_periods", 3)),
                       period_seconds=int(raw.get("period_seconds", 7 * 24 * 3600)),
                       blocks=blocks)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(str(exc)) from exc


def _account_pool(cat: Category, role: str, is_contract: bool, size: int) -> list[str]:
    kind = "sc" if is_contract else "eoa"
    return [f"{cat.value.lower()}_{role}_{kind}{i:05d}" for i in range(size)]


def _gen_block_rows(cat: Category, block: CategoryBlock, part: PeriodPartition,
                    seed: int, cat_idx: int, truth: dict) -> list[tuple]:
    send_flag, recv_flag = category_flags(cat)
    rows: list[tuple] = []
    census = truth["census"].setdefault(cat.value, {})
    for period in range(1, part.k + 1):
        p_start, p_end = part.period_span(period)
        rng = substream(seed, cat_idx, period)
        emitted = 0
        if block.style == "uniform":
            quota = (block.rows_per_period[0] if len(block.rows_per_period) == 1
                     else block.rows_per_period[period - 1])
            senders = _account_pool(cat, "s", send_flag, block.n_senders)
            receivers = _account_pool(cat, "r", recv_flag, block.n_receivers)
            s_idx = rng.integers(0, len(senders), size=quota)
            r_idx = rng.integers(0, len(receivers), size=quota)
            ts = rng.integers(p_start, p_end, size=quota)
            for a, b, t in zip(s_idx, r_idx, ts):
                rows.append((senders[a], receivers[b], send_flag, recv_flag, int(t)))
            emitted = quota
        elif block.style == "pair_grid":
            receivers = _account_pool(cat, "r", recv_flag, max(block.n_values))
            profiles = truth["profiles"].setdefault(cat.value, {}).setdefault(str(period), {})
            for vi, n_val in enumerate(block.n_values):
                for si in range(block.senders_per_value):
                    sender = f"{cat.value.lower()}_s_grid{vi:03d}_{si:03d}"
                    v_total = block.v_multiplier * n_val
                    ts = rng.integers(p_start, p_end, size=v_total)
                    k = 0
                    for r in receivers[:n_val]:
                        for _ in range(block.v_multiplier):
                            rows.append((sender, r, send_flag, recv_flag, int(ts[k])))
                            k += 1
                    profiles[sender] = [v_total, n_val]
                    emitted += v_total
        elif block.style == "powerlaw_tail":
            receivers = _account_pool(cat, "r", recv_flag, block.n_receivers)
            profiles = truth["profiles"].setdefault(cat.value, {}).setdefault(str(period), {})
            degrees = sample_discrete_power_law(block.n_senders, block.gamma,
                                                block.x_min, rng)
            for si, v_total in enumerate(degrees):
                sender = f"{cat.value.lower()}_s_pl{si:05d}"
                v_total = int(v_total)
                r_idx = rng.integers(0, len(receivers), size=v_total)
                ts = rng.integers(p_start, p_end, size=v_total)
                for ri, t in zip(r_idx, ts):
                    rows.append((sender, receivers[ri], send_flag, recv_flag, int(t)))
                profiles[sender] = [v_total, int(np.unique(r_idx).size)]
                emitted += v_total
        elif block.style == "poisson_rates":
            receivers = _account_pool(cat, "r", recv_flag, block.n_receivers)
            n_hours = part.hour_count(period)
            rates = np.exp(rng.uniform(math.log(block.rate_min),
                                       math.log(block.rate_max), size=block.n_accounts))
            counts = gen_common_mode_accounts(rates, n_hours, block.common_mode_c, rng)
            hourly = truth["hourly_sender"].setdefault(cat.value, {}).setdefault(str(period), {})
            for ai in range(block.n_accounts):
                sender = f"{cat.value.lower()}_s_poi{ai:05d}"
                hourly[sender] = counts[ai].tolist()
                for h in range(n_hours):
                    c = int(counts[ai, h])
                    if c == 0:
                        continue
                    hour_start = p_start + h * 3600
                    offs = rng.integers(0, min(3600, p_end - hour_start), size=c)
                    r_idx = rng.integers(0, len(receivers), size=c)
                    for off, ri in zip(offs, r_idx):
                        rows.append((sender, receivers[ri], send_flag, recv_flag,
                                     int(hour_start + off)))
                    emitted += c
        census[str(period)] = census.get(str(period), 0) + emitted
    return rows


def fabricate_ledger(scenario: ScenarioSpec, seed: int, ledger_path: str | Path,
                     sidecar_path: str | Path | None = None) -> dict:
    """Write a shuffled delimited ledger plus its ground-truth sidecar.

    Returns the sidecar dict.  ``ledger_path`` ending in ``.gz`` gets gzip
    compression.  The sidecar records the generator's intent: per-cell row
    censuses for every block, (V, N) sender profiles for the pair_grid and
    powerlaw_tail styles, hourly sender counts for poisson_rates.
    """
    part = scenario.partition
    truth: dict = {
        "schema_version": 1,
        "seed": int(seed),
        "boundaries": list(part.boundaries),
        "census": {},
        "profiles": {},
        "hourly_sender": {},
    }
    rows: list[tuple] = []
    for cat_idx, cat in enumerate(CATEGORIES):
        block = scenario.blocks.get(cat)
        if block is None:
            continue
        rows.extend(_gen_block_rows(cat, block, part, seed, cat_idx, truth))
    for cat in CATEGORIES:
        cat_census = truth["census"].setdefault(cat.value, {})
        for period in range(1, part.k + 1):
            cat_census.setdefault(str(period), 0)
    truth["row_count"] = len(rows)

    order = np.arange(len(rows))
    substream(seed, _SHUFFLE_STREAM).shuffle(order)

    ledger_path = Path(ledger_path)
    opener = gzip.open if ledger_path.suffix == ".gz" else open
    with opener(ledger_path, "wt", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["from", "to", "fromIsContract", "toIsContract", "timestamp"])
        for i in order:
            s, r, sf, rf, ts = rows[i]
            writer.writerow([s, r, int(sf), int(rf), ts])

    if sidecar_path is not None:
        Path(sidecar_path).write_text(json.dumps(truth, indent=2) + "\n", encoding="utf-8")
    return truth


__all__ = [
    "substream",
    "sample_discrete_power_law",
    "sample_discrete_exponential",
    "gen_poisson_accounts",
    "gen_common_mode_accounts",
    "gen_random_walk",
    "CategoryBlock",
    "ScenarioSpec",
    "ScenarioError",
    "fabricate_ledger",
]
