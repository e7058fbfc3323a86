"""Activity profiles, burstiness, and group mean comparisons."""

from __future__ import annotations

import enum
import itertools
import math
from collections import defaultdict
from collections.abc import Callable, Collection, Iterable, Mapping, Sequence
from dataclasses import dataclass
from datetime import datetime
from zoneinfo import ZoneInfo

import numpy as np
from scipy import integrate, optimize, special

from .model import Event, InputError, Roster

__all__ = [
    "ActivityProfile",
    "Binning",
    "BurstinessRecord",
    "HsdRow",
    "MeanDifference",
    "account_burstiness",
    "activity_profile",
    "burstiness",
    "burstiness_coefficient",
    "group_mean_difference",
    "studentized_range_cdf",
    "studentized_range_ppf",
    "tukey_hsd",
]

DEFAULT_TZ = "Europe/Helsinki"
DEFAULT_MIN_EVENTS = 10


class Binning(enum.Enum):
    HourOfWeek = 168
    WeekOfYear = 53

    @property
    def n_bins(self) -> int:
        return self.value


@dataclass(frozen=True)
class ActivityProfile:
    binning: Binning
    counts: np.ndarray
    normalized: np.ndarray | None

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def empty(self) -> bool:
        return self.normalized is None


def _bin_of(ts: datetime, binning: Binning, tz: ZoneInfo) -> int:
    local = ts.astimezone(tz)
    if binning is Binning.HourOfWeek:
        return local.weekday() * 24 + local.hour
    return local.isocalendar()[1] - 1


def activity_profile(events: Iterable[Event], group_selector: Collection[str] | Callable | None = None,
                     binning: Binning = Binning.HourOfWeek, tz: str = DEFAULT_TZ) -> ActivityProfile:
    """Pool the events of a group into hour-of-week or week-of-year bins.

    ``group_selector`` is a collection of account ids, a predicate on events,
    or ``None`` for all events. Bins use local time in ``tz`` (bin 0 of the
    hour-of-week profile is Monday 00:00). With no events the normalized
    profile is ``None``.
    """
    zone = ZoneInfo(tz)
    if group_selector is None:
        keep = lambda ev: True  # noqa: E731
    elif callable(group_selector):
        keep = group_selector
    else:
        members = set(group_selector)
        keep = lambda ev: ev.account_id in members  # noqa: E731
    counts = np.zeros(binning.n_bins, dtype=np.int64)
    for ev in events:
        if keep(ev):
            counts[_bin_of(ev.timestamp, binning, zone)] += 1
    total = counts.sum()
    normalized = counts / total if total > 0 else None
    return ActivityProfile(binning, counts, normalized)


@dataclass(frozen=True)
class BurstinessRecord:
    account_id: str
    n_events: int
    mean_gap: float
    sd_gap: float
    B: float


def burstiness_coefficient(gaps) -> float:
    """(sd - mean) / (sd + mean) of inter-event gaps, population sd.

    Returns nan when every gap is zero.
    """
    g = np.asarray(gaps, dtype=float)
    if g.size == 0:
        raise InputError("need at least one gap")
    if np.any(g < 0):
        raise InputError("gaps must be non-negative")
    mu = g.mean()
    sigma = g.std()
    if sigma + mu == 0:
        return math.nan
    return float((sigma - mu) / (sigma + mu))


def burstiness(event_times, account_id: str = "", min_events: int = DEFAULT_MIN_EVENTS) -> BurstinessRecord | None:
    """Burstiness record for one account, or ``None`` below ``min_events``.

    ``event_times`` are datetimes or seconds, ascending.
    """
    times = [t.timestamp() if isinstance(t, datetime) else float(t) for t in event_times]
    if len(times) < max(min_events, 2):
        return None
    gaps = np.diff(np.asarray(times, dtype=float))
    if np.any(gaps < 0):
        raise InputError("event times must be ascending")
    b = burstiness_coefficient(gaps)
    if math.isnan(b):
        return None
    return BurstinessRecord(account_id, len(times), float(gaps.mean()), float(gaps.std()), b)


def account_burstiness(events: Iterable[Event], accounts: Collection[str] | None = None,
                       min_events: int = DEFAULT_MIN_EVENTS) -> list[BurstinessRecord]:
    """Per-account burstiness over all event kinds, in sorted account order."""
    by_account = defaultdict(list)
    wanted = None if accounts is None else set(accounts)
    for ev in events:
        if wanted is None or ev.account_id in wanted:
            by_account[ev.account_id].append(ev.timestamp.timestamp())
    out = []
    for acc in sorted(by_account):
        rec = burstiness(sorted(by_account[acc]), acc, min_events)
        if rec is not None:
            out.append(rec)
    return out


# --- studentized range distribution -------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(160)
_Z_LO, _Z_HI = -9.0, 9.0
_Z = 0.5 * (_Z_HI - _Z_LO) * _GL_NODES + 0.5 * (_Z_HI + _Z_LO)
_ZW = 0.5 * (_Z_HI - _Z_LO) * _GL_WEIGHTS * np.exp(-0.5 * _Z**2) / math.sqrt(2 * math.pi)
_PHI_Z = special.ndtr(_Z)


def _range_cdf_normal(w, k: int):
    """P(range of k iid standard normals < w), vectorized over ``w``."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    inner = np.clip(_PHI_Z[None, :] - special.ndtr(_Z[None, :] - w[:, None]), 0.0, 1.0)
    return np.clip(k * (inner ** (k - 1)) @ _ZW, 0.0, 1.0)


def studentized_range_cdf(q: float, k: int, df: float) -> float:
    """CDF of the studentized range for ``k`` means and ``df`` degrees of freedom.

    The range distribution of normals is integrated against the density of
    ``s = sqrt(chi2_df / df)``.
    """
    if k < 2:
        raise InputError("studentized range needs k >= 2")
    if q <= 0:
        return 0.0
    if not np.isfinite(df) or df > 1e5:
        return float(_range_cdf_normal(q, k)[0])
    half = 0.5 * df
    log_norm = half * math.log(df) - (half - 1) * math.log(2) - special.gammaln(half)

    def integrand(s):
        if s <= 0:
            return 0.0
        log_f = log_norm + (df - 1) * math.log(s) - half * s * s
        return math.exp(log_f) * _range_cdf_normal(q * s, k)[0]

    spread = 10.0 / math.sqrt(df)
    hi = 1.0 + max(spread, 10.0 if df < 4 else spread)
    lo = max(0.0, 1.0 - spread)
    opts = dict(epsabs=1e-13, epsrel=1e-12, limit=200)
    total = integrate.quad(integrand, lo, 1.0, **opts)[0] + integrate.quad(integrand, 1.0, hi, **opts)[0]
    if lo > 0:
        total += integrate.quad(integrand, 0.0, lo, **opts)[0]
    total += integrate.quad(integrand, hi, np.inf, **opts)[0]
    return float(min(max(total, 0.0), 1.0))


def studentized_range_ppf(p: float, k: int, df: float, xtol: float = 1e-9) -> float:
    if not 0 < p < 1:
        raise InputError("probability must lie in (0, 1)")
    hi = 10.0
    while studentized_range_cdf(hi, k, df) < p:
        hi *= 2
    return optimize.brentq(lambda q: studentized_range_cdf(q, k, df) - p, 1e-8, hi, xtol=xtol)


@dataclass(frozen=True)
class HsdRow:
    group1: str
    group2: str
    mean_diff: float
    ci_low: float
    ci_high: float
    p_adj: float


def tukey_hsd(groups: Mapping[str, Sequence[float]], confidence: float = 0.95) -> list[HsdRow]:
    """Pairwise Tukey-Kramer comparisons, one row per unordered pair.

    ``mean_diff`` is mean(group1) - mean(group2) with pairs in insertion
    order of ``groups``.
    """
    if len(groups) < 2:
        raise InputError("need at least two groups")
    data = {}
    for name, values in groups.items():
        arr = np.asarray(values, dtype=float)
        if arr.size < 2:
            raise InputError(f"group {name!r} has fewer than 2 values")
        data[name] = arr
    k = len(data)
    n_total = sum(a.size for a in data.values())
    df = n_total - k
    mse = sum(((a - a.mean()) ** 2).sum() for a in data.values()) / df
    q_crit = studentized_range_ppf(confidence, k, df)
    rows = []
    for (g1, a), (g2, b) in itertools.combinations(data.items(), 2):
        diff = a.mean() - b.mean()
        se = math.sqrt(0.5 * mse * (1.0 / a.size + 1.0 / b.size))
        if se > 0:
            p = 1.0 - studentized_range_cdf(abs(diff) / se, k, df)
        else:
            p = 0.0 if diff != 0 else 1.0
        half = q_crit * se
        rows.append(HsdRow(str(g1), str(g2), float(diff), float(diff - half), float(diff + half),
                           float(min(max(p, 0.0), 1.0))))
    return rows


@dataclass(frozen=True)
class MeanDifference:
    diff: float
    ci_low: float
    ci_high: float
    mean_a: float
    n: int


def group_mean_difference(a, b, confidence: float = 0.95) -> MeanDifference:
    """Difference of means with a normal-approximation CI on unpooled variances."""
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.size < 2 or y.size < 2:
        raise InputError("each group needs at least 2 values")
    diff = x.mean() - y.mean()
    se = math.sqrt(x.var(ddof=1) / x.size + y.var(ddof=1) / y.size)
    z = special.ndtri(0.5 + 0.5 * confidence)
    return MeanDifference(float(diff), float(diff - z * se), float(diff + z * se),
                          float(x.mean()), int(x.size + y.size))
