"""Reduced mutual information between partitions.

The mutual information is taken in its exact counting form,

    I = (1/n) log[ n! prod_rs n_rs! / (prod_r a_r! prod_s b_s!) ],

and reduced by ``(1/n) log Omega(a, b)``, the log-number of non-negative
integer contingency tables with the observed margins.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from ..model import InputError, Partition

__all__ = ["RmiResult", "contingency_table", "log_omega", "log_omega_approx", "log_omega_exact", "rmi"]

EXACT_MAX_CELLS = 12
EXACT_MAX_N = 200


def _bounded_compositions(total: int, caps: tuple[int, ...]) -> int:
    """Number of ways to write ``total`` as ordered parts with part s in [0, caps[s]]."""
    S = len(caps)
    count = 0
    for k in range(S + 1):
        for subset in itertools.combinations(caps, k):
            rem = total - sum(c + 1 for c in subset)
            if rem >= 0:
                count += (-1) ** k * math.comb(rem + S - 1, S - 1)
    return count


def _compositions(total: int, caps: tuple[int, ...]):
    if len(caps) == 1:
        if total <= caps[0]:
            yield (total,)
        return
    rest = sum(caps[1:])
    for x in range(max(0, total - rest), min(total, caps[0]) + 1):
        for tail in _compositions(total - x, caps[1:]):
            yield (x,) + tail


def log_omega_exact(rows, cols) -> float:
    """Exact log count by recursion over the rows of the shorter side."""
    rows = [int(x) for x in rows if x > 0]
    cols = [int(x) for x in cols if x > 0]
    if sum(rows) != sum(cols):
        raise InputError("row and column margins must have the same total")
    if len(rows) > len(cols):
        rows, cols = cols, rows
    if len(rows) <= 1:
        return 0.0
    rows_t = tuple(rows)

    @lru_cache(maxsize=None)
    def count(i: int, remaining: tuple[int, ...]) -> int:
        if i == len(rows_t) - 2:
            return _bounded_compositions(rows_t[i], remaining)
        total = 0
        for x in _compositions(rows_t[i], remaining):
            total += count(i + 1, tuple(sorted(c - y for c, y in zip(remaining, x))))
        return total

    return math.log(count(0, tuple(sorted(cols))))


def _log_omega_one_side(a: np.ndarray, b: np.ndarray) -> float:
    n = a.sum()
    R, S = len(a), len(b)
    w = n / (n + 0.5 * R * S)
    x = (1 - w) / R + w * a / n
    y = (1 - w) / S + w * b / n
    k = (R + 1) / (R * np.sum(y**2)) - 1 / R
    return float((R - 1) * (S - 1) * np.log(n + 0.5 * R * S) + (R - 1) * np.log(y).sum()
                 + (k - 1) * np.log(x).sum() + gammaln(k * R) - R * gammaln(k) - S * gammaln(R))


def log_omega_approx(rows, cols) -> float:
    """Diaconis-Efron estimate, averaged over the two orientations of the table."""
    a = np.asarray([x for x in rows if x > 0], dtype=float)
    b = np.asarray([x for x in cols if x > 0], dtype=float)
    if a.sum() != b.sum():
        raise InputError("row and column margins must have the same total")
    if len(a) <= 1 or len(b) <= 1:
        return 0.0
    return 0.5 * (_log_omega_one_side(a, b) + _log_omega_one_side(b, a))


def log_omega(rows, cols) -> float:
    """Log number of contingency tables with the given margins.

    Exact for tables with at most 12 non-empty cells and ``n <= 200``,
    the Diaconis-Efron estimate otherwise.
    """
    rows = [int(x) for x in rows]
    cols = [int(x) for x in cols]
    if any(x < 0 for x in rows + cols):
        raise InputError("margins must be non-negative")
    if sum(rows) != sum(cols):
        raise InputError("row and column margins must have the same total")
    r = sum(1 for x in rows if x > 0)
    c = sum(1 for x in cols if x > 0)
    if r <= 1 or c <= 1:
        return 0.0
    if r * c <= EXACT_MAX_CELLS and sum(rows) <= EXACT_MAX_N:
        return log_omega_exact(rows, cols)
    return log_omega_approx(rows, cols)


def contingency_table(p1, p2) -> np.ndarray:
    a = _labels(p1)
    b = _labels(p2)
    if len(a) != len(b):
        raise InputError("partitions cover different numbers of vertices")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    return table


def _labels(p):
    if isinstance(p, Partition):
        return p.assignment
    return np.asarray(p)


def _raw(table: np.ndarray) -> float:
    n = int(table.sum())
    a, b = table.sum(axis=1), table.sum(axis=0)
    mi = (gammaln(n + 1) + gammaln(table + 1).sum() - gammaln(a + 1).sum() - gammaln(b + 1).sum())
    return float((mi - log_omega(a, b)) / n)


@dataclass(frozen=True)
class RmiResult:
    raw: float
    normalized: float


def rmi(p1, p2, normalize: bool = True) -> RmiResult:
    """Reduced mutual information (nats per vertex) and its normalized form.

    The normalized value divides by the mean of the two self-informations;
    when both vanish (one-block or all-singleton partitions) it is 1 for
    identical partitions and 0 otherwise.
    """
    if isinstance(p1, Partition) and isinstance(p2, Partition):
        if p1.vertices is not None and p2.vertices is not None and p1.vertices != p2.vertices:
            raise InputError("partitions are over different vertex sets")
    table = contingency_table(p1, p2)
    raw = _raw(table)
    if not normalize:
        return RmiResult(raw, math.nan)
    d1 = _raw(contingency_table(p1, p1))
    d2 = _raw(contingency_table(p2, p2))
    denom = 0.5 * (d1 + d2)
    if denom <= 1e-12:
        identical = (table > 0).sum() == table.shape[0] == table.shape[1]
        return RmiResult(raw, 1.0 if identical else 0.0)
    return RmiResult(raw, raw / denom)
