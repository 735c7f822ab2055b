"""Binomial p.m.f./c.d.f. with an extended domain, and the incremental row table.

``f(x; n, p)`` is defined as 0 and ``F(x; n, p)`` as 1 whenever ``x > n``.
The streaming estimators never evaluate the p.m.f. from scratch; they grow a
:class:`BinomialTable` one trial count at a time with the multiplicative
recurrence ``f(l; n, p) = f(l; n-1, p) * n / (n - l) * (1 - p)``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import stats


_EXACT_INT = 2**53
_SMALL_N = 1000


def _check_prob(p: float) -> None:
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise ValueError(f"success probability must lie in [0, 1], got {p!r}")


def _check_count(name: str, value: int) -> None:
    if value < 0 or int(value) != value:
        raise ValueError(f"{name} must be a non-negative integer, got {value!r}")


def binom_pmf(x: int, n: int, p: float) -> float:
    """Probability of exactly ``x`` successes in ``n`` trials; 0 when ``x > n``."""
    _check_prob(p)
    _check_count("x", x)
    _check_count("n", n)
    if x > n:
        return 0.0
    # comb of a large n is a slow bignum; only small n can fit 53 bits anyway
    coef = math.comb(n, x) if n <= _SMALL_N else _EXACT_INT
    if coef < _EXACT_INT:
        # few roundings, and exact on dyadic cases such as f(1; 2, 0.5)
        return coef * p**x * (1.0 - p) ** (n - x)
    return float(stats.binom.pmf(x, n, p))


def binom_cdf(x: int, n: int, p: float) -> float:
    """``P(X <= x)`` for ``X ~ Binomial(n, p)``; exactly 1 when ``x >= n``."""
    _check_prob(p)
    _check_count("x", x)
    _check_count("n", n)
    if x >= n:
        return 1.0
    return min(float(stats.binom.cdf(x, n, p)), 1.0)


def pmf_matrix(ns, max_x: int, p: float) -> np.ndarray:
    """Vectorised p.m.f.: ``out[r, l] = f(l; ns[r], p)`` for ``l = 0..max_x``."""
    _check_prob(p)
    ns = np.asarray(ns, dtype=np.int64).reshape(-1, 1)
    if np.any(ns < 0):
        raise ValueError("trial counts must be non-negative")
    xs = np.arange(max_x + 1, dtype=np.int64).reshape(1, -1)
    # scipy already returns 0 for x > n
    return stats.binom.pmf(xs, ns, p)


class BinomialTable:
    """Cache of p.m.f. prefixes ``[f(0;n,p), ..., f(cap;n,p)]`` for n = 0, 1, 2, ...

    Rows are appended strictly in order of ``n`` and never evicted, so memory
    is ``O(cap * max_n)``.  Row 0 is ``[1, 0, ..., 0]``.
    """

    def __init__(self, success_prob: float, cap: int, capacity: int = 64):
        _check_prob(success_prob)
        if cap < 0 or int(cap) != cap:
            raise ValueError(f"cap must be a non-negative integer, got {cap!r}")
        self.success_prob = float(success_prob)
        self.cap = int(cap)
        self._q = 1.0 - self.success_prob
        self._rows = np.zeros((max(capacity, 1), self.cap + 1))
        self._rows[0, 0] = 1.0
        self._n_rows = 1
        # seeds f(l; l, p) = p**l for the diagonal
        self._diag = self.success_prob ** np.arange(self.cap + 1)
        # multiplier n / (n - l) reuses these column indices
        self._cols = np.arange(self.cap + 1, dtype=float)

    @property
    def max_n(self) -> int:
        """Largest trial count with a stored row."""
        return self._n_rows - 1

    def __len__(self) -> int:
        return self._n_rows

    def __contains__(self, n: int) -> bool:
        return 0 <= n < self._n_rows

    def row(self, n: int) -> np.ndarray:
        """Read-only view of the row for ``n`` trials, extending if needed."""
        if n >= self._n_rows:
            self.ensure(n)
        view = self._rows[n]
        view.flags.writeable = False
        return view

    def rows(self, ns) -> np.ndarray:
        """Stack of rows for an integer array of trial counts."""
        ns = np.asarray(ns, dtype=np.int64)
        if ns.size and ns.max() >= self._n_rows:
            self.ensure(int(ns.max()))
        return self._rows[ns]

    def ensure(self, n: int) -> None:
        """Extend the table until the row for ``n`` exists."""
        while self._n_rows <= n:
            extend_table(self, self._n_rows)

    def _append(self, new_n: int) -> None:
        if new_n != self._n_rows:
            raise RuntimeError(
                f"cannot build row {new_n}: rows exist only up to {self._n_rows - 1}"
            )
        if new_n >= self._rows.shape[0]:
            grown = np.zeros((2 * self._rows.shape[0], self.cap + 1))
            grown[: self._n_rows] = self._rows[: self._n_rows]
            self._rows = grown
        prev = self._rows[new_n - 1]
        out = self._rows[new_n]
        lim = min(new_n, self.cap + 1)
        # l < n: multiplicative recurrence from the previous row
        out[:lim] = prev[:lim] * new_n / (new_n - self._cols[:lim]) * self._q
        if new_n <= self.cap:
            out[new_n] = self._diag[new_n]
        # entries with l > n stay zero
        self._n_rows += 1


def extend_table(table: BinomialTable, new_n: int) -> BinomialTable:
    """Append the row for ``new_n`` trials to ``table`` (requires row ``new_n - 1``).

    Returns the same table for chaining.  Raises ``RuntimeError`` when the
    previous row is missing; rows that already exist are left untouched.
    """
    if new_n < 0:
        raise ValueError("trial count must be non-negative")
    if new_n in table:
        return table
    table._append(new_n)
    return table
