"""Minimum-cost rectangular bipartite assignment.

solve() is a Hungarian solver in the potentials / shortest-augmenting-path
formulation, handling rectangular matrices natively. Among cost-tied optima
it returns the row-major lexicographically smallest pair set; ties are
resolved exactly for integer-valued inputs (all arithmetic stays integral).
brute_force_solve() is the independent enumeration oracle with the same
contract.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DataError, InstanceTooLargeError

_INF = float("inf")
# Relative band for treating a reduced cost as zero; exact for integer inputs
# because their reduced costs are themselves integers.
_RC_ATOL = 1e-9


@dataclass(frozen=True)
class CostMatrix:
    """Dense rows x cols matrix of finite costs."""

    values: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(tuple(row) for row in self.values)
        object.__setattr__(self, "values", rows)
        width = len(rows[0]) if rows else 0
        for row in rows:
            if len(row) != width:
                raise DataError("cost matrix rows have unequal lengths")
            for v in row:
                if not math.isfinite(v):
                    raise DataError(f"cost matrix entry is not finite: {v!r}")

    @property
    def rows(self) -> int:
        return len(self.values)

    @property
    def cols(self) -> int:
        return len(self.values[0]) if self.values else 0


@dataclass(frozen=True)
class Assignment:
    """Injective row->col matching of size min(rows, cols)."""

    pairs: tuple[tuple[int, int], ...]
    total_cost: float

    def as_dict(self) -> dict[int, int]:
        return dict(self.pairs)


def _pair_cost(values: Sequence[Sequence[float]], pairs: Sequence[tuple[int, int]]):
    # Fixed summation order (row-major) so solver and oracle agree bitwise.
    return sum(values[r][c] for r, c in pairs)


def _exact_cost(values: Sequence[Sequence[float]], pairs: Sequence[tuple[int, int]]):
    return sum(Fraction(values[r][c]) for r, c in pairs)


def _hungarian(a: Sequence[Sequence[float]], n_rows: int, n_cols: int):
    """Classic potentials formulation; requires n_rows <= n_cols.

    Returns (u, v, col_to_row) with 1-indexed potentials. Integer inputs stay
    integral throughout, so reduced costs are exact for them.
    """
    u = [0] * (n_rows + 1)
    v = [0] * (n_cols + 1)
    p = [0] * (n_cols + 1)  # p[j] = row matched to column j, 0 = free
    way = [0] * (n_cols + 1)
    for i in range(1, n_rows + 1):
        p[0] = i
        j0 = 0
        minv = [_INF] * (n_cols + 1)
        used = [False] * (n_cols + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = _INF
            j1 = 0
            row = a[i0 - 1]
            ui0 = u[i0]
            for j in range(1, n_cols + 1):
                if used[j]:
                    continue
                cur = row[j - 1] - ui0 - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n_cols + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    return u, v, p


def _saturates(adj: list[list[int]], targets: list[int]) -> bool:
    """True when some matching covers every left vertex in `targets`."""
    match_right: dict[int, int] = {}

    def try_augment(left: int, seen: set[int]) -> bool:
        for right in adj[left]:
            if right in seen:
                continue
            seen.add(right)
            if right not in match_right or try_augment(match_right[right], seen):
                match_right[right] = left
                return True
        return False

    for left in targets:
        if not try_augment(left, set()):
            return False
    return True


class _LexRefiner:
    """Picks the lexicographically smallest optimal pair set.

    Works on the admissible graph (zero reduced-cost edges) of an optimal
    dual solution. A matching of size min(R, C) is optimal exactly when it
    uses admissible edges only, saturates the short side, and saturates
    every vertex of the long side whose potential is strictly negative.
    """

    def __init__(self, values, n_rows, n_cols, row_pot, col_pot):
        self.n_rows = n_rows
        self.n_cols = n_cols
        scale = max((abs(v) for row in values for v in row), default=0.0)
        atol = _RC_ATOL * max(1.0, scale)
        self.adj = [
            [
                j
                for j in range(n_cols)
                if abs(values[i][j] - row_pot[i] - col_pot[j]) <= atol
            ]
            for i in range(n_rows)
        ]
        if n_rows <= n_cols:
            self.must_cols = {j for j in range(n_cols) if col_pot[j] < -atol}
            self.must_rows: set[int] = set()
        else:
            self.must_rows = {i for i in range(n_rows) if row_pot[i] < -atol}
            self.must_cols = set()

    def _completable(self, next_row: int, used_cols: set[int], pairs_left: int) -> bool:
        """Can rows >= next_row complete the matching within the constraints?"""
        rows = list(range(next_row, self.n_rows))
        if self.n_rows <= self.n_cols and len(rows) != pairs_left:
            return False
        if self.n_rows > self.n_cols and len(rows) < pairs_left:
            return False
        local = {r: i for i, r in enumerate(rows)}
        col_ids = sorted(set(c for r in rows for c in self.adj[r]) - used_cols)
        col_local = {c: i for i, c in enumerate(col_ids)}
        adj = [
            [col_local[c] for c in self.adj[r] if c not in used_cols]
            for r in rows
        ]
        if self.n_rows <= self.n_cols:
            # every remaining row must be matched...
            if not _saturates(adj, list(range(len(rows)))):
                return False
            # ...and so must every remaining must-match column
            want = [c for c in self.must_cols if c not in used_cols]
            if any(c not in col_local for c in want):
                return False
            radj = [[] for _ in col_ids]
            for r_local, cols in enumerate(adj):
                for c in cols:
                    radj[c].append(r_local)
            return _saturates(radj, [col_local[c] for c in want])
        # long-rows case: every remaining column must be matched
        radj = [[] for _ in col_ids]
        for r_local, cols in enumerate(adj):
            for c in cols:
                radj[c].append(r_local)
        remaining_cols = [c for c in range(self.n_cols) if c not in used_cols]
        if len(remaining_cols) != pairs_left:
            return False
        if any(c not in col_local for c in remaining_cols):
            return False
        if not _saturates(radj, [col_local[c] for c in remaining_cols]):
            return False
        want_rows = [local[r] for r in self.must_rows if r >= next_row]
        return _saturates(adj, want_rows)

    def run(self) -> tuple[tuple[int, int], ...]:
        k = min(self.n_rows, self.n_cols)
        used_cols: set[int] = set()
        pairs: list[tuple[int, int]] = []
        r = 0
        while len(pairs) < k:
            placed = False
            # rows may only be skipped when R > C, and never past a must-row
            row_candidates = [r] if self.n_rows <= self.n_cols else [
                rr for rr in range(r, self.n_rows)
            ]
            for rr in row_candidates:
                for c in self.adj[rr]:
                    if c in used_cols:
                        continue
                    used_cols.add(c)
                    ok = self._completable(rr + 1, used_cols, k - len(pairs) - 1)
                    if ok:
                        pairs.append((rr, c))
                        r = rr + 1
                        placed = True
                        break
                    used_cols.discard(c)
                if placed:
                    break
                if self.n_rows > self.n_cols and rr in self.must_rows:
                    break  # cannot skip a must-match row
            if not placed:
                raise AssertionError("lexicographic refinement lost feasibility")
        return tuple(pairs)


def solve(m: CostMatrix) -> Assignment:
    """Globally minimal assignment with a deterministic lexicographic tie-break."""
    n_rows, n_cols = m.rows, m.cols
    if min(n_rows, n_cols) == 0:
        return Assignment(pairs=(), total_cost=0.0)
    values = m.values
    if n_rows <= n_cols:
        u, v, _ = _hungarian(values, n_rows, n_cols)
        row_pot = [u[i + 1] for i in range(n_rows)]
        col_pot = [v[j + 1] for j in range(n_cols)]
    else:
        transposed = tuple(
            tuple(values[i][j] for i in range(n_rows)) for j in range(n_cols)
        )
        u, v, _ = _hungarian(transposed, n_cols, n_rows)
        col_pot = [u[j + 1] for j in range(n_cols)]
        row_pot = [v[i + 1] for i in range(n_rows)]
    pairs = _LexRefiner(values, n_rows, n_cols, row_pot, col_pot).run()
    return Assignment(pairs=pairs, total_cost=_pair_cost(values, pairs))


_PERM_CACHE: dict[tuple[int, int], "np.ndarray"] = {}


def _permutation_table(n: int, k: int) -> "np.ndarray":
    key = (n, k)
    if key not in _PERM_CACHE:
        _PERM_CACHE[key] = np.asarray(
            list(itertools.permutations(range(n), k)), dtype=np.intp
        )
    return _PERM_CACHE[key]


def brute_force_solve(m: CostMatrix) -> Assignment:
    """Exhaustive oracle over all maximum matchings; same contract as solve.

    Ties are arbitrated with exact rational sums so that matchings whose
    float totals differ only by summation-order rounding still count as
    cost-tied and fall through to the lexicographic rule.
    """
    n_rows, n_cols = m.rows, m.cols
    if min(n_rows, n_cols) == 0:
        return Assignment(pairs=(), total_cost=0.0)
    if min(n_rows, n_cols) > 8:
        raise InstanceTooLargeError(
            f"brute force limited to min dimension 8, got {n_rows}x{n_cols}"
        )
    values = m.values
    arr = np.asarray(values)
    band = _RC_ATOL * max(1.0, float(np.abs(arr).max())) * min(n_rows, n_cols)
    if n_rows <= n_cols:
        perms = _permutation_table(n_cols, n_rows)
        costs = arr[np.arange(n_rows), perms].sum(axis=1)
        near = np.flatnonzero(costs <= costs.min() + band)
        candidates = [
            tuple(enumerate(int(c) for c in perms[i])) for i in near
        ]
    else:
        perms = _permutation_table(n_rows, n_cols)
        costs = arr[perms, np.arange(n_cols)].sum(axis=1)
        near = np.flatnonzero(costs <= costs.min() + band)
        candidates = [
            tuple(sorted((int(r), c) for c, r in enumerate(perms[i])))
            for i in near
        ]
    best_pairs = min(candidates, key=lambda pairs: (_exact_cost(values, pairs), pairs))
    return Assignment(pairs=best_pairs, total_cost=_pair_cost(values, best_pairs))
