"""Binary projection classes, brute-force VC dimension and star number.

A projection class is a set of distinct {0,1} rows: K functions restricted to
m sample points.  The star number of a class is the largest s for which some
center row f0 and a column set S of size s admit, for every column x in S, a
row differing from f0 within S exactly at x (it may differ outside S; the
definition constrains agreement only inside S).

Both searches are exhaustive over column subsets, implemented on integer
bitmasks; they are exact and intentionally restricted to small m.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import NumericalError
from .estimators import FiniteClass, SolverConfig, SolverResult, q_aggregation
from .simplex import SimplexWeights, mixture_values

VC_MAX_COLUMNS = 20
STAR_MAX_COLUMNS = 16


@dataclass(frozen=True, eq=False)
class ProjectionClass:
    """K distinct binary rows on m sample points."""

    rows: np.ndarray

    def __post_init__(self) -> None:
        r = np.array(self.rows, dtype=np.int8, copy=True)
        if r.ndim != 2 or r.shape[0] < 1 or r.shape[1] < 1:
            raise ValueError("rows must be a nonempty K x m matrix")
        if not np.all((r == 0) | (r == 1)):
            raise ValueError("entries must be 0 or 1")
        if len({row.tobytes() for row in r}) != r.shape[0]:
            raise ValueError("rows must be pairwise distinct")
        r.flags.writeable = False
        object.__setattr__(self, "rows", r)

    @property
    def k(self) -> int:
        return self.rows.shape[0]

    @property
    def m(self) -> int:
        return self.rows.shape[1]

    def bitmasks(self) -> list[int]:
        return [int(sum(1 << i for i in np.flatnonzero(row))) for row in self.rows]


@dataclass(frozen=True, eq=False)
class TransductiveSplit:
    """Observed labels on the first half of a 2n sample, held-out labels on the second."""

    labels_first: np.ndarray
    labels_second: np.ndarray

    def __post_init__(self) -> None:
        a = np.array(self.labels_first, dtype=np.int8, copy=True).reshape(-1)
        b = np.array(self.labels_second, dtype=np.int8, copy=True).reshape(-1)
        if a.size != b.size or a.size < 1:
            raise ValueError("both halves must be nonempty and equally long")
        if not (np.all((a == 0) | (a == 1)) and np.all((b == 0) | (b == 1))):
            raise ValueError("labels must be 0 or 1")
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "labels_first", a)
        object.__setattr__(self, "labels_second", b)

    @property
    def n(self) -> int:
        return self.labels_first.size

    @property
    def m(self) -> int:
        return 2 * self.n


def thresholds_projection(points) -> ProjectionClass:
    """All restrictions of x -> 1[x >= t]: the m+1 step rows, all-ones down to all-zeros."""
    pts = np.asarray(points, dtype=float).reshape(-1)
    if pts.size < 1:
        raise ValueError("need at least one point")
    if np.any(np.diff(pts) <= 0):
        raise ValueError("points must be strictly increasing")
    m = pts.size
    rows = np.array([[1 if i >= k else 0 for i in range(m)] for k in range(m + 1)])
    return ProjectionClass(rows)


def singletons_projection(m: int) -> ProjectionClass:
    """The zero row plus each standard basis row: m+1 rows on m points."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return ProjectionClass(np.vstack([np.zeros(m, dtype=int), np.eye(m, dtype=int)]))


def vc_dimension_bruteforce(pc: ProjectionClass) -> int:
    """Largest s such that some s columns are shattered, by exhaustive subset search."""
    m = pc.m
    if m > VC_MAX_COLUMNS:
        raise ValueError(f"m must be <= {VC_MAX_COLUMNS} for exhaustive search")
    masks = pc.bitmasks()
    s_max = min(m, int(np.floor(np.log2(pc.k))))
    for s in range(s_max, 0, -1):
        for cols in combinations(range(m), s):
            patterns = {sum(((mask >> c) & 1) << j for j, c in enumerate(cols)) for mask in masks}
            if len(patterns) == 1 << s:
                return s
    return 0


def star_number_bruteforce(pc: ProjectionClass) -> int:
    """Largest witness-set size over all centers f0 and column subsets S.

    For fixed f0 the valid column sets are downward closed, so subsets no
    larger than the current best are skipped; each candidate column x in S
    needs some row whose disagreement with f0 inside S is exactly {x}.
    """
    m = pc.m
    if m > STAR_MAX_COLUMNS:
        raise ValueError(f"m must be <= {STAR_MAX_COLUMNS} for exhaustive search")
    masks = pc.bitmasks()
    best = 0
    for f0 in masks:
        diffs = [r ^ f0 for r in masks if r != f0]
        if not diffs:
            continue
        universe = 0
        for d in diffs:
            universe |= d
        sub = universe
        while sub:
            if sub.bit_count() > best:
                ok = True
                remaining = sub
                while remaining:
                    x_bit = remaining & -remaining
                    remaining ^= x_bit
                    if not any(d & sub == x_bit for d in diffs):
                        ok = False
                        break
                if ok:
                    best = sub.bit_count()
            sub = (sub - 1) & universe
    return best


def transductive_qagg(
    pc: ProjectionClass,
    split: TransductiveSplit,
    beta: float,
    cfg: SolverConfig = SolverConfig(),
) -> tuple[SimplexWeights, float]:
    """Q-aggregation on the labeled half, scored on the held-out half.

    Returns the solver weights and the signed excess
    R'_n(f_rho) - min_j R'_n(row_j), both empirical means over the second
    half of the 2n columns.  Solver non-convergence is propagated.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if pc.m != split.m:
        raise ValueError("projection class columns must equal 2n")
    n = split.n
    fc = FiniteClass(pc.rows[:, :n].astype(float), split.labels_first.astype(float))
    result: SolverResult = q_aggregation(SimplexWeights.uniform(pc.k), fc, beta, cfg)
    if not result.converged:
        raise NumericalError(
            f"Q-aggregation did not converge (kkt={result.kkt_residual:.3e} after {result.iterations} iterations)"
        )
    second = pc.rows[:, n:].astype(float)
    y2 = split.labels_second.astype(float)
    mixture = mixture_values(result.weights, second)
    mixture_risk = float(np.mean((mixture - y2) ** 2))
    per_row = np.mean((second - y2) ** 2, axis=1)
    return result.weights, mixture_risk - float(np.min(per_row))
