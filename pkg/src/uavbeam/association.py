"""Physical-identity generation and measurement-to-track assignment.

A feature set holds M characteristics (position, velocity, ...) for K UAVs.
Pairwise distances under a chosen metric are mapped to probability-like
sameness scores, which feed prevalence-based weights and the cost matrix.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

METRICS = ("ed", "md", "emd")
SOLVERS = ("hungarian", "lapjv", "greedy", "auction", "bruteforce", "scipy")
SCORE_FLOOR = 1e-6


@dataclass(frozen=True)
class FeatureSet:
    """K rows of M characteristics; ``chars[m]`` has shape (K, dim_m)."""

    chars: Tuple[np.ndarray, ...]
    names: Tuple[str, ...] = ("position", "velocity")

    def __post_init__(self):
        chars = tuple(np.atleast_2d(np.asarray(c, dtype=float)) for c in self.chars)
        if not chars:
            raise ValueError("feature set needs at least one characteristic")
        K = chars[0].shape[0]
        if any(c.shape[0] != K for c in chars):
            raise ValueError("all characteristics must cover the same K UAVs")
        object.__setattr__(self, "chars", chars)
        if len(self.names) != len(chars):
            object.__setattr__(self, "names", tuple(f"c{m}" for m in range(len(chars))))

    @property
    def K(self) -> int:
        return self.chars[0].shape[0]

    @property
    def M(self) -> int:
        return len(self.chars)

    def permuted(self, order) -> "FeatureSet":
        return FeatureSet(tuple(c[order] for c in self.chars), self.names)


@dataclass(frozen=True)
class WeightVector:
    w: np.ndarray
    normalized: np.ndarray


@dataclass(frozen=True)
class Assignment:
    """``cols[i]`` is the prediction (track) matched to measurement row i."""

    cols: np.ndarray
    cost: float

    def matrix(self) -> np.ndarray:
        K = len(self.cols)
        A = np.zeros((K, K), dtype=int)
        A[np.arange(K), self.cols] = 1
        return A


# -- distances ---------------------------------------------------------------

def _emd_1d(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Transport distance between the component distributions of vectors a and b."""
    return np.mean(np.abs(np.sort(a, axis=-1) - np.sort(b, axis=-1)), axis=-1)


def characteristic_distance(fa, fb, metric: str = "ed", sigma: Optional[np.ndarray] = None) -> float:
    fa = np.asarray(fa, dtype=float)
    fb = np.asarray(fb, dtype=float)
    if fa.shape != fb.shape:
        raise ValueError("feature vectors must have matching dimensions")
    diff = fa - fb
    if metric == "ed":
        return float(np.linalg.norm(diff))
    if metric == "md":
        sigma = np.eye(fa.size) if sigma is None else np.asarray(sigma, dtype=float)
        try:
            np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError as exc:
            raise ValueError("Mahalanobis covariance must be positive definite") from exc
        return float(np.sqrt(max(diff @ np.linalg.solve(sigma, diff), 0.0)))
    if metric == "emd":
        return float(_emd_1d(fa, fb))
    raise ValueError(f"unknown metric {metric!r}")


def pairwise_distances(A: np.ndarray, B: np.ndarray, metric: str,
                       sigma: Optional[np.ndarray] = None) -> np.ndarray:
    """Distance between every row of A (K, d) and every row of B (L, d)."""
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    if metric == "ed":
        diff = A[:, None, :] - B[None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    if metric == "md":
        if sigma is None:
            sigma = np.eye(A.shape[1])
        try:
            L = np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError as exc:
            raise ValueError("Mahalanobis covariance must be positive definite") from exc
        # Whitening with L^-1 turns MD into ED.
        W = np.linalg.inv(L)
        Aw = A @ W.T
        Bw = Aw if B is A else B @ W.T
        diff = Aw[:, None, :] - Bw[None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    if metric == "emd":
        return np.mean(np.abs(np.sort(A, axis=1)[:, None, :] - np.sort(B, axis=1)[None, :, :]), axis=-1)
    raise ValueError(f"unknown metric {metric!r}")


def sameness_score(distance, floor: float = SCORE_FLOOR):
    """Map a distance to (0, 1]: 1/(1 + d), floored."""
    distance = np.asarray(distance, dtype=float)
    if np.any(distance < 0):
        raise ValueError("distance must be non-negative")
    c = np.maximum(1.0 / (1.0 + distance), floor)
    return c if c.ndim else float(c)


def mahalanobis_covariance(samples: np.ndarray, ridge: float = 1e-6) -> np.ndarray:
    """Pooled sample covariance plus ridge; identity when samples are too few."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    n, dim = samples.shape
    if n < dim + 1:
        return np.eye(dim)
    return np.cov(samples, rowvar=False).reshape(dim, dim) + ridge * np.eye(dim)


class CovarianceWindow:
    """Rolling per-characteristic sample buffer over the last ``window`` slots."""

    def __init__(self, window: int = 1):
        self.window = max(int(window), 1)
        self._buf: List[List[np.ndarray]] = []

    def push(self, features: FeatureSet) -> List[np.ndarray]:
        if not self._buf:
            self._buf = [[] for _ in range(features.M)]
        for m, c in enumerate(features.chars):
            self._buf[m].append(c)
            if len(self._buf[m]) > self.window:
                self._buf[m].pop(0)
        return [mahalanobis_covariance(np.concatenate(b, axis=0)) for b in self._buf]


def characteristic_distances(meas: FeatureSet, pred: FeatureSet, metric: str,
                             sigmas: Optional[Sequence[np.ndarray]] = None) -> List[np.ndarray]:
    out = []
    for m in range(meas.M):
        sigma = None if sigmas is None else sigmas[m]
        out.append(pairwise_distances(meas.chars[m], pred.chars[m], metric, sigma))
    return out


# -- prevalence weights ------------------------------------------------------

def _distinguishability_from_scores(C: np.ndarray, mode: str) -> np.ndarray:
    """Per-UAV distinguishability from a (K, K) within-set score matrix."""
    K = C.shape[0]
    off = ~np.eye(K, dtype=bool)
    one_minus = np.where(off, 1.0 - C, 1.0)
    if mode == "all-distinct":
        return np.prod(one_minus, axis=1)
    if mode == "one-match":
        P = np.zeros(K)
        for k in range(K):
            for j in range(K):
                if j == k:
                    continue
                others = [q for q in range(K) if q != j and q != k]
                P[k] += C[k, j] * np.prod(one_minus[k, others])
        return P
    raise ValueError(f"unknown distinguishability mode {mode!r}")


def distinguishability(features: FeatureSet, k: int, m: int, mode: str = "all-distinct",
                       metric: str = "md", sigma: Optional[np.ndarray] = None) -> float:
    if features.K < 2:
        raise ValueError("distinguishability needs at least two UAVs")
    C = sameness_score(pairwise_distances(features.chars[m], features.chars[m], metric, sigma))
    return float(_distinguishability_from_scores(np.atleast_2d(C), mode)[k])


def normalize_weights(w) -> WeightVector:
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    total = w.sum()
    wn = w / total if total > 0 else np.full(w.shape, 1.0 / w.size)
    return WeightVector(w, wn)


def dynamic_weights_from_distances(within: Sequence[np.ndarray], mode: str = "all-distinct") -> WeightVector:
    w = [np.mean(_distinguishability_from_scores(np.atleast_2d(sameness_score(D)), mode))
         for D in within]
    return normalize_weights(w)


def dynamic_weights(features: FeatureSet, mode: str = "all-distinct", metric: str = "md",
                    sigmas: Optional[Sequence[np.ndarray]] = None) -> WeightVector:
    if features.K < 2:
        raise ValueError("dynamic weights need at least two UAVs")
    within = characteristic_distances(features, features, metric, sigmas)
    return dynamic_weights_from_distances(within, mode)


def fixed_weights(kind: str, M: int = 2) -> WeightVector:
    """Static (equal), position-only or velocity-only weights."""
    if kind == "static":
        return normalize_weights(np.ones(M))
    names = ("position", "velocity")
    if kind in names:
        w = np.zeros(M)
        w[names.index(kind)] = 1.0
        return normalize_weights(w)
    raise ValueError(f"unknown weight kind {kind!r}")


# -- cost matrix -------------------------------------------------------------

def cost_from_distances(dists: Sequence[np.ndarray], weights: WeightVector,
                        mode: str = "harmonic") -> np.ndarray:
    wn = weights.normalized
    if mode == "harmonic":
        # D = 1/S with S the weighted harmonic mean of per-characteristic scores.
        return sum(wn[m] / sameness_score(d) for m, d in enumerate(dists) if wn[m] > 0)
    if mode == "weighted-distance":
        return sum(wn[m] * d for m, d in enumerate(dists) if wn[m] > 0)
    raise ValueError(f"unknown cost mode {mode!r}")


def cost_matrix(measured: FeatureSet, predicted: FeatureSet, weights: WeightVector,
                metric: str = "md", mode: str = "harmonic",
                sigmas: Optional[Sequence[np.ndarray]] = None) -> np.ndarray:
    """Row i = measurement i, column j = prediction j."""
    if measured.M != predicted.M:
        raise ValueError("measured and predicted feature sets differ in M")
    dists = characteristic_distances(measured, predicted, metric, sigmas)
    return np.asarray(cost_from_distances(dists, weights, mode), dtype=float)


# -- assignment solvers ------------------------------------------------------

def _check_cost(D) -> np.ndarray:
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError(f"cost matrix must be square, got shape {D.shape}")
    if not np.all(np.isfinite(D)):
        raise ValueError("cost matrix must be finite")
    return D


def _greedy(D: np.ndarray) -> np.ndarray:
    """Rows in order take their cheapest free column (first come, first served)."""
    K = D.shape[0]
    free = np.ones(K, dtype=bool)
    cols = np.empty(K, dtype=int)
    for i in range(K):
        row = np.where(free, D[i], np.inf)
        j = int(np.argmin(row))
        cols[i] = j
        free[j] = False
    return cols


def _hungarian(D: np.ndarray) -> np.ndarray:
    """Kuhn-Munkres with row/column potentials, O(n^3)."""
    n = D.shape[0]
    a = D.tolist()
    INF = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    p = [0] * (n + 1)  # p[j]: row matched to column j (1-based), 0 = free
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [INF] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = INF
            j1 = 0
            row = a[i0 - 1]
            ui0 = u[i0]
            for j in range(1, n + 1):
                if not used[j]:
                    cur = row[j - 1] - ui0 - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
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
    cols = [0] * n
    for j in range(1, n + 1):
        cols[p[j] - 1] = j - 1
    return np.asarray(cols, dtype=int)


def _lapjv(D: np.ndarray) -> np.ndarray:
    """Jonker-Volgenant for dense square costs.

    Column reduction with reduction transfer, two rounds of augmenting row
    reduction, then shortest augmenting paths for the remaining free rows.
    """
    n = D.shape[0]
    c = D.tolist()
    x = [-1] * n  # column of each row
    y = [0] * n  # row of each column
    v = [math.inf] * n

    for i in range(n):
        row = c[i]
        for j in range(n):
            if row[j] < v[j]:
                v[j] = row[j]
                y[j] = i
    unique = [True] * n
    for j in range(n - 1, -1, -1):
        i = y[j]
        if x[i] < 0:
            x[i] = j
        else:
            unique[i] = False
            y[j] = -1
    free_rows = []
    for i in range(n):
        if x[i] < 0:
            free_rows.append(i)
        elif unique[i]:
            j = x[i]
            lowest = min((c[i][j2] - v[j2] for j2 in range(n) if j2 != j), default=0.0)
            v[j] -= lowest

    rounds = 0
    while free_rows and rounds < 2:
        free_rows = _lapjv_row_reduction(c, n, free_rows, x, y, v)
        rounds += 1

    for free_i in free_rows:
        pred = [free_i] * n
        j = _lapjv_find_path(c, n, free_i, y, v, pred)
        i = -1
        while i != free_i:
            i = pred[j]
            y[j] = i
            j, x[i] = x[i], j
    return np.asarray(x, dtype=int)


def _lapjv_row_reduction(c, n, free_rows, x, y, v):
    free_rows = list(free_rows)
    n_free = len(free_rows)
    current = 0
    new_free = 0
    count = 0
    while current < n_free:
        count += 1
        free_i = free_rows[current]
        current += 1
        row = c[free_i]
        j1, u1 = 0, row[0] - v[0]
        j2, u2 = -1, math.inf
        for j in range(1, n):
            h = row[j] - v[j]
            if h < u2:
                if h >= u1:
                    u2, j2 = h, j
                else:
                    u2, j2 = u1, j1
                    u1, j1 = h, j
        i0 = y[j1]
        v1_new = v[j1] - (u2 - u1)
        lowers = v1_new < v[j1]
        if count < current * n:
            if lowers:
                v[j1] = v1_new
            elif i0 >= 0 and j2 >= 0:
                j1 = j2
                i0 = y[j2]
            if i0 >= 0:
                if lowers:
                    current -= 1
                    free_rows[current] = i0
                else:
                    free_rows[new_free] = i0
                    new_free += 1
        elif i0 >= 0:
            free_rows[new_free] = i0
            new_free += 1
        x[free_i] = j1
        y[j1] = free_i
    return free_rows[:new_free]


def _lapjv_find_path(c, n, start_i, y, v, pred):
    """Dijkstra over reduced costs from ``start_i``; returns the free end column."""
    cols = list(range(n))
    row = c[start_i]
    d = [row[j] - v[j] for j in range(n)]
    lo = hi = 0
    n_ready = 0
    final_j = -1
    while final_j == -1:
        if lo == hi:
            n_ready = lo
            # Gather all columns at the minimum distance into cols[lo:hi].
            hi = lo + 1
            mind = d[cols[lo]]
            for k in range(hi, n):
                j = cols[k]
                if d[j] <= mind:
                    if d[j] < mind:
                        hi = lo
                        mind = d[j]
                    cols[k], cols[hi] = cols[hi], j
                    hi += 1
            for k in range(lo, hi):
                if y[cols[k]] < 0:
                    final_j = cols[k]
        if final_j == -1:
            scan_lo, scan_hi = lo, hi
            while scan_lo != scan_hi and final_j == -1:
                j = cols[scan_lo]
                scan_lo += 1
                i = y[j]
                mind = d[j]
                ci = c[i]
                h = ci[j] - v[j] - mind
                for k in range(scan_hi, n):
                    jj = cols[k]
                    cred = ci[jj] - v[jj] - h
                    if cred < d[jj]:
                        d[jj] = cred
                        pred[jj] = i
                        if cred == mind:
                            if y[jj] < 0:
                                final_j = jj
                                break
                            cols[k], cols[scan_hi] = cols[scan_hi], jj
                            scan_hi += 1
            if final_j == -1:
                lo, hi = scan_lo, scan_hi
    mind = d[cols[lo]]
    for k in range(n_ready):
        j = cols[k]
        v[j] += d[j] - mind
    return final_j


def _auction(D: np.ndarray, epsilon: Optional[float] = None, scaling: float = 5.0) -> np.ndarray:
    """Forward auction with epsilon scaling on benefits -D."""
    n = D.shape[0]
    if n == 1:
        return np.zeros(1, dtype=int)
    benefit = -D
    spread = float(D.max() - D.min())
    eps_final = epsilon if epsilon is not None else 1e-3 * max(spread, 1e-12) / n
    eps = max(spread / 4.0, eps_final)
    prices = np.zeros(n)
    while True:
        owner = -np.ones(n, dtype=int)
        assigned = -np.ones(n, dtype=int)
        unassigned = list(range(n))
        while unassigned:
            i = unassigned.pop(0)
            values = benefit[i] - prices
            j = int(np.argmax(values))
            best = values[j]
            values[j] = -np.inf
            second = values.max()
            prices[j] += best - second + eps
            prev = owner[j]
            owner[j] = i
            assigned[i] = j
            if prev >= 0:
                assigned[prev] = -1
                unassigned.append(prev)
        if eps <= eps_final:
            return assigned
        eps = max(eps / scaling, eps_final)


def _bruteforce(D: np.ndarray) -> np.ndarray:
    n = D.shape[0]
    if n > 8:
        raise ValueError("bruteforce solver is limited to K <= 8")
    best = None
    best_cost = math.inf
    rows = range(n)
    tol = n * _tie_tolerance(D)
    for perm in itertools.permutations(range(n)):
        cost = sum(D[i, perm[i]] for i in rows)
        if cost < best_cost - tol:
            best_cost = cost
            best = perm
    return np.asarray(best, dtype=int)


def _tie_tolerance(D: np.ndarray) -> float:
    return 1e-12 * (1.0 + float(np.max(np.abs(D))))


def _reassignment_paths(D: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """All-pairs shortest paths over the reassignment graph of ``cols``.

    Edge x_i -> j weighs D[i, j] - D[i, x_i]; the diagonal holds the
    lightest cycle through each column, which is zero exactly when another
    assignment ties with ``cols``.
    """
    n = D.shape[0]
    W = np.empty((n, n))
    W[cols, :] = D - D[np.arange(n), cols][:, None]
    np.fill_diagonal(W, np.inf)
    for k in range(n):
        W = np.minimum(W, W[:, k:k + 1] + W[k:k + 1, :])
    return W


def _has_matching(E: np.ndarray, rows: List[int], free_cols: List[bool]) -> bool:
    match: Dict[int, int] = {}

    def augment(i, seen):
        for j in np.flatnonzero(E[i]):
            if free_cols[j] and j not in seen:
                seen.add(j)
                if j not in match or augment(match[j], seen):
                    match[j] = i
                    return True
        return False

    return all(augment(i, set()) for i in rows)


def _lowest_index_optimum(D: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Among assignments tied with ``cols``, the lexicographically smallest."""
    n = D.shape[0]
    paths = _reassignment_paths(D, cols)
    tol = _tie_tolerance(D)
    if np.diag(paths).min() > tol:
        return cols
    # Column potentials from a virtual source; every optimal assignment lies
    # on edges with zero reduced cost.
    v = np.minimum(0.0, paths.min(axis=0))
    u = D[np.arange(n), cols] - v[cols]
    E = D - u[:, None] - v[None, :] <= tol
    out = np.empty(n, dtype=int)
    free = [True] * n
    for i in range(n):
        for j in np.flatnonzero(E[i]):
            if not free[j]:
                continue
            free[j] = False
            if _has_matching(E, list(range(i + 1, n)), free):
                out[i] = j
                break
            free[j] = True
    if D[np.arange(n), out].sum() > D[np.arange(n), cols].sum() + n * tol:
        return cols
    return out


def _scipy(D: np.ndarray) -> np.ndarray:
    rows, cols = linear_sum_assignment(D)
    out = np.empty(D.shape[0], dtype=int)
    out[rows] = cols
    return out


def solve_assignment(D, algorithm: str = "hungarian", epsilon: Optional[float] = None) -> Assignment:
    D = _check_cost(D)
    if algorithm == "greedy":
        cols = _greedy(D)
    elif algorithm == "hungarian":
        cols = _hungarian(D)
    elif algorithm == "lapjv":
        cols = _lapjv(D)
    elif algorithm == "auction":
        cols = _auction(D, epsilon)
    elif algorithm in ("bruteforce", "brute"):
        cols = _bruteforce(D)
    elif algorithm == "scipy":
        cols = _scipy(D)
    else:
        raise ValueError(f"unknown assignment algorithm {algorithm!r}")
    if algorithm in ("hungarian", "lapjv", "scipy") and D.shape[0] > 1:
        cols = _lowest_index_optimum(D, cols)
    return Assignment(cols, float(D[np.arange(D.shape[0]), cols].sum()))
