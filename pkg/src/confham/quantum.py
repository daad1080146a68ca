"""Finite-difference spectra of the quantum family ``F(x) (-1/2 Laplacian + W(x))``.

The operator ``F A`` (``A = -1/2 Laplacian + W``) is not symmetric in the flat
inner product.  It is symmetric for the weight ``B = 1/F``, so we solve the
generalized problem ``A psi = E B psi`` through the similar matrix
``M = B^(-1/2) A B^(-1/2) = F^(1/2) A F^(1/2)``.  Boundary conditions are
Dirichlet on a box whose interior nodes avoid every singular set.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import ModelParams, conformal_factor, potential
from .errors import DomainError, NonConvergenceError, ParameterError

DENSE_LIMIT = 1500
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class GridSpec:
    """Tensor grid of ``points[i]`` interior nodes on ``box[i] = (a_i, b_i)`` (Dirichlet ends)."""

    n: int
    box: tuple[tuple[float, float], ...]
    points: tuple[int, ...]

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ParameterError("n", f"quantum grids support n = 1 or 2, got {self.n!r}")
        box = tuple((float(a), float(b)) for a, b in self.box)
        points = tuple(int(m) for m in self.points)
        if len(box) != self.n or len(points) != self.n:
            raise ParameterError("box", f"need {self.n} intervals and point counts")
        for a, b in box:
            if not a < b:
                raise ParameterError("box", f"interval ({a}, {b}) is empty")
        for m in points:
            if m < 8:
                raise ParameterError("points", f"need at least 8 interior points per axis, got {m}")
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "points", points)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((b - a) / (m + 1) for (a, b), m in zip(self.box, self.points))

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    def axes(self) -> list[np.ndarray]:
        return [a + d * np.arange(1, m + 1) for (a, _), d, m in zip(self.box, self.spacing, self.points)]

    def nodes(self) -> np.ndarray:
        """Node coordinates, shape ``(size, n)``, last axis fastest."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.column_stack([g.ravel() for g in mesh])

    def to_dict(self) -> dict:
        return {"n": self.n, "box": [list(b) for b in self.box], "points": list(self.points), "boundary": "dirichlet"}

    @classmethod
    def from_dict(cls, data) -> GridSpec:
        return cls(int(data["n"]), tuple(tuple(b) for b in data["box"]), tuple(data["points"]))


def _check_grid(qparams: ModelParams, grid: GridSpec) -> None:
    if qparams.n != grid.n:
        raise ParameterError("n", f"grid has n={grid.n}, model has n={qparams.n}")
    for i, ((a, b), alpha) in enumerate(zip(grid.box, qparams.alphas)):
        if alpha != 0.0 and a < 0.0 < b:
            raise DomainError(f"barrier plane x_{i + 1} = 0 lies inside the box ({a}, {b})")


def node_values(qparams: ModelParams, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """``(W, F)`` at the interior nodes."""
    _check_grid(qparams, grid)
    x = grid.nodes()
    cols = [x[:, i] for i in range(grid.n)]
    r2 = np.sum(x * x, axis=1) + qparams.gamma
    if qparams.k != 1.0 and np.any(r2 == 0.0):
        bad = x[np.argmin(r2)]
        raise DomainError(f"conformal factor undefined at node {bad.tolist()}")
    try:
        w = np.asarray(potential(qparams, cols), dtype=float) * np.ones(grid.size)
        f = np.asarray(conformal_factor(qparams, cols), dtype=float) * np.ones(grid.size)
    except (DomainError, ZeroDivisionError) as exc:
        raise DomainError(f"potential undefined at a grid node: {exc}") from exc
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(f)) and np.all(f > 0.0)):
        bad = x[np.argmax(~np.isfinite(w) | ~np.isfinite(f) | (f <= 0.0))]
        raise DomainError(f"inadmissible grid node {bad.tolist()}")
    return w, f


def _laplacian_pairs(grid: GridSpec):
    """Off-diagonal neighbour index pairs ``(I, J)`` with ``I < J`` and their coefficients."""
    shape = grid.points
    index = np.arange(grid.size).reshape(shape)
    rows, cols, vals = [], [], []
    for axis, d in enumerate(grid.spacing):
        lo = np.take(index, np.arange(shape[axis] - 1), axis=axis).ravel()
        hi = np.take(index, np.arange(1, shape[axis]), axis=axis).ravel()
        rows.append(lo)
        cols.append(hi)
        vals.append(np.full(lo.size, -0.5 / (d * d)))
    diag = sum(1.0 / (d * d) for d in grid.spacing)
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), diag


def build_operator_parts(qparams: ModelParams, grid: GridSpec):
    """``(A, F)``: the flat discretization ``-1/2 Laplacian + W`` and the node weights ``F``."""
    w, f = node_values(qparams, grid)
    I, J, v, diag = _laplacian_pairs(grid)
    size = grid.size
    A = sp.coo_matrix(
        (np.concatenate([v, v, diag + w]), (np.concatenate([I, J, np.arange(size)]), np.concatenate([J, I, np.arange(size)]))),
        shape=(size, size),
    ).tocsr()
    return A, f


def build_weighted_operator(qparams: ModelParams, grid: GridSpec) -> sp.csr_matrix:
    """Symmetric ``M = F^(1/2) A F^(1/2)``; entry ``(i, j)`` and ``(j, i)`` are the same float.

    Raises:
        DomainError: a grid node is inadmissible (singular plane or origin).
    """
    w, f = node_values(qparams, grid)
    root = np.sqrt(f) if qparams.k != 1.0 else np.ones_like(f)
    I, J, v, diag = _laplacian_pairs(grid)
    off = v * (root[I] * root[J])
    d = (diag + w) * (root * root) if qparams.k != 1.0 else diag + w
    size = grid.size
    rows = np.concatenate([I, J, np.arange(size)])
    cols = np.concatenate([J, I, np.arange(size)])
    return sp.coo_matrix((np.concatenate([off, off, d]), (rows, cols)), shape=(size, size)).tocsr()


def _gershgorin_lower(M: sp.csr_matrix) -> float:
    diag = M.diagonal()
    radius = np.asarray(abs(M).sum(axis=1)).ravel() - np.abs(diag)
    return float(np.min(diag - radius))


def lowest_eigenvalues(M, count: int, return_vectors: bool = False):
    """The ``count`` smallest eigenvalues of the symmetric matrix ``M``, ascending.

    Small problems use dense ``eigh``; larger sparse ones use shift-invert
    Lanczos below the Gershgorin bound.  Every pair is checked against
    ``|Mv - lambda v| <= 1e-8 |lambda| |v|``.

    Raises:
        NonConvergenceError: a residual exceeds the bound (the achieved value
            is attached as ``residual``).
    """
    size = M.shape[0]
    if not 1 <= count <= size:
        raise ParameterError("count", f"need 1 <= count <= {size}, got {count}")
    if sp.issparse(M) and size > DENSE_LIMIT:
        sigma = _gershgorin_lower(M) - 1.0
        vals, vecs = spla.eigsh(M.tocsc(), k=count, sigma=sigma, which="LM", tol=1e-13)
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    else:
        dense = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
        vals, vecs = scipy.linalg.eigh(dense, subset_by_index=[0, count - 1])
    resid = np.linalg.norm(M @ vecs - vecs * vals, axis=0)
    bound = RESIDUAL_TOL * np.maximum(np.abs(vals), 1e-300) * np.linalg.norm(vecs, axis=0)
    worst = float(np.max(resid / bound))
    if worst > 1.0:
        raise NonConvergenceError(f"eigenpair residual exceeds bound by factor {worst:.3g}", residual=float(resid.max()))
    return (vals, vecs) if return_vectors else vals


def degeneracy_report(values: Sequence[float], tol: float) -> list[tuple[float, int]]:
    """Greedy clusters of ascending ``values``; neighbours within ``tol * max(1, |v|)`` merge."""
    clusters: list[list[float]] = []
    for v in values:
        v = float(v)
        if clusters and abs(v - clusters[-1][-1]) <= tol * max(1.0, abs(v)):
            clusters[-1].append(v)
        else:
            clusters.append([v])
    return [(float(np.mean(c)), len(c)) for c in clusters]


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: tuple[float, ...]
    clusters: tuple[tuple[float, int], ...]
    grid: GridSpec
    qparams: ModelParams
    cluster_tol: float = 1e-6

    def cluster_ids(self) -> list[int]:
        ids = []
        for cid, (_, mult) in enumerate(self.clusters):
            ids.extend([cid] * mult)
        return ids

    def header(self) -> dict:
        return {
            "qparams": self.qparams.to_dict(),
            "grid": self.grid.to_dict(),
            "cluster_tol": self.cluster_tol,
            "multiplicities": [m for _, m in self.clusters],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "eigenvalue", "cluster_id"])
        for i, (v, c) in enumerate(zip(self.eigenvalues, self.cluster_ids())):
            w.writerow([i, repr(float(v)), c])
        return buf.getvalue()

    def header_json(self) -> str:
        return json.dumps(self.header(), indent=2)


def compute_spectrum(qparams: ModelParams, grid: GridSpec, count: int, cluster_tol: float = 1e-6) -> SpectrumResult:
    vals = lowest_eigenvalues(build_weighted_operator(qparams, grid), count)
    clusters = degeneracy_report(vals, cluster_tol)
    return SpectrumResult(tuple(float(v) for v in vals), tuple(clusters), grid, qparams, cluster_tol)


def generalized_eigenvalues(qparams: ModelParams, grid: GridSpec, count: int) -> np.ndarray:
    """Lowest eigenvalues of the dense pair ``(A, 1/F)``; an independent route for small grids."""
    A, f = build_operator_parts(qparams, grid)
    return scipy.linalg.eigh(A.toarray(), np.diag(1.0 / f), eigvals_only=True, subset_by_index=[0, count - 1])


# --------------------------------------------------------------------------
# ladder fit


@dataclass(frozen=True)
class LadderFit:
    c0: float
    a: float
    b: float
    residual: float
    assignment: tuple[tuple[int, int], ...]


def fit_ladder(values: Sequence[float], max_iter: int = 10) -> LadderFit:
    """Least-squares fit ``E(n1, n2) = c0 + a n1 + b n2`` to the lowest ``values``.

    Quantum numbers are assigned by ranking the lattice under the current
    coefficients and refitting until the assignment stops changing.  With
    ``a = b`` the assignment inside a degenerate shell is arbitrary, which
    does not affect the residual (max absolute deviation).
    """
    vals = np.sort(np.asarray(values, dtype=float))
    count = vals.size
    if count < 3:
        raise ParameterError("values", "need at least three levels for a two-parameter ladder")
    c0 = vals[0]
    a = b = vals[1] - vals[0]
    top = count + 2
    lattice = [(i, j) for i, j in product(range(top), repeat=2)]
    assignment = None
    for _ in range(max_iter):
        ranked = sorted(lattice, key=lambda ij: (c0 + a * ij[0] + b * ij[1], ij[0]))[:count]
        if ranked == assignment:
            break
        assignment = ranked
        design = np.array([[1.0, i, j] for i, j in assignment])
        (c0, a, b), *_ = np.linalg.lstsq(design, vals, rcond=None)
    design = np.array([[1.0, i, j] for i, j in assignment])
    residual = float(np.max(np.abs(design @ np.array([c0, a, b]) - vals)))
    return LadderFit(float(c0), float(a), float(b), residual, tuple(assignment))


def rosochatius_levels(omega: float, alpha: float, count: int) -> np.ndarray:
    """Closed-form half-line levels ``omega (2 j + l + 3/2)`` with ``l (l + 1) = 2 alpha``."""
    ell = -0.5 + math.sqrt(0.25 + 2.0 * alpha)
    return omega * (2.0 * np.arange(count) + ell + 1.5)
