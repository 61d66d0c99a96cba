"""Assembly and solution of the discrete weighted elliptic extension problem.

Interior nodes satisfy L v = y^(1-sigma) Lap_c v + (1-sigma) y^(-sigma) Dy_d v = 0
with Dirichlet data on the trace row k = 0 and the lateral/top boundary.  Rows
are assembled in a scaled form: multiplying the raw finite-difference row at
height y_k = k*dx by dx^(1+sigma) * k^(sigma-1) and flipping its sign leaves
coefficients that depend only on k and sigma, with an O(1) positive diagonal.
That scaling keeps the matrix well conditioned across sigma and is exactly the
manipulation under which the low-order scheme exhibits its M-structure.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from .core import Grid, Region, _check_sigma
from .errors import SolverError, UnsupportedStencilError

__all__ = [
    "SUPPORTED_PAIRS", "fd_weights", "StencilSpec", "ExtensionOperator",
    "assemble", "solve_interior", "full_grid_values", "MonotoneReport",
    "verify_monotone_structure", "discrete_max_location", "apply_operator",
    "dump_matrix",
]

SUPPORTED_PAIRS = frozenset({(2, 1), (2, 2), (2, 3), (3, 3), (3, 4), (4, 4)})

# smallest step counts a stencil family needs (one-sided windows included)
_MIN_N_SECOND = {2: 2, 3: 4, 4: 5}
_MIN_K_FIRST = {1: 2, 2: 2, 3: 3, 4: 4}


def fd_weights(offsets: Sequence[float], deriv: int) -> np.ndarray:
    """Finite-difference weights for d^deriv/ds^deriv at 0 on the given offsets.

    Fornberg's recurrence; exact (up to rounding) for any distinct offsets.
    """
    x = np.asarray(offsets, dtype=float)
    n = len(x)
    if deriv < 0 or n <= deriv:
        raise ValueError("need more stencil points than the derivative order")
    c = np.zeros((n, deriv + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = x[0]
    for i in range(1, n):
        mn = min(i, deriv)
        c2 = 1.0
        c5 = c4
        c4 = x[i]
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, deriv].copy()


def _second_deriv_offsets(idx: int, n: int, c: int) -> tuple[int, ...]:
    """Offsets for the order-c second derivative at index idx on nodes 0..n.

    Centered stencils where they fit; one-sided windows of the same formal
    order next to the boundary (the 5-point one-sided window is order 3, the
    6-point one order 4; the centered 5-point is order 4 by symmetry).
    """
    if c == 2:
        return (-1, 0, 1)
    if c == 3:
        if 2 <= idx <= n - 2:
            return (-2, -1, 0, 1, 2)
        return (-1, 0, 1, 2, 3) if idx == 1 else (-3, -2, -1, 0, 1)
    if c == 4:
        if 2 <= idx <= n - 2:
            return (-2, -1, 0, 1, 2)
        return (-1, 0, 1, 2, 3, 4) if idx == 1 else (-4, -3, -2, -1, 0, 1)
    raise UnsupportedStencilError(f"second-derivative order c={c} not supported")


def _first_deriv_offsets(k: int, K: int, d: int) -> tuple[int, ...]:
    """Offsets for the order-d first derivative in y at row k (1 <= k <= K-1)."""
    if d == 1:
        return (0, 1)
    if d == 2:
        return (-1, 0, 1)
    if d == 3:
        return (-1, 0, 1, 2) if k <= K - 2 else (-2, -1, 0, 1)
    if d == 4:
        if 2 <= k <= K - 2:
            return (-2, -1, 0, 1, 2)
        return (-1, 0, 1, 2, 3) if k == 1 else (-3, -2, -1, 0, 1)
    raise UnsupportedStencilError(f"first-derivative order d={d} not supported")


def _check_pair(sigma: float, c: int, d: int | None, I: int, K: int) -> None:
    if d is None:
        if sigma != 1.0:
            raise UnsupportedStencilError("d may be omitted only at sigma = 1")
        if c not in _MIN_N_SECOND:
            raise UnsupportedStencilError(f"Laplacian order c={c} not supported")
    elif (c, d) not in SUPPORTED_PAIRS:
        raise UnsupportedStencilError(
            f"(c, d) = ({c}, {d}) not in the supported set {sorted(SUPPORTED_PAIRS)}")
    min_i = _MIN_N_SECOND[c]
    min_k = _MIN_N_SECOND[c] if d is None else max(_MIN_N_SECOND[c], _MIN_K_FIRST[d])
    if I < min_i or K < min_k:
        raise UnsupportedStencilError(
            f"mesh too small for (c={c}, d={d}): need I >= {min_i} and K >= {min_k}, "
            f"got I={I}, K={K}")


@dataclass(frozen=True)
class StencilSpec:
    """Scaled-row weight generator for the pair (c, d)."""
    c: int
    d: int | None

    def row_entries(self, i: int, k: int, I: int, K: int, sigma: float) -> dict:
        """Weights {(di, dk): coef} of the scaled, sign-flipped row at node (i, k)."""
        w: dict[tuple[int, int], float] = defaultdict(float)
        xo = _second_deriv_offsets(i, I, self.c)
        for off, wt in zip(xo, fd_weights(xo, 2)):
            w[(off, 0)] -= wt
        yo = _second_deriv_offsets(k, K, self.c)
        for off, wt in zip(yo, fd_weights(yo, 2)):
            w[(0, off)] -= wt
        if self.d is not None and sigma != 1.0:
            coef = (1.0 - sigma) / k
            fo = _first_deriv_offsets(k, K, self.d)
            for off, wt in zip(fo, fd_weights(fo, 1)):
                w[(0, off)] -= coef * wt
        return dict(w)


@dataclass
class ExtensionOperator:
    """Assembled interior system A w = -B b with a reusable factorization.

    Interior unknowns are ordered by (k, i); the boundary vector b enumerates
    all non-interior nodes sorted by (k, i).  B holds the stencil couplings to
    boundary nodes with the same sign convention as A, so the right-hand side
    for boundary data b is -B @ b.
    """
    grid: Grid
    sigma: float
    c: int
    d: int | None
    A: sparse.csr_matrix
    boundary_coupling: sparse.csr_matrix
    boundary_nodes: tuple[tuple[int, int], ...]   # (i, k), sorted by (k, i)
    _lu: object = field(repr=False, default=None)

    @property
    def n_interior(self) -> int:
        return (self.grid.I - 1) * (self.grid.K - 1)

    def interior_index(self, i: int, k: int) -> int:
        return (k - 1) * (self.grid.I - 1) + (i - 1)

    def condition_estimate(self) -> float:
        """1-norm condition estimate ||A||_1 * ||A^-1||_1 (uses the factorization)."""
        n = self.A.shape[0]
        inv = spla.LinearOperator((n, n), matvec=self._lu.solve,
                                  rmatvec=lambda v: self._lu.solve(v, trans="T"))
        return spla.onenormest(self.A) * spla.onenormest(inv)


def assemble(grid: Grid, sigma: float, c: int = 2, d: int | None = 1) -> ExtensionOperator:
    """Build and factorize the interior operator for a fixed grid and sigma."""
    sigma = _check_sigma(sigma)
    I, K = grid.I, grid.K
    _check_pair(sigma, c, d, I, K)

    boundary_nodes = tuple(
        (i, k) for k in range(K + 1) for i in range(I + 1)
        if grid.region(i, k) is not Region.INTERIOR)
    bindex = {node: n for n, node in enumerate(boundary_nodes)}
    spec = StencilSpec(c, d)

    rows_a, cols_a, vals_a = [], [], []
    rows_b, cols_b, vals_b = [], [], []
    n_int = (I - 1) * (K - 1)
    for k in range(1, K):
        for i in range(1, I):
            n = (k - 1) * (I - 1) + (i - 1)
            for (di, dk), coef in spec.row_entries(i, k, I, K, sigma).items():
                ii, kk = i + di, k + dk
                if not (0 <= ii <= I and 0 <= kk <= K):
                    raise SolverError(f"stencil leaves the mesh at node ({i}, {k})")
                if grid.region(ii, kk) is Region.INTERIOR:
                    rows_a.append(n)
                    cols_a.append((kk - 1) * (I - 1) + (ii - 1))
                    vals_a.append(coef)
                else:
                    rows_b.append(n)
                    cols_b.append(bindex[(ii, kk)])
                    vals_b.append(coef)

    A = sparse.csr_matrix((vals_a, (rows_a, cols_a)), shape=(n_int, n_int))
    B = sparse.csr_matrix((vals_b, (rows_b, cols_b)), shape=(n_int, len(boundary_nodes)))
    op = ExtensionOperator(grid=grid, sigma=sigma, c=c, d=d, A=A,
                           boundary_coupling=B, boundary_nodes=boundary_nodes)
    try:
        # COLAMD keeps fill low; the factorization is reused for every rhs
        lu = spla.splu(A.tocsc(), permc_spec="COLAMD")
    except RuntimeError as e:
        raise SolverError(f"factorization failed for (c={c}, d={d}, sigma={sigma}): {e}") from e
    op._lu = lu
    return op


def _boundary_vector(op: ExtensionOperator, trace_row: np.ndarray,
                     lateral: np.ndarray | None) -> np.ndarray:
    grid = op.grid
    I, K = grid.I, grid.K
    trace_row = np.asarray(trace_row, dtype=float)
    if trace_row.shape != (I - 1,):
        raise ValueError(f"trace_row must have length I-1 = {I - 1}, got {trace_row.shape}")
    n_lat = 2 * (K + 1) + (I - 1)
    if lateral is None:
        lateral = np.zeros(n_lat)
    else:
        lateral = np.asarray(lateral, dtype=float)
        if lateral.shape != (n_lat,):
            raise ValueError(f"lateral must have length {n_lat}, got {lateral.shape}")
    if not (np.isfinite(trace_row).all() and np.isfinite(lateral).all()):
        raise ValueError("boundary data must be finite")

    bvec = np.empty(len(op.boundary_nodes))
    lat_pos = 0
    for n, (i, k) in enumerate(op.boundary_nodes):
        if grid.region(i, k) is Region.TRACE:
            bvec[n] = trace_row[i - 1]
        else:
            bvec[n] = lateral[lat_pos]
            lat_pos += 1
    return bvec


def solve_interior(op: ExtensionOperator, trace_row: np.ndarray,
                   lateral: np.ndarray | None = None) -> np.ndarray:
    """Interior values, shape (I-1, K-1) indexed [i-1, k-1], for given Dirichlet data.

    lateral enumerates the non-trace boundary nodes in (k, i) order; None
    means homogeneous (the bounded-domain scheme).  The cached factorization
    is reused; the solution is residual-checked.
    """
    bvec = _boundary_vector(op, trace_row, lateral)
    rhs = -op.boundary_coupling.dot(bvec)
    w = op._lu.solve(rhs)
    norm_rhs = float(np.abs(rhs).max()) if rhs.size else 0.0
    resid = float(np.abs(op.A.dot(w) - rhs).max()) if rhs.size else 0.0
    if resid > 1e-10 * max(norm_rhs, 1e-300):
        raise SolverError(
            f"solve residual {resid:.3e} exceeds 1e-10 * ||rhs||_inf = {1e-10 * norm_rhs:.3e}; "
            f"condition estimate {op.condition_estimate():.3e}")
    I, K = op.grid.I, op.grid.K
    return w.reshape(K - 1, I - 1).T


def full_grid_values(op: ExtensionOperator, trace_row: np.ndarray,
                     interior: np.ndarray, lateral: np.ndarray | None = None) -> np.ndarray:
    """Assemble the (I+1) x (K+1) node array from its boundary and interior parts."""
    grid = op.grid
    I, K = grid.I, grid.K
    vals = np.zeros((I + 1, K + 1))
    vals[1:I, 1:K] = interior
    bvec = _boundary_vector(op, trace_row, lateral)
    for n, (i, k) in enumerate(op.boundary_nodes):
        vals[i, k] = bvec[n]
    return vals


@dataclass(frozen=True)
class MonotoneReport:
    is_m_structure: bool
    offending_rows: tuple[int, ...]


def verify_monotone_structure(op: ExtensionOperator, tol: float = 1e-12) -> MonotoneReport:
    """Check the sign/dominance pattern sufficient for the discrete maximum principle.

    Requires positive diagonal, nonpositive off-diagonal entries (in A and in
    the boundary coupling), weak diagonal dominance everywhere, and strict
    dominance in rows coupled to the boundary.  Diagnostic only; offenders
    are reported, never raised.
    """
    A = op.A.tocsr()
    B = op.boundary_coupling.tocsr()
    offenders: list[int] = []
    for r in range(A.shape[0]):
        row = A.getrow(r)
        diag = 0.0
        off_sum = 0.0
        ok = True
        for c_, v in zip(row.indices, row.data):
            if c_ == r:
                diag = v
            else:
                off_sum += abs(v)
                if v > tol:
                    ok = False
        brow = B.getrow(r)
        b_sum = float(np.abs(brow.data).sum())
        if np.any(brow.data > tol):
            ok = False
        scale = max(abs(diag), 1.0)
        if diag <= tol * scale:
            ok = False
        # weak dominance always; strict when part of the stencil hit the boundary
        if diag < off_sum - tol * scale:
            ok = False
        if b_sum > tol * scale and diag <= off_sum + tol * scale:
            ok = False
        if not ok:
            offenders.append(r)
    return MonotoneReport(is_m_structure=not offenders, offending_rows=tuple(offenders))


def discrete_max_location(values) -> tuple[int, int]:
    """Argmax node (i, k); ties broken by smallest k, then smallest i."""
    vals = np.asarray(getattr(values, "values", values), dtype=float)
    m = vals.max()
    ks, is_ = np.nonzero(vals.T == m)
    return int(is_[0]), int(ks[0])


def apply_operator(values: np.ndarray, dx: float, sigma: float,
                   c: int = 2, d: int | None = 1) -> np.ndarray:
    """Matrix-free pointwise application of the unscaled operator at interior nodes.

    Returns L v with physical units on the (I-1) x (K-1) interior block; meant
    for truncation-error studies against analytically sampled fields, not for
    production solves.
    """
    sigma = _check_sigma(sigma)
    vals = np.asarray(values, dtype=float)
    I = vals.shape[0] - 1
    K = vals.shape[1] - 1
    _check_pair(sigma, c, d, I, K)
    out = np.empty((I - 1, K - 1))
    inv_dx2 = 1.0 / (dx * dx)
    for k in range(1, K):
        y = k * dx
        yo = _second_deriv_offsets(k, K, c)
        wy = fd_weights(yo, 2)
        if d is not None and sigma != 1.0:
            fo = _first_deriv_offsets(k, K, d)
            wf = fd_weights(fo, 1)
        for i in range(1, I):
            xo = _second_deriv_offsets(i, I, c)
            wx = fd_weights(xo, 2)
            lap = (sum(w * vals[i + o, k] for o, w in zip(xo, wx))
                   + sum(w * vals[i, k + o] for o, w in zip(yo, wy))) * inv_dx2
            res = y ** (1.0 - sigma) * lap
            if d is not None and sigma != 1.0:
                dy = sum(w * vals[i, k + o] for o, w in zip(fo, wf)) / dx
                res += (1.0 - sigma) * y ** (-sigma) * dy
            out[i - 1, k - 1] = res
    return out


def dump_matrix(op: ExtensionOperator, path) -> None:
    """Write A as `row col value` triplets, 0-based, sorted row-major."""
    coo = op.A.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for idx in order:
            fh.write(f"{coo.row[idx]} {coo.col[idx]} {coo.data[idx]:.17e}\n")
