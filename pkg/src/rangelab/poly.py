"""Sparse multivariate polynomial core.

Provides the MultiPoly carrier used everywhere else (evaluation, calculus,
restriction, resultants) together with the small determinant toolbox:
Vandermonde product formula, Schur polynomials by tableau enumeration, and
generalized Vandermonde determinants.

Axes are 1-based in every public signature (axis=1 is the first variable).
Coefficients are IEEE-754 doubles; comparison tolerances are explicit
parameters with defaults (root tolerance 1e-12, zero test 1e-9).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np
from numpy.polynomial import chebyshev as _cheb
from numpy.polynomial import polynomial as _npoly

from .errors import (
    ContractViolation,
    DimensionMismatch,
    EnumerationBudgetExceeded,
)

MultiIndex = Tuple[int, ...]

ROOT_TOL = 1e-12
ZERO_TOL = 1e-9
SUBLEVEL_GRID_CELLS = 1 << 20
SSYT_BUDGET = 10_000_000
DET_MAX_SIZE = 64


def sigma(index: Sequence[int]) -> int:
    """Total degree of a multi-index: the sum of its exponents."""
    return int(sum(index))


class MultiPoly:
    """Sparse polynomial ``sum_i A_i X^i`` over ``dim`` variables.

    ``terms`` maps exponent tuples to nonzero float coefficients; zero
    coefficients are dropped on construction so the stored degree is always
    the max total degree of a live term.
    """

    __slots__ = ("dim", "terms", "degree")

    def __init__(self, dim: int, terms: Mapping[MultiIndex, float]):
        dim = int(dim)
        if dim < 1:
            raise ContractViolation(f"dim must be >= 1, got {dim}")
        clean: Dict[MultiIndex, float] = {}
        for idx, coef in dict(terms).items():
            key = tuple(int(e) for e in idx)
            if len(key) != dim:
                raise DimensionMismatch(
                    f"exponent tuple {key} has length {len(key)}, expected {dim}"
                )
            if any(e < 0 for e in key):
                raise ContractViolation(f"negative exponent in {key}")
            c = float(coef)
            if c != 0.0:
                clean[key] = clean.get(key, 0.0) + c
                if clean[key] == 0.0:
                    del clean[key]
        self.dim = dim
        self.terms = clean
        self.degree = max((sigma(i) for i in clean), default=0)

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, dim: int) -> "MultiPoly":
        return cls(dim, {})

    @classmethod
    def constant(cls, dim: int, value: float) -> "MultiPoly":
        return cls(dim, {(0,) * dim: value})

    @classmethod
    def variable(cls, dim: int, axis: int) -> "MultiPoly":
        """The monomial X_axis (1-based axis)."""
        _check_axis(axis, dim)
        idx = [0] * dim
        idx[axis - 1] = 1
        return cls(dim, {tuple(idx): 1.0})

    @classmethod
    def univariate(cls, coeffs: Sequence[float]) -> "MultiPoly":
        """Univariate polynomial from low-to-high coefficient list."""
        return cls(1, {(i,): c for i, c in enumerate(coeffs)})

    # -- basic protocol ----------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MultiPoly)
            and self.dim == other.dim
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.dim, tuple(sorted(self.terms.items()))))

    def __repr__(self) -> str:
        items = ", ".join(f"{i}:{c:g}" for i, c in sorted(self.terms.items()))
        return f"MultiPoly(dim={self.dim}, {{{items}}})"

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for idx, c in other.terms.items():
            out[idx] = out.get(idx, 0.0) + c
        return MultiPoly(self.dim, out)

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self):
        return MultiPoly(self.dim, {i: -c for i, c in self.terms.items()})

    def __sub__(self, other):
        return self.__add__(self._coerce(other).__neg__())

    def __rsub__(self, other):
        return self._coerce(other).__sub__(self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return MultiPoly(self.dim, {i: c * other for i, c in self.terms.items()})
        other = self._coerce(other)
        out: Dict[MultiIndex, float] = {}
        for i1, c1 in self.terms.items():
            for i2, c2 in other.terms.items():
                key = tuple(a + b for a, b in zip(i1, i2))
                out[key] = out.get(key, 0.0) + c1 * c2
        return MultiPoly(self.dim, out)

    def __rmul__(self, other):
        return self.__mul__(other)

    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.dim != self.dim:
                raise DimensionMismatch(
                    f"cannot combine dim {self.dim} with dim {other.dim}"
                )
            return other
        if isinstance(other, (int, float)):
            return MultiPoly.constant(self.dim, float(other))
        raise TypeError(f"cannot combine MultiPoly with {type(other)!r}")

    # -- evaluation --------------------------------------------------------

    def __call__(self, *x: float) -> float:
        if len(x) == 1 and isinstance(x[0], (tuple, list, np.ndarray)):
            return evaluate(self, x[0])
        return evaluate(self, x)

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        """Evaluate on an (N, dim) array of points, returning an (N,) array."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise DimensionMismatch(
                f"expected (N, {self.dim}) array, got shape {pts.shape}"
            )
        if not self.terms:
            return np.zeros(pts.shape[0])
        max_exp = [0] * self.dim
        for idx in self.terms:
            for j, e in enumerate(idx):
                max_exp[j] = max(max_exp[j], e)
        tables = [
            np.power.outer(pts[:, j], np.arange(max_exp[j] + 1))
            for j in range(self.dim)
        ]
        out = np.zeros(pts.shape[0])
        for idx, coef in self.terms.items():
            term = np.full(pts.shape[0], coef)
            for j, e in enumerate(idx):
                if e:
                    term = term * tables[j][:, e]
            out += term
        return out

    def coeff_matrix_2d(self) -> np.ndarray:
        """Dense (deg_x+1, deg_y+1) coefficient matrix; bivariate only."""
        if self.dim != 2:
            raise DimensionMismatch("coeff_matrix_2d needs a bivariate polynomial")
        dx = max((i[0] for i in self.terms), default=0)
        dy = max((i[1] for i in self.terms), default=0)
        mat = np.zeros((dx + 1, dy + 1))
        for (i, j), c in self.terms.items():
            mat[i, j] = c
        return mat

    def eval_grid_2d(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Evaluate a bivariate polynomial on a tensor grid.

        Returns an array of shape (len(xs), len(ys)) via two small matmuls,
        which is the fast path for marching grids.
        """
        mat = self.coeff_matrix_2d()
        vx = np.power.outer(np.asarray(xs, dtype=float), np.arange(mat.shape[0]))
        vy = np.power.outer(np.asarray(ys, dtype=float), np.arange(mat.shape[1]))
        return vx @ mat @ vy.T

    def univariate_coeffs(self) -> np.ndarray:
        """Low-to-high coefficient array; univariate only."""
        if self.dim != 1:
            raise DimensionMismatch("univariate_coeffs needs dim == 1")
        d = max((i[0] for i in self.terms), default=0)
        out = np.zeros(d + 1)
        for (i,), c in self.terms.items():
            out[i] = c
        return out

    # -- calculus / restriction -------------------------------------------

    def partial(self, axis: int) -> "MultiPoly":
        return partial_derivative(self, axis)

    def restricted(self, axis: int, value: float) -> "MultiPoly":
        return restrict(self, axis, value)

    # -- serialization -----------------------------------------------------

    def to_json_dict(self) -> dict:
        terms = [[list(idx), coef] for idx, coef in sorted(self.terms.items())]
        return {"dim": self.dim, "terms": terms}

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "MultiPoly":
        return cls(int(data["dim"]), {tuple(i): c for i, c in data["terms"]})


def _check_axis(axis: int, dim: int) -> None:
    if not 1 <= int(axis) <= dim:
        raise ContractViolation(f"axis {axis} out of range for dim {dim}")


# ---------------------------------------------------------------------------
# Core operations
# ---------------------------------------------------------------------------


def evaluate(P: MultiPoly, x: Sequence[float]) -> float:
    """Evaluate P at a point, term by term."""
    xs = tuple(float(v) for v in x)
    if len(xs) != P.dim:
        raise DimensionMismatch(f"point has length {len(xs)}, expected {P.dim}")
    total = 0.0
    for idx, coef in P.terms.items():
        term = coef
        for v, e in zip(xs, idx):
            if e:
                term *= v**e
        total += term
    return total


def partial_derivative(P: MultiPoly, axis: int) -> MultiPoly:
    """Term-wise power-rule derivative along a 1-based axis."""
    _check_axis(axis, P.dim)
    j = axis - 1
    out: Dict[MultiIndex, float] = {}
    for idx, coef in P.terms.items():
        e = idx[j]
        if e == 0:
            continue
        key = idx[:j] + (e - 1,) + idx[j + 1 :]
        out[key] = out.get(key, 0.0) + coef * e
    return MultiPoly(P.dim, out)


def restrict(P: MultiPoly, axis: int, value: float) -> MultiPoly:
    """Substitute ``value`` into ``axis``, producing a (dim-1)-variate polynomial."""
    _check_axis(axis, P.dim)
    if P.dim == 1:
        raise ContractViolation("cannot restrict a univariate polynomial further")
    j = axis - 1
    value = float(value)
    out: Dict[MultiIndex, float] = {}
    for idx, coef in P.terms.items():
        key = idx[:j] + idx[j + 1 :]
        out[key] = out.get(key, 0.0) + coef * value ** idx[j]
    return MultiPoly(P.dim - 1, out)


def _jet_mul(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    return np.convolve(a, b)[: order + 1]


def _jet_pow(base: np.ndarray, e: int, order: int) -> np.ndarray:
    out = np.zeros(order + 1)
    out[0] = 1.0
    for _ in range(e):
        out = _jet_mul(out, base, order)
    return out


def implicit_derivatives(
    P: MultiPoly,
    point: Sequence[float],
    order: int,
    zero_tol: float = ZERO_TOL,
) -> List[float]:
    """Derivatives d^j y/dx^j, j = 1..order, of the implicit branch through ``point``.

    Solves the truncated power series of P(x0 + t, y0 + c1 t + ...) = 0 one
    coefficient at a time; each step is linear in the new coefficient with
    factor P_y(point).
    """
    from .errors import SingularTangentError

    if P.dim != 2:
        raise DimensionMismatch("implicit_derivatives needs a bivariate polynomial")
    if order < 1:
        raise ContractViolation("order must be >= 1")
    x0, y0 = float(point[0]), float(point[1])
    if abs(evaluate(P, (x0, y0))) > zero_tol:
        raise ContractViolation("point is not on the zero set within tolerance")
    py = evaluate(partial_derivative(P, 2), (x0, y0))
    if abs(py) <= zero_tol:
        raise SingularTangentError(
            f"P_y vanishes at {point!r}: vertical tangent or singular point"
        )

    xjet = np.zeros(order + 1)
    xjet[0], xjet[1] = x0, 1.0
    yjet = np.zeros(order + 1)
    yjet[0] = y0
    max_i1 = max((i[0] for i in P.terms), default=0)
    xpows = [_jet_pow(xjet, e, order) for e in range(max_i1 + 1)]

    for k in range(1, order + 1):
        comp = np.zeros(order + 1)
        for (i1, i2), coef in P.terms.items():
            comp += coef * _jet_mul(xpows[i1], _jet_pow(yjet, i2, order), order)
        yjet[k] = -comp[k] / py
    return [float(yjet[j] * math.factorial(j)) for j in range(1, order + 1)]


def max_sublevel_interval(
    P: MultiPoly,
    w: float,
    domain: Tuple[float, float],
    grid_cells: int = SUBLEVEL_GRID_CELLS,
    refine_tol: float = ROOT_TOL,
) -> float:
    """Length of the longest interval inside ``domain`` where |P| <= w.

    Uses sign analysis of |P| - w on a dense subdivision followed by
    bisection refinement of the run boundaries. Returns 0.0 when the
    sublevel set is empty.
    """
    if w <= 0:
        raise ContractViolation("w must be positive")
    if P.dim != 1 or P.degree < 1:
        raise ContractViolation("P must be a nonconstant univariate polynomial")
    lo, hi = float(domain[0]), float(domain[1])
    if not lo < hi:
        raise ContractViolation("domain must be a nonempty interval")

    coeffs = P.univariate_coeffs()
    xs = np.linspace(lo, hi, grid_cells + 1)
    vals = _npoly.polyval(xs, coeffs)
    ok = np.abs(vals) <= w
    if not ok.any():
        return 0.0

    def g(x: float) -> float:
        return abs(float(_npoly.polyval(x, coeffs))) - w

    def refine(a: float, b: float) -> float:
        # g(a) and g(b) have opposite signs; returns the crossing.
        ga = g(a)
        for _ in range(64):
            m = 0.5 * (a + b)
            gm = g(m)
            if abs(b - a) <= refine_tol:
                break
            if (ga <= 0) == (gm <= 0):
                a, ga = m, gm
            else:
                b = m
        return 0.5 * (a + b)

    best = 0.0
    padded = np.concatenate(([False], ok, [False]))
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    starts, ends = edges[::2], edges[1::2]  # ok on xs[start:end]
    for s, e in zip(starts, ends):
        left = xs[s] if s == 0 else refine(xs[s - 1], xs[s])
        right = xs[e - 1] if e == grid_cells + 1 else refine(xs[e], xs[e - 1])
        best = max(best, right - left)
    return best


# ---------------------------------------------------------------------------
# Resultants
# ---------------------------------------------------------------------------


def _coeffs_along_axis(P: MultiPoly, axis: int) -> List[MultiPoly]:
    """Coefficients of P viewed as univariate in ``axis``; entries are
    polynomials in the kept variable (bivariate input only)."""
    j = axis - 1
    keep = 1 - j
    d = max((idx[j] for idx in P.terms), default=0)
    coeffs = [dict() for _ in range(d + 1)]
    for idx, coef in P.terms.items():
        coeffs[idx[j]][(idx[keep],)] = coeffs[idx[j]].get((idx[keep],), 0.0) + coef
    return [MultiPoly(1, c) for c in coeffs]


def resultant(
    P: MultiPoly,
    Q: MultiPoly,
    eliminate: int,
    zero_tol: float = ZERO_TOL,
) -> MultiPoly:
    """Sylvester resultant of two bivariate polynomials w.r.t. one axis.

    Computed by evaluation at Chebyshev nodes and interpolation; the
    identically-zero answer (shared nonconstant factor) is detected against a
    Hadamard-scaled tolerance. Returns a univariate polynomial in the kept
    variable.
    """
    if P.dim != 2 or Q.dim != 2:
        raise DimensionMismatch("resultant expects bivariate polynomials")
    _check_axis(eliminate, 2)
    if P.is_zero or Q.is_zero:
        raise ContractViolation("resultant of the zero polynomial is undefined here")

    pc = _coeffs_along_axis(P, eliminate)
    qc = _coeffs_along_axis(Q, eliminate)
    dp, dq = len(pc) - 1, len(qc) - 1
    m = dp + dq
    if m == 0:
        return MultiPoly.univariate([1.0])

    deg_bound = dq * max(P.degree, 1) + dp * max(Q.degree, 1)
    nodes = _cheb.chebpts1(deg_bound + 1)

    pvals = np.stack([c.eval_many(nodes[:, None]) for c in pc], axis=1)
    qvals = np.stack([c.eval_many(nodes[:, None]) for c in qc], axis=1)
    mats = np.zeros((len(nodes), m, m))
    for r in range(dq):
        mats[:, r, r : r + dp + 1] = pvals[:, ::-1]
    for r in range(dp):
        mats[:, dq + r, r : r + dq + 1] = qvals[:, ::-1]
    dets = np.linalg.det(mats)

    # Hadamard-style scale so "identically zero" is judged relative to the
    # magnitude the determinant could legitimately reach.
    row_norms = np.linalg.norm(mats, axis=2)
    scale = float(np.max(np.prod(np.maximum(row_norms, 1e-30), axis=1)))
    tol = max(zero_tol, 1e3 * m * np.finfo(float).eps * scale)
    if np.max(np.abs(dets)) <= tol:
        return MultiPoly.zero(1)

    cheb_coeffs = _cheb.chebfit(nodes, dets, deg_bound)
    power = _cheb.cheb2poly(cheb_coeffs)
    power[np.abs(power) <= tol] = 0.0
    return MultiPoly.univariate(power)


# ---------------------------------------------------------------------------
# Determinant toolbox
# ---------------------------------------------------------------------------


def determinant(A: np.ndarray) -> float:
    """Determinant by partial-pivot elimination (LAPACK); capped at 64x64."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ContractViolation("determinant needs a square matrix")
    if A.shape[0] > DET_MAX_SIZE:
        raise ContractViolation(f"matrix size {A.shape[0]} exceeds cap {DET_MAX_SIZE}")
    return float(np.linalg.det(A))


def vandermonde_det(xs: Sequence[float]) -> float:
    """prod_{i<j} (x_j - x_i); the empty product for n = 1."""
    xs = [float(v) for v in xs]
    if len(xs) < 1:
        raise ContractViolation("need at least one node")
    out = 1.0
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            out *= xs[j] - xs[i]
    return out


@dataclass(frozen=True)
class Partition:
    """Weakly decreasing tuple of nonnegative integers."""

    parts: Tuple[int, ...]

    def __init__(self, parts: Iterable[int]):
        tup = tuple(int(p) for p in parts)
        if any(p < 0 for p in tup):
            raise ContractViolation("partition parts must be >= 0")
        if any(tup[i] < tup[i + 1] for i in range(len(tup) - 1)):
            raise ContractViolation("partition parts must be weakly decreasing")
        object.__setattr__(self, "parts", tup)

    def __len__(self) -> int:
        return len(self.parts)

    @property
    def size(self) -> int:
        return sum(self.parts)


def schur(lam: Partition, xs: Sequence[float], budget: int = SSYT_BUDGET) -> float:
    """Schur polynomial s_lambda(xs) by explicit SSYT enumeration.

    Rows weakly increase, columns strictly increase, entries in 1..n.
    Raises EnumerationBudgetExceeded past ``budget`` tableaux.
    """
    xs = [float(v) for v in xs]
    n = len(xs)
    rows = [p for p in lam.parts if p > 0]
    if len(lam.parts) > n:
        raise ContractViolation("partition longer than the variable list")
    if not rows:
        return 1.0

    total = 0.0
    count = 0
    ncols = rows[0]
    tableau = [[0] * r for r in rows]

    def cell_iter():
        for r, width in enumerate(rows):
            for c in range(width):
                yield r, c

    cells = list(cell_iter())

    def backtrack(pos: int, weight: float) -> None:
        nonlocal total, count
        if pos == len(cells):
            count += 1
            if count > budget:
                raise EnumerationBudgetExceeded(
                    f"SSYT enumeration exceeded budget {budget}"
                )
            total += weight
            return
        r, c = cells[pos]
        lo = tableau[r][c - 1] if c > 0 else 1
        if r > 0:
            lo = max(lo, tableau[r - 1][c] + 1)
        for v in range(lo, n + 1):
            tableau[r][c] = v
            backtrack(pos + 1, weight * xs[v - 1])
        tableau[r][c] = 0

    del ncols
    backtrack(0, 1.0)
    return total


def gen_vandermonde_det(lam: Partition, xs: Sequence[float]) -> float:
    """Determinant of the generalized Vandermonde matrix V*_ij = x_i^(lam_{n-j+1}+j-1).

    ``lam`` is padded with zeros up to len(xs).
    """
    xs = np.asarray([float(v) for v in xs])
    n = len(xs)
    if len(lam.parts) > n:
        raise ContractViolation("partition longer than the node list")
    padded = tuple(lam.parts) + (0,) * (n - len(lam.parts))
    exps = np.array([padded[n - j - 1] + j for j in range(n)])
    mat = np.power.outer(xs, exps)
    return determinant(mat)


def monic_param_count(D: int, delta: int) -> int:
    """C(D + delta, D) - 1: free coefficients of a monic degree-delta D-variate polynomial."""
    D, delta = int(D), int(delta)
    if D < 1 or delta < 1:
        raise ContractViolation("need D >= 1 and delta >= 1")
    return math.comb(D + delta, D) - 1


# ---------------------------------------------------------------------------
# Serialization helpers
# ---------------------------------------------------------------------------


def poly_to_json(P: MultiPoly) -> dict:
    return P.to_json_dict()


def poly_from_json(data: Mapping) -> MultiPoly:
    return MultiPoly.from_json_dict(data)
