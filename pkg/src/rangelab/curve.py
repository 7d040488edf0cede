"""Implicit-curve analysis inside the unit square.

Marching-squares tracing with on-curve Newton refinement, grid-cell crossing
via a corner-stepping segment walk, singular point location through
resultant elimination, exact-curvature integration, and the sub-curve
refinement used by the range structures (cut at cell boundaries, at singular
points, then greedily at a curvature budget).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from .errors import (
    ContractViolation,
    DegenerateCurveError,
    PieceCapExceeded,
    SharedFactorError,
    SingularTangentError,
)
from .poly import MultiPoly, partial_derivative, resultant

Cell = Tuple[int, int]  # (row, col): cell = [c/q,(c+1)/q] x [r/q,(r+1)/q]
Box = Tuple[float, float, float, float]  # (xmin, xmax, ymin, ymax)

UNIT_BOX: Box = (0.0, 1.0, 0.0, 1.0)
RESIDUAL_TOL = 1e-9
SINGULAR_DEDUP = 1e-6
CURVATURE_BUDGET = math.pi / 4
PIECE_CAP = 64


@dataclass(frozen=True)
class Grid:
    """q x q uniform grid on the unit square."""

    q: int

    def __post_init__(self):
        if self.q < 2:
            raise ContractViolation(f"grid needs q >= 2, got {self.q}")

    @property
    def cell_size(self) -> float:
        return 1.0 / self.q

    def cell_of(self, x: float, y: float) -> Cell:
        c = min(int(x * self.q), self.q - 1) if x < 1.0 else self.q - 1
        r = min(int(y * self.q), self.q - 1) if y < 1.0 else self.q - 1
        return (max(r, 0), max(c, 0))

    def cells_of_many(self, pts: np.ndarray) -> np.ndarray:
        idx = np.floor(pts * self.q).astype(np.int64)
        return np.clip(idx, 0, self.q - 1)[:, ::-1]  # (r, c)

    def cell_bounds(self, cell: Cell) -> Box:
        r, c = cell
        return (c / self.q, (c + 1) / self.q, r / self.q, (r + 1) / self.q)

    def cell_center(self, cell: Cell) -> Tuple[float, float]:
        r, c = cell
        return ((c + 0.5) / self.q, (r + 0.5) / self.q)


@dataclass
class SubCurve:
    """A refined piece of a traced zero set, confined to one grid cell."""

    owner_cell: Cell
    samples: np.ndarray  # (m, 2), ordered along the curve
    p: np.ndarray  # first endpoint
    q: np.ndarray  # last endpoint
    kappa: float  # total absolute curvature (radians)
    singular_free: bool
    source: Optional[MultiPoly] = field(default=None, repr=False)

    @property
    def chord(self) -> np.ndarray:
        return self.q - self.p


# ---------------------------------------------------------------------------
# Tracing
# ---------------------------------------------------------------------------


def _auto_grid_n(box: Box, step: float) -> int:
    span = max(box[1] - box[0], box[3] - box[2])
    return int(min(1024, max(192, math.ceil(span / (8.0 * step)))))


def _bisect_edges(P, p0: np.ndarray, p1: np.ndarray, iters: int = 46) -> np.ndarray:
    """Vectorized bisection for sign-change brackets [p0_i, p1_i] (rows)."""
    a = p0.copy()
    b = p1.copy()
    fa = P.eval_many(a)
    sa = fa >= 0
    for _ in range(iters):
        mid = 0.5 * (a + b)
        sm = P.eval_many(mid) >= 0
        take_a = sm == sa
        a = np.where(take_a[:, None], mid, a)
        b = np.where(take_a[:, None], b, mid)
    return 0.5 * (a + b)


def _newton_project(P, Px, Py, pts: np.ndarray, tol: float, iters: int = 12):
    """Pull points onto Z(P) along the gradient; returns (points, residuals)."""
    cur = pts.copy()
    for _ in range(iters):
        f = P.eval_many(cur)
        if np.max(np.abs(f)) <= tol * 0.01:
            break
        gx = Px.eval_many(cur)
        gy = Py.eval_many(cur)
        g2 = gx * gx + gy * gy
        g2 = np.where(g2 < 1e-30, 1.0, g2)
        cur = cur - (f / g2)[:, None] * np.stack([gx, gy], axis=1)
    return cur, P.eval_many(cur)


def trace_zero_set(
    P: MultiPoly,
    box: Box = UNIT_BOX,
    step: float = 1.0 / 512,
    residual_tol: float = RESIDUAL_TOL,
    grid_n: Optional[int] = None,
) -> List[np.ndarray]:
    """Polyline approximations of Z(P) inside ``box``.

    Marching squares on a subdivision grid finds edge crossings (refined by
    bisection), segments are chained into open/closed polylines, and each
    chord is subdivided with Newton-projected samples until adjacent samples
    are at most ``step`` apart. Every emitted sample satisfies
    |P| <= residual_tol.
    """
    if P.dim != 2:
        raise ContractViolation("trace_zero_set expects a bivariate polynomial")
    if step <= 0:
        raise ContractViolation("step must be positive")
    if P.is_zero:
        raise DegenerateCurveError("polynomial vanishes identically on the box")
    if P.degree == 0:
        return []

    n = grid_n if grid_n is not None else _auto_grid_n(box, step)
    xs = np.linspace(box[0], box[1], n + 1)
    ys = np.linspace(box[2], box[3], n + 1)
    vals = P.eval_grid_2d(xs, ys)  # indexed [ix, iy]
    signs = vals >= 0

    # Edges with a sign change. Horizontal edge ('h', ix, iy) joins
    # (ix,iy)-(ix+1,iy); vertical edge ('v', ix, iy) joins (ix,iy)-(ix,iy+1).
    hmask = signs[:-1, :] != signs[1:, :]
    vmask = signs[:, :-1] != signs[:, 1:]
    h_idx = np.argwhere(hmask)
    v_idx = np.argwhere(vmask)
    if len(h_idx) == 0 and len(v_idx) == 0:
        return []

    crossings: Dict[Tuple[str, int, int], np.ndarray] = {}
    if len(h_idx):
        p0 = np.stack([xs[h_idx[:, 0]], ys[h_idx[:, 1]]], axis=1)
        p1 = np.stack([xs[h_idx[:, 0] + 1], ys[h_idx[:, 1]]], axis=1)
        pts = _bisect_edges(P, p0, p1)
        for k, (ix, iy) in enumerate(h_idx):
            crossings[("h", int(ix), int(iy))] = pts[k]
    if len(v_idx):
        p0 = np.stack([xs[v_idx[:, 0]], ys[v_idx[:, 1]]], axis=1)
        p1 = np.stack([xs[v_idx[:, 0]], ys[v_idx[:, 1] + 1]], axis=1)
        pts = _bisect_edges(P, p0, p1)
        for k, (ix, iy) in enumerate(v_idx):
            crossings[("v", int(ix), int(iy))] = pts[k]

    # Cell-by-cell segment construction.
    hm = np.zeros((n + 1, n + 1), dtype=bool)
    hm[: n, :] = hmask
    vm = np.zeros((n + 1, n + 1), dtype=bool)
    vm[:, : n] = vmask
    cell_mask = hm[:n, :n] | hm[:n, 1 : n + 1] | vm[:n, :n] | vm[1 : n + 1, :n]
    adjacency: Dict[Tuple[str, int, int], List[Tuple[str, int, int]]] = {}

    def link(e1, e2):
        adjacency.setdefault(e1, []).append(e2)
        adjacency.setdefault(e2, []).append(e1)

    for ix, iy in np.argwhere(cell_mask):
        ix, iy = int(ix), int(iy)
        edges = []
        if hm[ix, iy]:
            edges.append(("h", ix, iy))
        if vm[ix + 1, iy]:
            edges.append(("v", ix + 1, iy))
        if hm[ix, iy + 1]:
            edges.append(("h", ix, iy + 1))
        if vm[ix, iy]:
            edges.append(("v", ix, iy))
        if len(edges) == 2:
            link(edges[0], edges[1])
        elif len(edges) == 4:
            # Saddle: decide pairing by the center sign.
            center = P.eval_grid_2d(
                np.array([0.5 * (xs[ix] + xs[ix + 1])]),
                np.array([0.5 * (ys[iy] + ys[iy + 1])]),
            )[0, 0]
            corner = signs[ix, iy]
            bottom, right, top, left = edges
            if (center >= 0) == bool(corner):
                link(bottom, right)
                link(top, left)
            else:
                link(bottom, left)
                link(top, right)
        # 1- or 3-edge cells only occur with exact zeros at nodes; the
        # adjacent cells still carry the matching crossings, so skip.

    # Chain walk: open paths from degree-1 edges first, then cycles.
    visited: Set[Tuple[str, int, int]] = set()
    polylines: List[np.ndarray] = []

    def walk(start):
        chain = [start]
        visited.add(start)
        cur = start
        while True:
            nxt = None
            for cand in adjacency.get(cur, ()):
                if cand not in visited:
                    nxt = cand
                    break
            if nxt is None:
                break
            visited.add(nxt)
            chain.append(nxt)
            cur = nxt
        return chain

    endpoints = sorted(e for e, nb in adjacency.items() if len(nb) == 1)
    for e in endpoints:
        if e not in visited:
            chain = walk(e)
            polylines.append(np.array([crossings[c] for c in chain]))
    for e in sorted(adjacency):
        if e not in visited:
            chain = walk(e)
            if len(chain) >= 3:
                pts = [crossings[c] for c in chain]
                pts.append(crossings[chain[0]])  # close the loop
                polylines.append(np.array(pts))

    Px = partial_derivative(P, 1)
    Py = partial_derivative(P, 2)
    refined = []
    for line in polylines:
        if len(line) < 2:
            continue
        refined.append(_subdivide(P, Px, Py, line, step, residual_tol))
    return [r for r in refined if len(r) >= 2]


def _subdivide(P, Px, Py, line: np.ndarray, step: float, tol: float) -> np.ndarray:
    seg = np.diff(line, axis=0)
    lens = np.hypot(seg[:, 0], seg[:, 1])
    counts = np.maximum(1, np.ceil(lens / (0.9 * step)).astype(int))
    if np.all(counts == 1):
        return line
    chunks = [line[:1]]
    new_pts = []
    owners = []
    for i, m in enumerate(counts):
        for k in range(1, m):
            new_pts.append(line[i] + (k / m) * seg[i])
            owners.append(i)
    if new_pts:
        proj, res = _newton_project(P, Px, Py, np.array(new_pts), tol)
        bad = np.abs(res) > tol
        if bad.any():
            # Rare stragglers: one more heavily-damped sweep.
            proj2, res2 = _newton_project(P, Px, Py, proj[bad], tol, iters=40)
            proj[bad] = proj2
            res[bad] = res2
        keep = np.abs(res) <= tol
        inserted: Dict[int, List[np.ndarray]] = {}
        for pt, ok, owner in zip(proj, keep, owners):
            if ok:
                inserted.setdefault(owner, []).append(pt)
        for i in range(len(counts)):
            for pt in inserted.get(i, ()):
                chunks.append(pt[None, :])
            chunks.append(line[i + 1 : i + 2])
    else:
        chunks.append(line[1:])
    return np.concatenate(chunks, axis=0)


# ---------------------------------------------------------------------------
# Grid-cell crossing
# ---------------------------------------------------------------------------


def _snap_to_grid(line: np.ndarray, q: int, tol: float = 1e-8) -> np.ndarray:
    """Snap coordinates within ``tol`` of a grid line onto the line.

    Traced samples can overshoot a tangent grid line by the projection
    residual; snapping keeps such zero-dwell touches from registering on the
    far side during cell attribution.
    """
    scaled = line * q
    rounded = np.round(scaled)
    return np.where(np.abs(scaled - rounded) <= tol * q, rounded / q, line)


def _crossing_events(a, b, q: int):
    """Grid-line crossings of the open segment (a, b), as (t, axis, coord).

    Only crossings strictly inside the segment are reported: an endpoint
    sitting exactly on a line contributes no event, so zero-dwell touches of
    a boundary never step the walk.
    """
    events = []
    for axis in (0, 1):
        p0, p1 = float(a[axis]), float(b[axis])
        d = p1 - p0
        if d == 0:
            continue
        lo, hi = (p0, p1) if d > 0 else (p1, p0)
        for k in range(math.floor(lo * q) + 1, math.ceil(hi * q)):
            coord = k / q
            if lo < coord < hi:
                t = (coord - p0) / d
                if 0.0 < t < 1.0:
                    events.append((t, axis, coord))
    events.sort(key=lambda e: (e[0], e[1]))
    return events


def _segment_cells(p0, p1, q: int, grid: Grid) -> List[Cell]:
    """Cells met by the open segment (p0, p1), attributed by sub-segment
    midpoints between consecutive grid-line crossings.

    A transversal crossing exactly through a lattice corner also reports the
    x-stepped intermediate cell (the one-line-at-a-time walk convention).
    """
    events = _crossing_events(p0, p1, q)
    ts = [0.0] + [e[0] for e in events] + [1.0]
    a = np.asarray(p0, dtype=float)
    b = np.asarray(p1, dtype=float)
    out: List[Cell] = []
    for u, v in zip(ts[:-1], ts[1:]):
        if v <= u:
            continue
        mid = a + (0.5 * (u + v)) * (b - a)
        out.append(grid.cell_of(float(mid[0]), float(mid[1])))
    for i in range(len(events) - 1):
        if events[i][0] == events[i + 1][0] and events[i][1] != events[i + 1][1]:
            mid_u = a + (0.5 * (ts[i] + ts[i + 1])) * (b - a)
            mid_v = a + (0.5 * (ts[i + 2] + ts[i + 3])) * (b - a)
            before = grid.cell_of(float(mid_u[0]), float(mid_u[1]))
            after = grid.cell_of(float(mid_v[0]), float(mid_v[1]))
            out.append((before[0], after[1]))
    return out


def crossed_cells(
    P: MultiPoly,
    grid: Grid,
    trace: Optional[List[np.ndarray]] = None,
    step: Optional[float] = None,
) -> Set[Cell]:
    """Grid cells met by Z(P) inside the unit square, from traced polylines.

    Cells are attributed by chord sub-segment midpoints between grid-line
    crossings, with samples snapped onto grid lines within 1e-8 first, so a
    tangent graze leaves the far cell unmarked while transversal corner
    crossings count the intermediate cell too.
    """
    if trace is None:
        if step is None:
            step = 1.0 / (64 * grid.q)
        trace = trace_zero_set(P, UNIT_BOX, step)
    cells: Set[Cell] = set()
    for line in trace:
        if len(line) < 2:
            continue
        snapped = _snap_to_grid(line, grid.q)
        for i in range(len(snapped) - 1):
            cells.update(_segment_cells(snapped[i], snapped[i + 1], grid.q, grid))
    return cells


# ---------------------------------------------------------------------------
# Singular points and tangency counts
# ---------------------------------------------------------------------------


def _real_roots(U: MultiPoly, lo: float, hi: float, pad: float = 1e-7) -> np.ndarray:
    coeffs = U.univariate_coeffs()
    scale = np.max(np.abs(coeffs))
    if scale == 0:
        return np.array([])
    trimmed = np.trim_zeros(np.where(np.abs(coeffs) > 1e-13 * scale, coeffs, 0.0), "b")
    if len(trimmed) <= 1:
        return np.array([])
    roots = np.roots(trimmed[::-1])
    real = roots[np.abs(roots.imag) <= 1e-7].real
    return np.unique(real[(real >= lo - pad) & (real <= hi + pad)])


def _common_zero_candidates(
    P: MultiPoly, Q: MultiPoly, box: Box
) -> List[Tuple[float, float]]:
    """Candidate common zeros of P and Q in box via resultant elimination.

    Eliminates x to get y-candidates, falling back to the other orientation
    when the first resultant vanishes identically.
    """
    res_y = resultant(P, Q, eliminate=1)  # univariate in y
    if not res_y.is_zero:
        out = []
        for y0 in _real_roots(res_y, box[2], box[3]):
            for U in (P, Q):
                slice_u = U.restricted(2, float(y0))
                for x0 in _real_roots(slice_u, box[0], box[1]):
                    out.append((float(x0), float(y0)))
        return out
    res_x = resultant(P, Q, eliminate=2)  # univariate in x
    if res_x.is_zero:
        raise SharedFactorError(
            "both elimination resultants vanish: the polynomials share a factor"
        )
    out = []
    for x0 in _real_roots(res_x, box[0], box[1]):
        for U in (P, Q):
            slice_u = U.restricted(1, float(x0))
            for y0 in _real_roots(slice_u, box[2], box[3]):
                out.append((float(x0), float(y0)))
    return out


def _dedup_points(points: List[Tuple[float, float]], dist: float):
    kept: List[Tuple[float, float]] = []
    for p in sorted(points):
        if all((p[0] - k[0]) ** 2 + (p[1] - k[1]) ** 2 > dist * dist for k in kept):
            kept.append(p)
    return kept


def singular_points(
    P: MultiPoly,
    box: Box = UNIT_BOX,
    tol: float = RESIDUAL_TOL,
    dedup: float = SINGULAR_DEDUP,
) -> List[np.ndarray]:
    """Points in ``box`` where P, P_x and P_y all vanish (within ``tol``)."""
    if P.dim != 2:
        raise ContractViolation("singular_points expects a bivariate polynomial")
    Px = partial_derivative(P, 1)
    Py = partial_derivative(P, 2)
    if Px.is_zero and Py.is_zero:
        return []
    primary, secondary = (Px, Py) if not Px.is_zero else (Py, Px)
    try:
        candidates = _common_zero_candidates(P, primary, box)
    except SharedFactorError:
        if secondary.is_zero:
            raise
        candidates = _common_zero_candidates(P, secondary, box)

    found = []
    for x0, y0 in candidates:
        pt = _polish_singular(P, Px, Py, x0, y0, tol)
        if pt is None:
            continue
        x0, y0 = pt
        if not (box[0] - 1e-9 <= x0 <= box[1] + 1e-9):
            continue
        if not (box[2] - 1e-9 <= y0 <= box[3] + 1e-9):
            continue
        found.append((x0, y0))
    return [np.array(p) for p in _dedup_points(found, dedup)]


def _polish_singular(P, Px, Py, x0, y0, tol, iters=8):
    """Gauss-Newton polish on (P, Px, Py); returns a point or None."""
    pt = np.array([x0, y0])
    polys = (P, Px, Py)
    grads = [(partial_derivative(f, 1), partial_derivative(f, 2)) for f in polys]
    for _ in range(iters):
        res = np.array([f(*pt) for f in polys])
        if np.max(np.abs(res)) <= tol * 0.1:
            break
        J = np.array([[gx(*pt), gy(*pt)] for gx, gy in grads])
        try:
            step, *_ = np.linalg.lstsq(J, -res, rcond=None)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)) or np.linalg.norm(step) > 0.5:
            break
        pt = pt + step
    res = max(abs(f(*pt)) for f in polys)
    return tuple(pt) if res <= tol else None


def tangent_count_with_slope(
    P: MultiPoly,
    box: Box = UNIT_BOX,
    slope: float = 0.0,
    tol: float = 1e-7,
    dedup: float = SINGULAR_DEDUP,
) -> int:
    """Number of points of Z(P) in ``box`` whose tangent has the given slope.

    dy/dx = s on Z(P) means P_x + s P_y = 0, so this counts common zeros of
    P and that combination inside the box.
    """
    Q = partial_derivative(P, 1) + slope * partial_derivative(P, 2)
    if Q.is_zero:
        return 0
    candidates = _common_zero_candidates(P, Q, box)
    hits = []
    for x0, y0 in candidates:
        if not (box[0] - 1e-12 <= x0 <= box[1] + 1e-12):
            continue
        if not (box[2] - 1e-12 <= y0 <= box[3] + 1e-12):
            continue
        if abs(P(x0, y0)) <= tol and abs(Q(x0, y0)) <= tol:
            hits.append((x0, y0))
    return len(_dedup_points(hits, dedup))


# ---------------------------------------------------------------------------
# Curvature
# ---------------------------------------------------------------------------


def curvature_values(P: MultiPoly, samples: np.ndarray, singular_tol=RESIDUAL_TOL):
    """Exact curvature |Px^2 Pyy - 2 Px Py Pxy + Py^2 Pxx| / |grad|^3 per sample."""
    Px = partial_derivative(P, 1)
    Py = partial_derivative(P, 2)
    gx = Px.eval_many(samples)
    gy = Py.eval_many(samples)
    g2 = gx * gx + gy * gy
    if np.any(g2 <= singular_tol * singular_tol):
        raise SingularTangentError("vanishing gradient on the polyline")
    pxx = partial_derivative(Px, 1).eval_many(samples)
    pxy = partial_derivative(Px, 2).eval_many(samples)
    pyy = partial_derivative(Py, 2).eval_many(samples)
    num = np.abs(gx * gx * pyy - 2.0 * gx * gy * pxy + gy * gy * pxx)
    return num / g2**1.5


def total_abs_curvature(samples: np.ndarray, P: MultiPoly) -> float:
    """Trapezoidal integral of |dtheta/ds| along the polyline's arc length."""
    samples = np.asarray(samples, dtype=float)
    if len(samples) < 2:
        return 0.0
    kap = curvature_values(P, samples)
    seg = np.diff(samples, axis=0)
    ds = np.hypot(seg[:, 0], seg[:, 1])
    return float(np.sum(0.5 * (kap[:-1] + kap[1:]) * ds))


# ---------------------------------------------------------------------------
# Sub-curve refinement
# ---------------------------------------------------------------------------


def _boundary_point(P, pa, pb, t, axis, coord, tol):
    """Point on Z(P) on the grid line {axis = coord} between pa and pb.

    Solves along the boundary line by Newton from the chord crossing; falls
    back to the chord point when the 1D solve stalls.
    """
    guess = pa + t * (pb - pa)
    if axis == 0:
        U = P.restricted(1, coord)  # univariate in y
        v = guess[1]
    else:
        U = P.restricted(2, coord)
        v = guess[0]
    coeffs = U.univariate_coeffs()
    dcoeffs = np.polynomial.polynomial.polyder(coeffs) if len(coeffs) > 1 else None
    if dcoeffs is not None:
        for _ in range(20):
            f = float(np.polynomial.polynomial.polyval(v, coeffs))
            if abs(f) <= tol * 0.01:
                break
            d = float(np.polynomial.polynomial.polyval(v, dcoeffs))
            if d == 0.0:
                break
            vn = v - f / d
            if abs(vn - v) > 2.0 / max(len(coeffs), 2):
                break
            v = vn
    return np.array([coord, v]) if axis == 0 else np.array([v, coord])


def _split_at_cells(P, line: np.ndarray, grid: Grid, tol: float):
    """Split a polyline at grid-cell boundaries.

    Returns a list of (cell, samples) runs whose boundary crossing points are
    shared by both adjacent runs. Run ownership follows the same cell
    stepping as the crossed-cell walk, so the two stay consistent.
    """
    q = grid.q
    rc = grid.cells_of_many(line)
    runs: List[Tuple[Cell, List[np.ndarray]]] = []
    r, c = int(rc[0][0]), int(rc[0][1])
    cur_pts: List[np.ndarray] = [line[0]]

    def close(cell, pts):
        if len(pts) >= 2:
            runs.append((cell, pts))

    for i in range(len(line) - 1):
        a, b = line[i], line[i + 1]
        nxt = (int(rc[i + 1][0]), int(rc[i + 1][1]))
        if nxt == (r, c):
            cur_pts.append(b)
            continue
        for t, axis, direction, coord in _crossing_events(a, b, q):
            bp = _boundary_point(P, a, b, t, axis, coord, tol)
            cur_pts.append(bp)
            close((r, c), cur_pts)
            cur_pts = [bp]
            if axis == 0:
                c += direction
            else:
                r += direction
        cur_pts.append(b)
        if (r, c) != nxt:
            # Landed exactly on a boundary: the sample belongs to the next
            # cell by half-open attribution.
            close((r, c), cur_pts)
            cur_pts = [b]
            r, c = nxt
    close((r, c), cur_pts)

    out = []
    for cell, pts in runs:
        arr = np.array(pts)
        seg = np.diff(arr, axis=0)
        if float(np.sum(np.hypot(seg[:, 0], seg[:, 1]))) < 1e-12:
            continue
        rr = min(max(cell[0], 0), q - 1)
        cc = min(max(cell[1], 0), q - 1)
        out.append(((rr, cc), arr))
    return out


def refine_subcurves(
    P: MultiPoly,
    grid: Grid,
    step: Optional[float] = None,
    kappa_budget: float = CURVATURE_BUDGET,
    piece_cap: int = PIECE_CAP,
    singular_clearance: float = SINGULAR_DEDUP,
    trace: Optional[List[np.ndarray]] = None,
    singulars: Optional[List[np.ndarray]] = None,
) -> List[SubCurve]:
    """Cut Z(P) inside the unit square into per-cell, singular-free pieces of
    total absolute curvature at most ``kappa_budget`` each."""
    if step is None:
        step = 1.0 / (64 * grid.q)
    if trace is None:
        trace = trace_zero_set(P, UNIT_BOX, step)
    if not trace:
        return []
    if singulars is None:
        singulars = singular_points(P, UNIT_BOX)

    per_cell_counts: Dict[Cell, int] = {}
    out: List[SubCurve] = []
    for line in trace:
        for cell, pts in _split_at_cells(P, line, grid, RESIDUAL_TOL):
            for piece in _strip_singular(pts, singulars, singular_clearance):
                for sub in _split_by_curvature(P, piece, kappa_budget):
                    kappa = total_abs_curvature(sub, P)
                    per_cell_counts[cell] = per_cell_counts.get(cell, 0) + 1
                    if per_cell_counts[cell] > piece_cap:
                        raise PieceCapExceeded(
                            f"cell {cell} produced more than {piece_cap} pieces"
                        )
                    out.append(
                        SubCurve(
                            owner_cell=cell,
                            samples=sub,
                            p=sub[0].copy(),
                            q=sub[-1].copy(),
                            kappa=kappa,
                            singular_free=True,
                            source=P,
                        )
                    )
    out.sort(key=lambda s: (s.owner_cell, s.p[0], s.p[1]))
    return out


def _strip_singular(pts: np.ndarray, singulars, clearance: float):
    if not singulars:
        yield pts
        return
    d2 = np.full(len(pts), np.inf)
    for s in singulars:
        diff = pts - s[None, :]
        d2 = np.minimum(d2, diff[:, 0] ** 2 + diff[:, 1] ** 2)
    keep = d2 > clearance * clearance
    start = None
    for i, ok in enumerate(keep):
        if ok and start is None:
            start = i
        elif not ok and start is not None:
            if i - start >= 2:
                yield pts[start:i]
            start = None
    if start is not None and len(pts) - start >= 2:
        yield pts[start:]


def _split_by_curvature(P, pts: np.ndarray, budget: float):
    if len(pts) < 2:
        return
    kap = curvature_values(P, pts)
    seg = np.diff(pts, axis=0)
    ds = np.hypot(seg[:, 0], seg[:, 1])
    inc = 0.5 * (kap[:-1] + kap[1:]) * ds
    start = 0
    acc = 0.0
    for i, d in enumerate(inc):
        if acc + d > budget and i > start:
            yield pts[start : i + 1]
            start = i
            acc = d
        else:
            acc += d
    if len(pts) - start >= 2:
        yield pts[start:]


def trace_to_csv_rows(samples: np.ndarray, P: MultiPoly) -> List[Tuple[float, ...]]:
    """Rows (x, y, cumulative_arclength, cumulative_abs_curvature) for export."""
    samples = np.asarray(samples, dtype=float)
    kap = curvature_values(P, samples)
    seg = np.diff(samples, axis=0)
    ds = np.hypot(seg[:, 0], seg[:, 1])
    arc = np.concatenate(([0.0], np.cumsum(ds)))
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (kap[:-1] + kap[1:]) * ds)))
    return [
        (float(x), float(y), float(a), float(c))
        for (x, y), a, c in zip(samples, arc, cum)
    ]
