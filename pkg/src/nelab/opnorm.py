"""Operator norms of ``a Id + b T`` for rank-one ``T``, plus a small dense oracle.

Methods used by :func:`norm_affine_rankone`:

* ``rows`` / ``cols``: single l-inf / l1 leaf, max row / column sum of moduli.
* ``l2-closed``: Euclidean-like spaces (every leaf l2 or one-dimensional, and
  their realifications).  The operator is ``a Id`` off ``span{x, conj f}``, so
  the norm is the top singular value of a 2x2 compression.
* ``sum2-vertex``: real l2-sums.  Every extreme point of the ball is
  ``M_s c`` with ``s`` a choice of block vertices and ``c`` a Euclidean unit
  vector, and likewise for the dual ball, so
  ``||A|| = max_{s,t} ||N_t^T A M_s||_2`` exactly.
* ``sampled``: anything else.  Lower bound from evaluations, upper bound
  from the triangle inequality; certified only when the two meet.

The oracle (:func:`matrix_norm_oracle`) works from a dense matrix and never
uses the rank-one structure: vertex enumeration for polytope balls, trace of
high Gram powers for l2, and a convexity-based refinement over the arc
parameter of the extreme family for two-block l2-sums.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import spaces
from .calculus import EntireFunction, apply_calculus
from .rankone import RankOne
from .spaces import INF, SpaceDesc, SpaceError

__all__ = [
    "NormEnclosure", "affine_matrix", "norm_affine_rankone", "matrix_norm_oracle",
    "sum2_theta_enclosure", "norm_spread", "Spread",
]

_VERTEX_COMBO_CAP = 1 << 20
_FALLBACK_SAMPLES = 256
_COLLAPSE_RTOL = 1e-12


@dataclass(frozen=True)
class NormEnclosure:
    lo: float
    hi: float
    certified: bool
    method: str

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty enclosure [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def intersects(self, other: "NormEnclosure", slack: float = 0.0) -> bool:
        return self.lo <= other.hi + slack and other.lo <= self.hi + slack

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.lo - slack <= value <= self.hi + slack


def _exact(value: float, cap: float, method: str) -> NormEnclosure:
    v = min(float(value), cap) if cap >= 0 else float(value)
    v = max(v, 0.0)
    return NormEnclosure(v, v, True, method)


def affine_matrix(a, b, T: RankOne) -> np.ndarray:
    """Dense ``a Id + b x f^T``."""
    return a * np.eye(T.dim) + b * T.matrix()


def _euclidean_like(space: SpaceDesc) -> bool:
    return all(leaf.p == 2 or leaf.n == 1 for _, leaf in spaces.leaves(space))


def _l2_closed(a, b, x: np.ndarray, f: np.ndarray) -> float:
    n = x.shape[0]
    r = np.conj(f)
    basis = []
    nx = np.linalg.norm(x)
    if nx > 0:
        basis.append(x / nx)
    w = r.astype(complex) if np.iscomplexobj(r) or np.iscomplexobj(x) else r.astype(float)
    for q in basis:
        w = w - q * np.vdot(q, w)
    nw = np.linalg.norm(w)
    if nw > 1e-14 * max(np.linalg.norm(r), 1e-300):
        basis.append(w / nw)
    m = len(basis)
    if m == 0 or b == 0:
        return abs(a)
    Q = np.stack(basis, axis=1)
    C = a * np.eye(m) + b * np.outer(Q.conj().T @ x, f @ Q)
    if m == 1:
        top = abs(C[0, 0])
    else:
        s = float(np.sum(np.abs(C) ** 2))
        d = abs(C[0, 0] * C[1, 1] - C[0, 1] * C[1, 0])
        disc = math.sqrt(max(s * s - 4 * d * d, 0.0))
        top = math.sqrt(max((s + disc) / 2, 0.0))
    return max(top, abs(a)) if n > m else top


def _vertex_reps(verts: np.ndarray) -> np.ndarray:
    """One vertex from each antipodal pair."""
    keep = []
    for v in verts:
        nz = np.flatnonzero(v)
        if v[nz[0]] > 0:
            keep.append(v)
    return np.array(keep)


def _block_choices(space: SpaceDesc) -> list[list[np.ndarray]]:
    """Per leaf, the candidate column blocks (n x k_b) for ``M_s``."""
    out = []
    n = space.dim
    for off, leaf in spaces.leaves(space):
        if leaf.p == 2 or leaf.n == 1:
            cols = np.zeros((n, leaf.n))
            cols[off:off + leaf.n, :] = np.eye(leaf.n)
            out.append([cols])
            continue
        opts = []
        for v in _vertex_reps(spaces._leaf_vertices(leaf)):
            col = np.zeros((n, 1))
            col[off:off + leaf.n, 0] = v
            opts.append(col)
        out.append(opts)
    return out


def _combos(blocks: list[list[np.ndarray]]) -> np.ndarray:
    return np.array([np.concatenate(choice, axis=1) for choice in itertools.product(*blocks)])


def _sum2_vertex_norm(space: SpaceDesc, A: np.ndarray) -> float | None:
    prim = _block_choices(space)
    dua = _block_choices(spaces.dual(space))
    count = math.prod(len(b) for b in prim) * math.prod(len(b) for b in dua)
    if count > _VERTEX_COMBO_CAP:
        return None
    M = _combos(prim)
    N = _combos(dua)
    AM = np.einsum("ij,sjk->sik", A, M)
    B = np.einsum("rni,snk->rsik", N, AM)
    return float(np.max(np.linalg.norm(B, ord=2, axis=(-2, -1))))


def _sampled(space: SpaceDesc, A: np.ndarray, cap: float, probes) -> NormEnclosure:
    lo = 0.0
    cands = list(probes)
    rng = np.random.default_rng(0)
    for _ in range(_FALLBACK_SAMPLES):
        v = rng.standard_normal(space.dim)
        if space.is_complex:
            v = v + 1j * rng.standard_normal(space.dim)
        cands.append(v)
    for y in cands:
        y = spaces.as_vector(space, y)
        ny = spaces.norm(space, y)
        if ny > 0:
            lo = max(lo, spaces.norm(space, A @ y) / ny)
    lo = min(lo, cap)
    certified = cap - lo <= _COLLAPSE_RTOL * max(1.0, cap)
    if certified:
        lo = cap
    return NormEnclosure(lo, cap, certified, "sampled")


def norm_affine_rankone(space: SpaceDesc, a, b, T: RankOne, probes=()) -> NormEnclosure:
    """Enclosure of ``||a Id + b T||`` on ``space``.

    ``probes`` are extra vectors used for lower bounds when no closed form
    applies; ``T.x`` is always probed.
    """
    if T.space.dim != space.dim:
        raise SpaceError(f"operator on dimension {T.space.dim} used on {space.dsl}")
    cap = abs(a) + abs(b) * T.norm()
    if a == 0 or b == 0 or T.norm() == 0:
        # a pure multiple of Id or of T: the norm is the cap itself
        return NormEnclosure(cap, cap, True, "trivial")
    root = space.root
    if _euclidean_like(space):
        return _exact(_l2_closed(a, b, T.x, T.f), cap, "l2-closed")
    if not space.realified and isinstance(root, spaces.Lp):
        A = np.abs(affine_matrix(a, b, T))
        if root.p == INF:
            return _exact(A.sum(axis=1).max(), cap, "rows")
        return _exact(A.sum(axis=0).max(), cap, "cols")
    A = affine_matrix(a, b, T)
    if not space.is_complex and not space.realified:
        val = _sum2_vertex_norm(space, A)
        if val is not None:
            return _exact(val, cap, "sum2-vertex")
    return _sampled(space, A, cap, [T.x, *probes])


# --------------------------------------------------------------------------
# Oracle
# --------------------------------------------------------------------------

def _trace_power_enclosure(A: np.ndarray, squarings: int = 30) -> NormEnclosure:
    n = A.shape[1]
    G = A.T @ A
    t0 = float(np.trace(G))
    if t0 <= 0:
        return NormEnclosure(0.0, 0.0, True, "oracle-trace")
    G = G / t0
    log_tr = math.log(t0)
    for _ in range(squarings):
        G = G @ G
        G = 0.5 * (G + G.T)
        t = float(np.trace(G))
        G = G / t
        log_tr = 2 * log_tr + math.log(t)
    m = 2.0 ** squarings
    hi = math.sqrt(math.exp(log_tr / m))
    lo_trace = math.sqrt(math.exp((log_tr - math.log(n)) / m))
    # columns of G^m are power iterates of all basis vectors at once
    j = int(np.argmax(np.linalg.norm(G, axis=0)))
    v = G[:, j]
    lo_vec = float(np.linalg.norm(A @ v) / np.linalg.norm(v)) if np.linalg.norm(v) > 0 else 0.0
    lo = min(max(lo_trace, lo_vec), hi)
    return NormEnclosure(lo, hi, True, "oracle-trace")


def _leaf_breakpoints(leaf: spaces.Lp, U: np.ndarray, V: np.ndarray) -> list[float]:
    """Angles in [0, pi/2] where the active pattern of ``||cos(t) U + sin(t) V||`` can change."""
    rows = [(U[i], V[i]) for i in range(leaf.n)]
    lines = list(rows)
    if leaf.p == INF:
        for (a1, b1), (a2, b2) in itertools.combinations(rows, 2):
            lines += [(a1 - a2, b1 - b2), (a1 + a2, b1 + b2)]
    out = []
    for a, b in lines:
        if a == 0 and b == 0:
            continue
        # zero of a cos(t) + b sin(t)
        t = math.atan2(-a, b) % math.pi
        if 0 < t < math.pi / 2:
            out.append(t)
    return out


def _leaf_linear(leaf: spaces.Lp, U, V, t) -> tuple[float, float]:
    """(p, q) with ``||cos U + sin V|| = p cos + q sin`` near ``t`` (no breakpoint nearby)."""
    w = math.cos(t) * U + math.sin(t) * V
    if leaf.p == INF:
        i = int(np.argmax(np.abs(w)))
        sg = 1.0 if w[i] >= 0 else -1.0
        return sg * U[i], sg * V[i]
    sg = np.where(w >= 0, 1.0, -1.0)
    return float(sg @ U), float(sg @ V)


def _arc_max_quadratic(Q: np.ndarray, t1: float, t2: float) -> tuple[float, float]:
    """max of ``sqrt([c s] Q [c s]^T)`` over theta in [t1, t2], and where it occurs."""
    def val(t):
        c, s = math.cos(t), math.sin(t)
        return math.sqrt(max(0.0, Q[0, 0] * c * c + 2 * Q[0, 1] * c * s + Q[1, 1] * s * s))

    best = max((val(t1), t1), (val(t2), t2))
    _, vec = np.linalg.eigh(Q)
    t = math.atan2(vec[1, 1], vec[0, 1]) % math.pi
    for cand in (t, t - math.pi):
        if t1 <= cand <= t2:
            best = max(best, (val(cand), cand))
    return best


def sum2_theta_enclosure(space: SpaceDesc, A: np.ndarray, tol: float = 1e-10,
                         max_iter: int = 200_000) -> NormEnclosure:
    """Certified ``||A||`` on a real two-leaf l2-sum of polytope balls.

    Maximizes ``theta -> ||A (cos(theta) s_L, sin(theta) s_R)||`` over block
    vertices ``s`` by branch and bound on theta.  On an arc of width h the
    curve lies in the triangle spanned by its end points and the tangent
    intersection, where the convex objective is bounded by
    ``max(f(t1), f(t2), f(mid)/cos(h/2))``.  Arcs free of breakpoints of the
    block norms are closed exactly: there each block norm is a single
    sinusoid and the objective is a 2x2 quadratic form in (cos, sin).
    """
    root = space.root
    if (space.is_complex or space.realified or not isinstance(root, spaces.Sum2)
            or not isinstance(root.left, spaces.Lp) or not isinstance(root.right, spaces.Lp)):
        raise SpaceError("sum2_theta_enclosure: real sum2 of two leaves only")
    for leaf in (root.left, root.right):
        if not spaces._is_polytope_leaf(leaf):
            raise SpaceError("sum2_theta_enclosure: leaves must be l1/linf (or dimension 1)")
    n = space.dim
    nl = root.left.n
    left = _vertex_reps(spaces._leaf_vertices(root.left))
    right = spaces._leaf_vertices(root.right)
    pairs, breaks = [], []
    for sl in left:
        for sr in right:
            el = np.zeros(n)
            el[:nl] = sl
            er = np.zeros(n)
            er[nl:] = sr
            u, v = A @ el, A @ er
            pairs.append((u, v))
            bp = (_leaf_breakpoints(root.left, u[:nl], v[:nl])
                  + _leaf_breakpoints(root.right, u[nl:], v[nl:]))
            breaks.append(np.array(sorted(bp)))

    def f(k, th):
        u, v = pairs[k]
        return spaces.norm(space, math.cos(th) * u + math.sin(th) * v)

    def smooth_max(k, t1, t2):
        bp = breaks[k]
        i = np.searchsorted(bp, t1, side="right")
        if i < len(bp) and bp[i] < t2:
            return None
        u, v = pairs[k]
        m = 0.5 * (t1 + t2)
        pl, ql = _leaf_linear(root.left, u[:nl], v[:nl], m)
        pr, qr = _leaf_linear(root.right, u[nl:], v[nl:], m)
        Q = np.array([[pl * pl + pr * pr, pl * ql + pr * qr],
                      [pl * ql + pr * qr, ql * ql + qr * qr]])
        return _arc_max_quadratic(Q, t1, t2)

    heap = []
    counter = itertools.count()
    lo = 0.0

    def push(k, t1, t2, f1, f2, parent_up):
        nonlocal lo
        m = 0.5 * (t1 + t2)
        fm = f(k, m)
        lo = max(lo, fm)
        exact = smooth_max(k, t1, t2)
        if exact is not None:
            value, where = exact
            lo = max(lo, f(k, where))
            up = min(max(value, f1, f2, fm), parent_up)
            closed = True
        else:
            up = min(max(f1, f2, fm / math.cos(0.5 * (t2 - t1))), parent_up)
            closed = False
        heapq.heappush(heap, (-up, next(counter), k, t1, t2, f1, f2, fm, closed))

    for k in range(len(pairs)):
        f1, f2 = f(k, 0.0), f(k, math.pi / 2)
        lo = max(lo, f1, f2)
        push(k, 0.0, math.pi / 2, f1, f2, math.inf)

    for _ in range(max_iter):
        neg_up, _, k, t1, t2, f1, f2, fm, closed = heap[0]
        hi = -neg_up
        if closed or hi - lo <= tol * max(1.0, lo):
            break
        heapq.heappop(heap)
        m = 0.5 * (t1 + t2)
        push(k, t1, m, f1, fm, hi)
        push(k, m, t2, fm, f2, hi)
    hi = max(-heap[0][0], lo)
    return NormEnclosure(lo, hi, True, "oracle-theta")


def matrix_norm_oracle(space: SpaceDesc, A, tol: float = 1e-10) -> NormEnclosure:
    """Operator norm of a dense real matrix, independent of any rank structure."""
    A = np.asarray(A)
    if A.shape != (space.dim, space.dim):
        raise SpaceError(f"matrix of shape {A.shape} on {space.dsl}")
    if space.is_complex or np.iscomplexobj(A):
        raise SpaceError("matrix_norm_oracle: real spaces and matrices only")
    if spaces.is_polytope(space):
        if space.dim > 12:
            raise SpaceError("matrix_norm_oracle: polytope dimension cap is 12")
        val = max(spaces.norm(space, A @ e) for e in spaces.extreme_points(space))
        return NormEnclosure(val, val, True, "oracle-vertices")
    if not space.realified and isinstance(space.root, spaces.Lp) and space.root.p == 2:
        if space.dim > 32:
            raise SpaceError("matrix_norm_oracle: l2 dimension cap is 32")
        return _trace_power_enclosure(A)
    if isinstance(space.root, spaces.Sum2) and space.dim <= 12:
        return sum2_theta_enclosure(space, A, tol=tol)
    raise SpaceError(f"matrix_norm_oracle: unsupported space {space}")


# --------------------------------------------------------------------------
# Spread of ||g(lam T_alpha)|| over alpha
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Spread:
    min: float
    max: float
    alpha_min: complex | float
    alpha_max: complex | float
    certified: bool

    @property
    def spread(self) -> float:
        return self.max - self.min


def _alpha_grid(space: SpaceDesc):
    if space.is_complex:
        out = [0.0]
        for r in np.linspace(0.2, 1.0, 5):
            for k in range(24):
                out.append(complex(r * np.exp(2j * np.pi * k / 24)))
        return out
    return [float(a) for a in np.linspace(-1.0, 1.0, 41)]


def norm_spread(g: EntireFunction, space: SpaceDesc, lam, grid=None) -> Spread:
    """Extremes of ``||g(lam T_alpha)||`` over ``alpha`` in the closed unit disc,
    where ``T_alpha`` is the witness pair with ``f(x) = alpha``."""
    if space.dim < 2:
        raise SpaceError("norm_spread needs dimension >= 2")
    grid = _alpha_grid(space) if grid is None else list(grid)
    best_lo = best_hi = None
    certified = True
    for alpha in grid:
        f, x = spaces.witness_pair(space, alpha)
        T = RankOne(f, x, space)
        c0, c1 = apply_calculus(g, lam, T)
        enc = norm_affine_rankone(space, c0, c1, T)
        certified &= enc.certified
        val = enc.mid
        if best_lo is None or val < best_lo[0]:
            best_lo = (val, alpha)
        if best_hi is None or val > best_hi[0]:
            best_hi = (val, alpha)
    return Spread(best_lo[0], best_hi[0], best_lo[1], best_hi[1], certified)
