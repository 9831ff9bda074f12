"""Norm-equality checkers and exact fixtures on concrete spaces.

Every checker returns a :class:`~nelab.report.CheckReport` with a
three-valued verdict.  ``holds`` is always scoped to the family that was
sampled or enumerated (recorded in ``params["scope"]``); ``fails`` comes
with a witness whose violation is certified; anything resting on an
uncertified enclosure is ``undecided``.

Sampled checkers evaluate a fixed list of structured probes first and then
``samples`` seeded random operators.  Sample ``i`` draws from
``default_rng([seed, i])`` so results do not depend on how the sweep is
split across workers.
"""

from __future__ import annotations

import cmath
import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import spaces
from .calculus import EntireFunction
from .opnorm import NormEnclosure, _euclidean_like, norm_affine_rankone, norm_spread
from .rankone import RankOne, adjoint, random_rankone, scale
from .report import FAILS, HOLDS, UNDECIDED, CheckReport, decode_array, encode_array
from .spaces import INF, SpaceDesc, SpaceError

__all__ = [
    "check_daugavet", "check_omega", "detect_omega_group", "OmegaGroup",
    "fixture_prop_f_shape", "fixture_lemma43", "check_tsquare",
    "search_geometric_condition", "GeometricSearch", "slice_diameter",
    "check_denting", "check_hull", "hull_gap", "check_bad_projections",
    "check_dual_transfer", "scalar_cases", "spread_report", "replay_witness",
    "cut_vertices",
]

DEFAULT_TOL = 1e-9
DEFAULT_SAMPLES = 200


# --------------------------------------------------------------------------
# Shared machinery
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class _Outcome:
    """Violation interval of one sample, plus its witness record."""

    lo: float
    hi: float
    certified: bool
    witness: dict

    @property
    def value(self) -> float:
        return 0.5 * (self.lo + self.hi)


def _gap(e1: NormEnclosure, e2: NormEnclosure) -> tuple[float, float]:
    """Bounds on ``|u - v|`` for u in e1, v in e2."""
    lo = max(0.0, e1.lo - e2.hi, e2.lo - e1.hi)
    hi = max(e1.hi - e2.lo, e2.hi - e1.lo)
    return lo, hi


def _point(v: float) -> NormEnclosure:
    return NormEnclosure(v, v, True, "exact")


def _sweep(fn: Callable[[int], _Outcome], count: int, jobs: int) -> list[_Outcome]:
    if jobs <= 1 or count < 2:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, range(count)))


def _aggregate(outcomes: Sequence[_Outcome], tol: float, extra_witnesses=()):
    """Verdict, max violation and witnesses (worst first, lowest index on ties)."""
    worst = None
    for k, o in enumerate(outcomes):
        if worst is None or o.value > outcomes[worst].value:
            worst = k
    certified_fail = [k for k, o in enumerate(outcomes) if o.certified and o.lo >= tol]
    if certified_fail:
        verdict = FAILS
        # the reported witness must carry a certified violation
        k = max(certified_fail, key=lambda j: (outcomes[j].lo, -j))
        witnesses = [outcomes[k].witness]
        max_violation = outcomes[k].value
    elif outcomes and all(o.certified for o in outcomes) and all(o.hi <= tol for o in outcomes):
        verdict = HOLDS
        witnesses = [outcomes[worst].witness]
        max_violation = outcomes[worst].value
    else:
        verdict = UNDECIDED
        witnesses = [outcomes[worst].witness] if outcomes else []
        max_violation = outcomes[worst].value if outcomes else 0.0
    for w in extra_witnesses:
        if w not in witnesses:
            witnesses.append(w)
    return verdict, max_violation, witnesses


def _rng(seed, index) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(index)])


def _unit_basis(space: SpaceDesc, i: int) -> np.ndarray:
    e = np.zeros(space.dim, dtype=space.dtype)
    e[i] = 1
    return e / spaces.norm(space, e)


def _support_probes(space: SpaceDesc) -> list[tuple[np.ndarray, np.ndarray]]:
    """(f, x) pairs with ``x = e_i`` and ``f`` its support functional."""
    out = []
    for i in range(space.dim):
        x = _unit_basis(space, i)
        out.append((spaces.support_functional(space, x), x))
    return out


def _random_pair(space: SpaceDesc, seed, index) -> tuple[np.ndarray, np.ndarray]:
    T = random_rankone(space, [int(seed), int(index)])
    return T.f, T.x


def _witness(T: RankOne, **values) -> dict:
    return {"functional": encode_array(T.f), "vector": encode_array(T.x), "values": values}


def _sampled_check(name, space, pair_for, evaluate, samples, seed, tol, jobs,
                   probes, params, scope="probes+seeded-samples"):
    start = time.perf_counter()
    structured = list(probes)
    total = len(structured) + samples

    def one(i):
        if i < len(structured):
            f, x = structured[i]
        else:
            f, x = pair_for(i - len(structured))
        out = evaluate(RankOne(f, x, space))
        out.witness["values"]["sample"] = i
        return out

    outcomes = _sweep(one, total, jobs)
    verdict, worst, witnesses = _aggregate(outcomes, tol)
    return CheckReport(
        check=name, space=space.dsl, field=space.field, verdict=verdict,
        max_violation=worst, witnesses=witnesses,
        params={**params, "scope": scope}, samples=total, seed=seed,
        tolerance=tol, elapsed_ms=1000 * (time.perf_counter() - start),
    )


# --------------------------------------------------------------------------
# Daugavet equation and omega-invariance
# --------------------------------------------------------------------------

def _daugavet_outcome(space: SpaceDesc, T: RankOne) -> _Outcome:
    lhs = norm_affine_rankone(space, 1, 1, T)
    rhs = 1 + T.norm()
    lo, hi = _gap(lhs, _point(rhs))
    return _Outcome(lo, hi, lhs.certified,
                    _witness(T, lhs=lhs.mid, rhs=rhs, violation=0.5 * (lo + hi)))


def check_daugavet(space: SpaceDesc, samples: int = DEFAULT_SAMPLES, seed: int = 42,
                   tol: float = DEFAULT_TOL, jobs: int = 1, probes=None) -> CheckReport:
    """``||Id + T|| == 1 + ||T||`` over probes and seeded rank-one ``T``.

    Default probes are ``-P_i`` with ``P_i`` the norm-one projection onto
    ``e_i`` (``Id - P_i`` has norm 1 in dimension >= 2).
    """
    if probes is None:
        probes = [(-f, x) for f, x in _support_probes(space)]
    return _sampled_check(
        "daugavet", space, lambda i: _random_pair(space, seed, i),
        lambda T: _daugavet_outcome(space, T), samples, seed, tol, jobs, probes, {})


def _omega_outcome(space: SpaceDesc, omega, T: RankOne, base: NormEnclosure | None = None) -> _Outcome:
    plus = base if base is not None else norm_affine_rankone(space, 1, 1, T)
    if omega == 1:
        # both sides are the same operator, so the gap is exactly zero
        return _Outcome(0.0, 0.0, True, _witness(T, lhs=plus.mid, rhs=plus.mid, violation=0.0))
    rot = norm_affine_rankone(space, 1, omega, T)
    lo, hi = _gap(rot, plus)
    return _Outcome(lo, hi, rot.certified and plus.certified,
                    _witness(T, lhs=rot.mid, rhs=plus.mid, violation=0.5 * (lo + hi)))


def _check_unimodular(omega) -> complex | float:
    if abs(abs(omega) - 1) > 1e-12:
        raise ValueError(f"omega={omega!r} is not unimodular (|omega|={abs(omega)!r})")
    return omega


def check_omega(space: SpaceDesc, omega, samples: int = DEFAULT_SAMPLES, seed: int = 42,
                tol: float = DEFAULT_TOL, jobs: int = 1, probes=None) -> CheckReport:
    """``||Id + omega T|| == ||Id + T||`` over probes and seeded rank-one ``T``."""
    omega = _check_unimodular(omega)
    if not space.is_complex and complex(omega).imag != 0:
        raise ValueError("complex omega on a real space")
    if probes is None:
        probes = _support_probes(space)
    return _sampled_check(
        "omega", space, lambda i: _random_pair(space, seed, i),
        lambda T: _omega_outcome(space, omega, T), samples, seed, tol, jobs, probes,
        {"omega": omega})


@dataclass(frozen=True)
class OmegaGroup:
    """Estimated subgroup ``{omega : ||Id + omega T|| = ||Id + T|| for all T}``."""

    classification: str  # trivial | nth_roots | full_circle | undecided
    n: int | None
    survivors_coarse: tuple[int, ...]  # k with exp(2 pi i k / coarse) passing
    survivors_fine: tuple[int, ...]
    coarse: int
    fine: int
    undecided: int
    tolerance: float

    def contains(self, omega, resolution: float = 1e-9) -> bool:
        for k in self.survivors_coarse:
            if abs(omega - cmath.exp(2j * math.pi * k / self.coarse)) <= resolution:
                return True
        for k in self.survivors_fine:
            if abs(omega - cmath.exp(2j * math.pi * k / self.fine)) <= resolution:
                return True
        return False


def _subgroup_order(survivors: set[int], modulus: int) -> int | None:
    """Order of the subgroup of Z_modulus formed by ``survivors``, or None."""
    if 0 not in survivors:
        return None
    for a in survivors:
        if (-a) % modulus not in survivors:
            return None
        for b in survivors:
            if (a + b) % modulus not in survivors:
                return None
    return len(survivors)


def detect_omega_group(space: SpaceDesc, resolution: tuple[int, int] = (360, 1024),
                       samples: int = 32, seed: int = 42, tol: float = DEFAULT_TOL,
                       jobs: int = 1) -> OmegaGroup:
    """Classify the omega-invariance group on two root-of-unity grids.

    A real space only admits omega in {1, -1}, so only -1 is tested there.
    """
    ops = [RankOne(f, x, space) for f, x in _support_probes(space)]
    ops += [RankOne(*_random_pair(space, seed, i), space) for i in range(samples)]
    base = [norm_affine_rankone(space, 1, 1, T) for T in ops]

    def status(omega) -> str:
        certified = True
        for T, b in zip(ops, base):
            o = _omega_outcome(space, omega, T, b)
            if o.certified and o.lo >= tol:
                return FAILS
            certified &= o.certified and o.hi <= tol
        return HOLDS if certified else UNDECIDED

    if not space.is_complex:
        st = status(-1.0)
        cls = {HOLDS: "nth_roots", FAILS: "trivial", UNDECIDED: "undecided"}[st]
        surv = (0, 1) if st == HOLDS else (0,)
        return OmegaGroup(cls, 2 if st == HOLDS else (1 if st == FAILS else None),
                          surv, surv, 2, 2, int(st == UNDECIDED), tol)

    coarse, fine = resolution

    def grid_status(m):
        omegas = [cmath.exp(2j * math.pi * k / m) if k else 1.0 for k in range(m)]
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                return list(pool.map(status, omegas))
        return [status(w) for w in omegas]

    sc = grid_status(coarse)
    sf = grid_status(fine)
    undecided = sc.count(UNDECIDED) + sf.count(UNDECIDED)
    surv_c = {k for k, s in enumerate(sc) if s == HOLDS}
    surv_f = {k for k, s in enumerate(sf) if s == HOLDS}
    oc = _subgroup_order(surv_c, coarse)
    of = _subgroup_order(surv_f, fine)
    cls, n = "undecided", None
    if not undecided and oc is not None and of is not None:
        if oc == coarse and of == fine:
            cls = "full_circle"
        elif oc == 1 and of == 1:
            cls, n = "trivial", 1
        elif of == math.gcd(oc, fine) and oc < coarse:
            cls, n = "nth_roots", oc
    return OmegaGroup(cls, n, tuple(sorted(surv_c)), tuple(sorted(surv_f)),
                      coarse, fine, undecided, tol)


# --------------------------------------------------------------------------
# Exact fixtures
# --------------------------------------------------------------------------

def _fixture_report(name, space, rows, tol, params, start):
    outcomes = [_Outcome(lo, hi, cert, w) for lo, hi, cert, w in rows]
    verdict, worst, witnesses = _aggregate(outcomes, tol)
    return CheckReport(
        check=name, space=space.dsl, field=space.field, verdict=verdict,
        max_violation=worst, witnesses=witnesses, params={**params, "scope": "fixture"},
        samples=len(rows), seed=None, tolerance=tol,
        elapsed_ms=1000 * (time.perf_counter() - start))


def _require_field(space: SpaceDesc, *scalars):
    if not space.is_complex and any(complex(s).imag != 0 for s in scalars):
        raise ValueError(f"complex scalars on real space {space.dsl}")


def fixture_prop_f_shape(space: SpaceDesc, a, b, t_grid=(0, 0.5, 1, 5, 50),
                         tol: float = 1e-12) -> CheckReport:
    """``||a Id + b T_t|| == |a| + |b| t`` for ``T_t = t f (x) x``, ``f(x) = omega_0``.

    ``omega_0 = conj(b)/|b| * a/|a|`` aligns ``b T_t x`` with ``a x``.
    """
    if a == 0 or b == 0:
        raise ValueError("fixture_prop_f_shape needs a != 0 and b != 0")
    _require_field(space, a, b)
    start = time.perf_counter()
    omega0 = (np.conj(b) / abs(b)) * (a / abs(a))
    if not space.is_complex:
        omega0 = float(np.real(omega0))
    if space.dim >= 2:
        f, x = spaces.witness_pair(space, omega0)
    else:
        x = _unit_basis(space, 0)
        f = omega0 * spaces.support_functional(space, x)
    rows = []
    for t in t_grid:
        T = RankOne(t * f, x, space)
        enc = norm_affine_rankone(space, a, b, T)
        expected = abs(a) + abs(b) * t
        lo, hi = _gap(enc, _point(expected))
        rows.append((lo, hi, enc.certified, _witness(
            T, t=t, a=a, b=b, lhs=enc.mid, rhs=expected, width=enc.width,
            violation=0.5 * (lo + hi))))
    return _fixture_report("f-shape", space, rows, tol,
                           {"a": a, "b": b, "t_grid": list(t_grid), "omega0": omega0}, start)


def _peak_pair(space: SpaceDesc):
    """Unit ``x``, unit ``f`` with ``f(x) = 1`` and a second direction on the
    same face of the ball when one exists.

    Returns ``(f, x, second)`` where ``second(phase)`` gives a unit ``y`` with
    ``f(y) = 1`` whose free coordinate carries ``phase`` (None for smooth balls).
    """
    n = space.dim
    if not space.realified:
        for off, leaf in spaces.leaves(space):
            if leaf.n < 2 or leaf.p == 2:
                continue
            i, j = off, off + 1
            f = np.zeros(n, dtype=space.dtype)
            x = np.zeros(n, dtype=space.dtype)
            if leaf.p == INF:
                x[i] = x[j] = 1
                f[i] = 1

                def second(phase, i=i, j=j):
                    y = np.zeros(n, dtype=space.dtype)
                    y[i], y[j] = 1, phase
                    return y
            else:
                x[i] = 1
                f[i] = f[j] = 1

                def second(phase, j=j):
                    y = np.zeros(n, dtype=space.dtype)
                    y[j] = phase
                    return y
            return f, x, second
    x = _unit_basis(space, 0)
    return spaces.support_functional(space, x), x, None


def _phase(z) -> complex:
    z = complex(z)
    return z / abs(z) if z != 0 else 1.0


def fixture_lemma43(space: SpaceDesc, g0, t_grid=None, tol: float = 1e-12) -> CheckReport:
    """Norm identities of the rank-one families built from ``g0 = g(0)``.

    With ``f(x) = 1`` (unit ``f``, ``x``):

    * ``g0 = -1``: ``T_t = (1 - t) f (x) x`` gives ``||-Id + T_t|| = t``.
    * otherwise ``T_t = c (t - |g0|) f (x) x`` with ``c = (1+g0)/|1+g0|`` gives
      ``||(1+g0) Id + T_t|| = |1+g0| + t - |g0|``.
    * ``||g0 Id + T_t|| = t`` for the same ``T_t``.

    The first two are attained at ``x`` in every space.  The third needs a
    unit ``y`` on the face of ``f`` where ``g0 y`` and ``T_t y`` align; when
    the ball has no such face (smooth balls) and ``g0`` is not a
    nonnegative real or -1, it is reported as failing.
    """
    _require_field(space, g0)
    start = time.perf_counter()
    f, x, second = _peak_pair(space)
    P = RankOne(f, x, space)
    rows = []

    def add(identity, T, a, expected, t, probes=()):
        enc = norm_affine_rankone(space, a, 1, T, probes=probes)
        lo, hi = _gap(enc, _point(expected))
        rows.append((lo, hi, enc.certified, _witness(
            T, identity=identity, t=t, g0=g0, lhs=enc.mid, rhs=expected,
            width=enc.width, violation=0.5 * (lo + hi))))

    if g0 == -1:
        grid = (1, 1.5, 2, 3, 10) if t_grid is None else t_grid
        for t in grid:
            if t < 1:
                raise ValueError(f"t={t} outside [1, inf) for g0 = -1")
            T = scale(P, 1 - t)
            add("minus_id", T, -1, t, t)
            add("g0_id", T, g0, t, t)
    else:
        m = abs(g0)
        grid = tuple(m + d for d in (0, 0.5, 1, 2, 10)) if t_grid is None else t_grid
        c = (1 + g0) / abs(1 + g0)
        if not space.is_complex:
            c = float(np.real(c))
        for t in grid:
            if t < m:
                raise ValueError(f"t={t} below |g0|={m}")
            T = scale(P, c * (t - m))
            add("one_plus_g0", T, 1 + g0, abs(1 + g0) + t - m, t)
            probes = []
            if second is not None:
                phase = _phase(c) / _phase(g0) if g0 != 0 else 1.0
                if not space.is_complex:
                    phase = float(np.real(phase))
                probes = [second(phase)]
            add("g0_id", T, g0, t, t, probes)
    return _fixture_report("lemma43", space, rows, tol,
                           {"g0": g0, "t_grid": list(grid)}, start)


# --------------------------------------------------------------------------
# Real-case T^2 equalities
# --------------------------------------------------------------------------

def check_tsquare(space: SpaceDesc, sign: str = "+", samples: int = DEFAULT_SAMPLES,
                  seed: int = 42, tol: float = DEFAULT_TOL, jobs: int = 1,
                  probes=None) -> CheckReport:
    """Daugavet equation for ``f (x) x`` with ``sign * f(x) >= 0`` (real spaces).

    This is the sign-constrained form of ``||Id + T^2|| = 1 + ||T^2||``
    (sign ``+``) and ``||Id - T^2|| = 1 + ||T^2||`` (sign ``-``).
    """
    if space.is_complex:
        raise ValueError("check_tsquare is defined for real spaces only")
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    s = 1.0 if sign == "+" else -1.0
    if probes is None:
        probes = [(s * f, x) for f, x in _support_probes(space)]
    else:
        for f, x in probes:
            if s * spaces.pair(np.asarray(f, float), np.asarray(x, float)) < 0:
                raise ValueError("probe violates the sign constraint on f(x)")

    def pair_for(i):
        f, x = _random_pair(space, seed, i)
        if s * spaces.pair(f, x) < 0:
            f = -f
        return f, x

    return _sampled_check(
        "tsquare", space, pair_for, lambda T: _daugavet_outcome(space, T),
        samples, seed, tol, jobs, probes, {"sign": sign})


@dataclass(frozen=True)
class GeometricSearch:
    found: bool
    y: np.ndarray | None
    exhaustive: bool  # True: a negative answer is a certificate
    margin: float  # min of the two slacks at the best y (> 0 iff found)
    method: str


def _geom_margin(space, x, f, y, eps) -> float:
    return min(spaces.norm(space, x + y) - (2 - eps), float(np.real(spaces.pair(f, y))) - (1 - eps))


def _geom_polytope(space, x, f, eps) -> GeometricSearch:
    from scipy.optimize import linprog

    F = spaces.facets(space)
    n = space.dim
    best = (-math.inf, None)
    for phi in F:
        for psi in F:
            # variables (y, s): maximize s
            c = np.zeros(n + 1)
            c[-1] = -1.0
            A_ub = np.vstack([
                np.hstack([F, np.zeros((len(F), 1))]),
                np.hstack([-phi, [1.0]]),
                np.hstack([-f, [1.0]]),
            ])
            b_ub = np.concatenate([np.ones(len(F)), [float(phi @ x) - (2 - eps), -(1 - eps)]])
            A_eq = np.hstack([psi, [0.0]])[None, :]
            res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                          bounds=[(-1, 1)] * n + [(-10, 10)], method="highs")
            if res.status != 0:
                continue
            y = res.x[:n]
            m = _geom_margin(space, x, f, y, eps)
            if m > best[0]:
                best = (m, y)
            if m > 0:
                return GeometricSearch(True, y, True, m, "lp-faces")
    return GeometricSearch(False, None, True, best[0], "lp-faces")


def _geom_euclidean(space, x, f, eps) -> GeometricSearch:
    # Real Euclidean-like ball.  The slack depends on y only through <x, y>
    # and <f, y> and increases in both, so the optimum is a unit vector in
    # span{x, f}: maximize min(s1, s2) over a circle, at a peak of either
    # term or where the two terms cross.
    from scipy.optimize import brentq

    xn = np.asarray(x, float)
    r = np.asarray(f, float)

    def slack(y):
        return min(math.sqrt(max(2 + 2 * float(xn @ y), 0.0)) - (2 - eps),
                   float(r @ y) - (1 - eps))

    w = r - (r @ xn) * xn
    if np.linalg.norm(w) > 1e-14:
        e2 = w / np.linalg.norm(w)
    elif space.dim > 1:
        e2 = np.zeros_like(xn)
        e2[int(np.argmin(np.abs(xn)))] = 1
        e2 = e2 - (e2 @ xn) * xn
        e2 /= np.linalg.norm(e2)
    else:
        e2 = None
    if e2 is None:
        cands = [xn, -xn]
    else:
        A, B = float(r @ xn), float(r @ e2)
        point = lambda th: math.cos(th) * xn + math.sin(th) * e2  # noqa: E731

        def diff(th):
            return (math.sqrt(max(2 + 2 * math.cos(th), 0.0)) - (2 - eps)
                    - (A * math.cos(th) + B * math.sin(th) - (1 - eps)))

        thetas = [0.0, math.pi, math.atan2(B, A)]
        grid = np.linspace(-math.pi, math.pi, 2049)
        vals = [diff(t) for t in grid]
        for t1, t2, d1, d2 in zip(grid, grid[1:], vals, vals[1:]):
            if d1 == 0:
                thetas.append(float(t1))
            elif d1 * d2 < 0:
                thetas.append(brentq(diff, t1, t2, xtol=1e-15))
        cands = [point(t) for t in thetas]
    best = max(cands, key=slack)
    m = slack(best)
    return GeometricSearch(m > 0, best if m > 0 else None, True, m, "euclidean-arc")


def search_geometric_condition(space: SpaceDesc, x, f, eps: float, budget: int = 4096,
                               seed: int = 42) -> GeometricSearch:
    """Find unit ``y`` with ``||x + y|| > 2 - eps`` and ``f(y) > 1 - eps``."""
    x = spaces.as_vector(space, x)
    f = spaces.as_vector(space, f)
    if abs(spaces.norm(space, x) - 1) > 1e-9 or abs(spaces.dual_norm(space, f) - 1) > 1e-9:
        raise ValueError("x and f must have norm one")
    if spaces.is_polytope(space):
        return _geom_polytope(space, x, f, eps)
    if not space.is_complex and not space.realified and _euclidean_like(space):
        return _geom_euclidean(space, x, f, eps)
    best = (-math.inf, None)
    cands = [x, -x]
    for i in range(budget):
        cands.append(spaces.sample_sphere(space, [seed, i]))
    for y in cands:
        m = _geom_margin(space, x, f, y, eps)
        if m > best[0]:
            best = (m, y)
        if m > 0:
            return GeometricSearch(True, y, False, m, "sampled")
    return GeometricSearch(False, None, False, best[0], "sampled")


# --------------------------------------------------------------------------
# Slices, denting points, the hull condition
# --------------------------------------------------------------------------

def cut_vertices(space: SpaceDesc, phi, c: float) -> np.ndarray:
    """Vertices of ``B_X  cap  {phi >= c}`` for a real polytope ball."""
    V = spaces.extreme_points(space)
    phi = np.asarray(phi, float)
    vals = V @ phi
    keep = [V[k] for k in range(len(V)) if vals[k] >= c]
    for a, b in spaces.edges(space):
        da, db = vals[a] - c, vals[b] - c
        if da * db < 0:
            lam = da / (da - db)
            keep.append(V[a] + lam * (V[b] - V[a]))
    if not keep:
        return np.zeros((0, space.dim))
    return np.unique(np.round(np.array(keep), 15), axis=0)


def _diameter(space: SpaceDesc, pts: np.ndarray) -> float:
    best = 0.0
    for u, v in itertools.combinations(pts, 2):
        best = max(best, spaces.norm(space, u - v))
    return best


def slice_diameter(space: SpaceDesc, f, alpha: float, samples: int = 4000,
                   seed: int = 42) -> NormEnclosure:
    """Diameter of the closed slice ``{y in B_X : Re f(y) >= ||f|| - alpha}``."""
    f = spaces.as_vector(space, f)
    if space.is_complex:
        return slice_diameter(spaces.realify(space), spaces.realify_functional(space, f),
                              alpha, samples, seed)
    fn = spaces.dual_norm(space, f)
    c = fn - alpha
    if spaces.is_polytope(space):
        pts = cut_vertices(space, f, c)
        d = _diameter(space, pts) if len(pts) else 0.0
        return NormEnclosure(d, d, True, "vertices")
    if _euclidean_like(space):
        h = c / fn if fn > 0 else -1.0
        if space.dim == 1:
            d = 1 - max(h, -1.0) if h <= 1 else 0.0
        else:
            d = 2 * math.sqrt(max(0.0, 1 - h * h)) if h > 0 else 2.0
        return NormEnclosure(d, d, True, "euclidean-cap")
    pts = []
    for i in range(samples):
        y = spaces.sample_sphere(space, [seed, i])
        if float(np.real(f @ y)) >= c:
            pts.append(y)
        if float(np.real(f @ -y)) >= c:
            pts.append(-y)
    pts = np.array(pts[:400]) if pts else np.zeros((0, space.dim))
    lo = _diameter(space, pts) if len(pts) > 1 else 0.0
    return NormEnclosure(lo, 2.0, False, "sampled")


def _active_facets(space, x0):
    F = spaces.facets(space, cap=space.dim)
    return F[np.abs(F @ x0 - 1) <= 1e-12]


def check_denting(space: SpaceDesc, x0, eps_grid=(0.5, 0.1, 0.01)) -> CheckReport:
    """Is ``x0`` in slices of ``B_X`` of diameter at most each eps?

    Vertices: slices by the centroid of the active facet normals shrink to
    ``x0``.  Non-vertices: every slice containing ``x0`` also contains a
    vertex, so its diameter is at least the distance to the nearest vertex.
    """
    start = time.perf_counter()
    if not spaces.is_polytope(space) or space.dim > 4:
        raise SpaceError("check_denting needs a real polytope space of dimension <= 4")
    x0 = spaces.as_vector(space, x0)
    V = spaces.extreme_points(space)
    dists = [spaces.norm(space, x0 - v) for v in V]
    nearest = int(np.argmin(dists))
    lower = dists[nearest]
    witnesses, rows_ok, violations = [], [], []
    is_vertex = lower <= 1e-12
    if is_vertex:
        active = _active_facets(space, x0)
        f = active.mean(axis=0)
        f = f / spaces.dual_norm(space, f)
        for eps in eps_grid:
            found = None
            for k in range(1, 61):
                alpha = 2.0 ** -k
                d = slice_diameter(space, f, alpha).hi
                if d <= eps:
                    found = (alpha, d)
                    break
            rows_ok.append(found is not None)
            violations.append(0.0 if found else math.nan)
            if found:
                witnesses.append({"functional": encode_array(f), "vector": encode_array(x0),
                                  "values": {"eps": eps, "alpha": found[0], "diameter": found[1]}})
        verdict = HOLDS if all(rows_ok) else UNDECIDED
        worst = 0.0
    else:
        for eps in eps_grid:
            if lower > eps:
                violations.append(lower - eps)
                witnesses.append({"functional": [], "vector": encode_array(x0), "values": {
                    "eps": eps, "diameter_lower_bound": lower,
                    "nearest_vertex": encode_array(V[nearest]), "violation": lower - eps}})
        verdict = FAILS if violations else UNDECIDED
        worst = max(violations) if violations else 0.0
        if witnesses:
            witnesses.sort(key=lambda w: -w["values"]["violation"])
    return CheckReport(
        check="denting", space=space.dsl, field=space.field, verdict=verdict,
        max_violation=worst, witnesses=witnesses,
        params={"x0": encode_array(x0), "eps_grid": list(eps_grid), "scope": "exact-polytope"},
        samples=len(eps_grid), seed=None, tolerance=0.0,
        elapsed_ms=1000 * (time.perf_counter() - start))


def hull_gap(space: SpaceDesc, x, eps: float, f) -> float:
    """``||f|| - sup{f(y) : y in B_X, ||y - x|| >= 2 - eps}`` on a polytope ball."""
    if not spaces.is_polytope(space) or space.dim > 3:
        raise SpaceError("hull checks need a real polytope space of dimension <= 3")
    x = spaces.as_vector(space, x)
    f = np.asarray(f, float)
    best = -math.inf
    for phi in spaces.facets(space):
        pts = cut_vertices(space, phi, 2 - eps + float(phi @ x))
        if len(pts):
            best = max(best, float(np.max(pts @ f)))
    if best == -math.inf:
        raise ValueError("no point of the ball is at distance >= 2 - eps from x")
    return spaces.dual_norm(space, f) - best


def check_hull(space: SpaceDesc, x, eps: float, directions=None, tol: float = DEFAULT_TOL,
               seed: int = 42) -> CheckReport:
    """Does ``B_X`` equal the closed convex hull of ``{y : ||y - x|| >= 2 - eps}``?

    Tested through support gaps per direction; default directions are a
    support functional at ``x``, the facet normals and 16 seeded functionals.
    """
    start = time.perf_counter()
    x = spaces.as_vector(space, x)
    if directions is None:
        directions = [spaces.support_functional(space, x)] + list(spaces.facets(space))
        rng = np.random.default_rng([seed, 0])
        directions += list(rng.standard_normal((16, space.dim)))
    outcomes = []
    for f in directions:
        f = np.asarray(f, float)
        g = hull_gap(space, x, eps, f)
        outcomes.append(_Outcome(g, g, True, {
            "functional": encode_array(f), "vector": encode_array(x),
            "values": {"eps": eps, "gap": g, "violation": g}}))
    verdict, worst, witnesses = _aggregate(outcomes, tol)
    return CheckReport(
        check="hull", space=space.dsl, field=space.field, verdict=verdict,
        max_violation=worst, witnesses=witnesses,
        params={"x": encode_array(x), "eps": eps, "scope": "direction-grid"},
        samples=len(outcomes), seed=seed, tolerance=tol,
        elapsed_ms=1000 * (time.perf_counter() - start))


# --------------------------------------------------------------------------
# Projections, adjoints, one-dimensional cases
# --------------------------------------------------------------------------

def check_bad_projections(space: SpaceDesc, samples: int = DEFAULT_SAMPLES, seed: int = 42,
                          tol: float = DEFAULT_TOL, jobs: int = 1) -> CheckReport:
    """Is ``||Id - P|| >= 2`` for rank-one projections ``P = f (x) x``, ``f(x) = 1``?"""
    if space.dim < 2:
        raise SpaceError("check_bad_projections needs dimension >= 2")
    probes = _support_probes(space)

    def pair_for(i):
        rng = _rng(seed, i)
        x = spaces.sample_sphere(space, rng.integers(2**63))
        g = rng.standard_normal(space.dim)
        if space.is_complex:
            g = g + 1j * rng.standard_normal(space.dim)
        a = spaces.pair(g, x)
        if abs(a) < 1e-3:
            return spaces.support_functional(space, x), x
        return g / a, x

    def evaluate(P):
        enc = norm_affine_rankone(space, 1, -1, P)
        lo, hi = max(0.0, 2 - enc.hi), max(0.0, 2 - enc.lo)
        M = P.matrix()
        idem = float(np.max(np.abs(M @ M - M)))
        return _Outcome(lo, hi, enc.certified, _witness(
            P, norm_id_minus_p=enc.mid, idempotence_error=idem, violation=0.5 * (lo + hi)))

    return _sampled_check("badproj", space, pair_for, evaluate, samples, seed, tol, jobs,
                          probes, {})


def check_dual_transfer(space: SpaceDesc, omega=1.0, samples: int = DEFAULT_SAMPLES,
                        seed: int = 42, tol: float = DEFAULT_TOL, jobs: int = 1) -> CheckReport:
    """``||Id + omega T||`` on X against ``||Id + omega T*||`` on the dual."""
    omega = _check_unimodular(omega)
    _require_field(space, omega)
    dual = spaces.dual(space)

    def evaluate(T):
        e1 = norm_affine_rankone(space, 1, omega, T)
        e2 = norm_affine_rankone(dual, 1, omega, adjoint(T))
        lo, hi = _gap(e1, e2)
        return _Outcome(lo, hi, e1.certified and e2.certified, _witness(
            T, lhs=e1.mid, rhs=e2.mid, violation=0.5 * (lo + hi)))

    return _sampled_check("dual", space, lambda i: _random_pair(space, seed, i), evaluate,
                          samples, seed, tol, jobs, _support_probes(space),
                          {"omega": omega, "dual_space": dual.dsl})


def _solve(g: EntireFunction, target: complex, starts, iters: int = 100):
    for z in starts:
        z = complex(z)
        for _ in range(iters):
            val = g.evaluate(z)[0] - target
            d = g.derivative(z)
            if d == 0:
                break
            step = val / d
            z -= step
            if abs(step) <= 1e-15 * max(1.0, abs(z)):
                break
        if abs(g.evaluate(z)[0] - target) <= 1e-12 * max(1.0, abs(target)):
            return z
    return None


def scalar_cases(g: EntireFunction, grid=None, field: str = "real",
                 tol: float = 1e-12) -> CheckReport:
    """One-dimensional faces of the ``||Id + g(T)||`` equalities.

    Real field: ``|1 + g(t)| = 1 + |g(t)|`` and
    ``|1 - g(t)| = max(1 - |g(t)|, |g(t)| - 1)`` on a grid of reals.
    Complex field: pairs ``z1, z2`` with ``g(z2) = -g(z1)``, so that
    ``|g|`` agrees while ``|1 + g|`` does not.
    """
    start = time.perf_counter()
    outcomes = []
    if field == "real":
        grid = list(np.linspace(-3, 3, 25)) if grid is None else list(grid)
        for t in grid:
            w = complex(g.evaluate(t)[0])
            v1 = abs(abs(1 + w) - (1 + abs(w)))
            v2 = abs(abs(1 - w) - max(1 - abs(w), abs(w) - 1))
            v = max(v1, v2)
            outcomes.append(_Outcome(v, v, True, {"functional": [], "vector": [], "values": {
                "t": float(t), "g": w, "plus_violation": v1, "minus_violation": v2,
                "violation": v}}))
        scope = "real-grid"
    elif field == "complex":
        if grid is None:
            grid = [r * cmath.exp(2j * math.pi * k / 8) for r in (0.5, 1.0, 1.5) for k in range(8)]
        for z1 in grid:
            w1 = complex(g.evaluate(z1)[0])
            if w1 == 0:
                continue
            starts = [z1 * cmath.exp(1j * math.pi / m) for m in (2, -2, 1, 3, 4)] + list(grid)
            z2 = _solve(g, -w1, starts)
            if z2 is None:
                continue
            w2 = complex(g.evaluate(z2)[0])
            v = abs(abs(1 + w1) - abs(1 + w2))
            outcomes.append(_Outcome(v, v, True, {"functional": [], "vector": [], "values": {
                "z1": complex(z1), "z2": z2, "g1": w1, "g2": w2,
                "abs_g": abs(w1), "abs_one_plus_g1": abs(1 + w1), "abs_one_plus_g2": abs(1 + w2),
                "violation": v}}))
        scope = "complex-pairs"
    else:
        raise ValueError(f"field must be 'real' or 'complex', got {field!r}")
    verdict, worst, witnesses = _aggregate(outcomes, tol)
    if not outcomes:
        verdict = UNDECIDED
    return CheckReport(
        check="scalar", space="l2(1)", field=field, verdict=verdict, max_violation=worst,
        witnesses=witnesses, params={"g": g.dsl(), "scope": scope}, samples=len(outcomes),
        seed=None, tolerance=tol, elapsed_ms=1000 * (time.perf_counter() - start))


def spread_report(g: EntireFunction, space: SpaceDesc, lam, tol: float = DEFAULT_TOL) -> CheckReport:
    """Report form of :func:`~nelab.opnorm.norm_spread`: holds iff constant in alpha."""
    start = time.perf_counter()
    sp = norm_spread(g, space, lam)
    spread = sp.spread
    if not sp.certified:
        verdict = UNDECIDED
    else:
        verdict = HOLDS if spread <= tol else FAILS
    w = {"functional": [], "vector": [], "values": {
        "alpha_min": sp.alpha_min, "alpha_max": sp.alpha_max, "min": sp.min,
        "max": sp.max, "violation": spread}}
    return CheckReport(
        check="spread", space=space.dsl, field=space.field, verdict=verdict,
        max_violation=spread, witnesses=[w],
        params={"g": g.dsl(), "lambda": lam, "scope": "alpha-grid"}, samples=0, seed=None,
        tolerance=tol, elapsed_ms=1000 * (time.perf_counter() - start))


# --------------------------------------------------------------------------
# Witness replay
# --------------------------------------------------------------------------

def replay_witness(report: CheckReport, index: int = 0) -> float:
    """Recompute a witness's violation from its serialized form."""
    space = spaces.parse_space(report.space, report.field)
    w = report.witnesses[index]
    vals = w["values"]
    name = report.check
    if name in ("daugavet", "tsquare", "omega", "badproj", "dual", "f-shape", "lemma43"):
        T = RankOne(decode_array(w["functional"]), decode_array(w["vector"]), space)
    if name in ("daugavet", "tsquare"):
        return _daugavet_outcome(space, T).value
    if name == "omega":
        return _omega_outcome(space, report.params["omega"], T).value
    if name == "badproj":
        return max(0.0, 2 - norm_affine_rankone(space, 1, -1, T).mid)
    if name == "dual":
        om = report.params["omega"]
        e1 = norm_affine_rankone(space, 1, om, T)
        e2 = norm_affine_rankone(spaces.dual(space), 1, om, adjoint(T))
        return abs(e1.mid - e2.mid)
    if name == "f-shape":
        a, b = vals["a"], vals["b"]
        enc = norm_affine_rankone(space, a, b, T)
        return abs(enc.mid - (abs(a) + abs(b) * vals["t"]))
    if name == "lemma43":
        g0 = vals["g0"]
        a = {"minus_id": -1, "one_plus_g0": 1 + g0, "g0_id": g0}[vals["identity"]]
        probes = []
        if vals["identity"] == "g0_id":
            _, _, second = _peak_pair(space)
            if second is not None and g0 not in (0, -1):
                c = (1 + g0) / abs(1 + g0)
                phase = _phase(c) / _phase(g0)
                probes = [second(phase if space.is_complex else float(np.real(phase)))]
        enc = norm_affine_rankone(space, a, 1, T, probes=probes)
        return abs(enc.mid - vals["rhs"])
    if name == "hull":
        x = decode_array(report.params["x"])
        return hull_gap(space, x, vals["eps"], decode_array(w["functional"]))
    if name == "denting":
        x0 = decode_array(w["vector"])
        lower = min(spaces.norm(space, x0 - v) for v in spaces.extreme_points(space))
        return lower - vals["eps"]
    if name == "scalar":
        if "t" in vals:
            g = _parse_g(report.params["g"])
            wv = complex(g.evaluate(vals["t"])[0])
            return max(abs(abs(1 + wv) - (1 + abs(wv))),
                       abs(abs(1 - wv) - max(1 - abs(wv), abs(wv) - 1)))
        g = _parse_g(report.params["g"])
        w1 = complex(g.evaluate(vals["z1"])[0])
        w2 = complex(g.evaluate(vals["z2"])[0])
        return abs(abs(1 + w1) - abs(1 + w2))
    if name == "spread":
        return float(vals["violation"])
    raise ValueError(f"no replay for check {name!r}")


def _parse_g(text: str) -> EntireFunction:
    from .calculus import parse_function
    return parse_function(text)

