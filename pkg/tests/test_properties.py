import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nelab import properties as P
from nelab import spaces as S
from nelab.calculus import Named, Poly
from nelab.report import FAILS, HOLDS, UNDECIDED, CheckReport
from nelab.spaces import SpaceError


def sp(text, field="real"):
    return S.parse_space(text, field)


REAL = S.registry("real")
ALL = S.registry()
ids = lambda s: f"{s.field}-{s.dsl}"  # noqa: E731


def _replays(report, tol=1e-9):
    for k, w in enumerate(report.witnesses):
        assert P.replay_witness(report, k) == pytest.approx(w["values"]["violation"], abs=tol)


def test_daugavet_linf2():
    r = P.check_daugavet(sp("linf(2)"), samples=30)
    assert r.verdict == FAILS
    assert r.max_violation >= 1 - 1e-9
    _replays(r)
    w = r.witnesses[0]
    assert w["values"]["lhs"] == 1 and w["values"]["rhs"] == 2


def test_daugavet_l2_3():
    r = P.check_daugavet(sp("l2(3)"), samples=30)
    assert r.verdict == FAILS and r.max_violation >= 1 - 1e-9


@pytest.mark.parametrize("space", ALL, ids=ids)
def test_daugavet_on_aligned_slice_holds(space):
    # b x* (x) x with x*(x) = ||x*|| ||x||, b >= 0
    probes = []
    for i in range(4):
        x = S.sample_sphere(space, i)
        probes.append((1.7 * i * S.support_functional(space, x), x))
    r = P.check_daugavet(space, samples=0, probes=probes)
    assert r.verdict == HOLDS and r.max_violation <= 1e-12


@pytest.mark.parametrize("space", ALL, ids=ids)
def test_omega_one_holds(space):
    r = P.check_omega(space, 1.0, samples=20)
    assert r.verdict == HOLDS and r.max_violation == 0


def test_omega_minus_one_l2():
    r = P.check_omega(sp("l2(2)"), -1.0, samples=20)
    assert r.verdict == FAILS and r.max_violation >= 1 - 1e-9
    _replays(r)


def test_omega_validation():
    with pytest.raises(ValueError, match="not unimodular"):
        P.check_omega(sp("l2(2)"), 0.5)
    with pytest.raises(ValueError):
        P.check_omega(sp("l2(2)"), 1j)


def test_omega_sum2_linf_reports_certified_verdict():
    r = P.check_omega(sp("sum2(linf(2),linf(2))"), -1.0, samples=100)
    assert r.verdict in (HOLDS, FAILS)
    _replays(r)


def test_omega_group_l2_complex_trivial():
    g = P.detect_omega_group(sp("l2(2)", "complex"), samples=4)
    assert g.classification == "trivial" and g.n == 1
    assert g.contains(1.0) and not g.contains(-1.0)


def test_omega_group_closure():
    for space in (sp("linf(2)", "complex"), sp("l1(3)", "complex")):
        g = P.detect_omega_group(space, resolution=(12, 16), samples=4)
        for surv, m in ((g.survivors_coarse, g.coarse), (g.survivors_fine, g.fine)):
            assert 0 in surv
            if g.classification != "undecided":
                s = set(surv)
                assert all((-a) % m in s for a in s)
                assert all((a + b) % m in s for a in s for b in s)


def test_omega_group_real():
    assert P.detect_omega_group(sp("l2(2)")).classification == "trivial"


@pytest.mark.parametrize("space", ALL, ids=ids)
@pytest.mark.parametrize("ab", [(2, -3), (1, 1j), (-1, 5), (0.5j, -2 + 1j)])
def test_prop_f_shape_registry(space, ab):
    a, b = ab
    if not space.is_complex and (isinstance(a, complex) or isinstance(b, complex)):
        with pytest.raises(ValueError):
            P.fixture_prop_f_shape(space, a, b)
        return
    r = P.fixture_prop_f_shape(space, a, b)
    assert r.verdict == HOLDS
    for w in r.witnesses:
        assert w["values"]["width"] <= 1e-12


def test_prop_f_shape_examples():
    r = P.fixture_prop_f_shape(sp("linf(3)"), 2, -3, (5,))
    assert r.params["omega0"] == -1
    assert r.witnesses[0]["values"]["lhs"] == pytest.approx(17)
    r = P.fixture_prop_f_shape(sp("l2(4)", "complex"), 1, 1j, (2,))
    assert r.witnesses[0]["values"]["lhs"] == pytest.approx(3)
    r = P.fixture_prop_f_shape(sp("l1(2)"), 2, -3, (0,))
    assert r.witnesses[0]["values"]["lhs"] == 2
    with pytest.raises(ValueError):
        P.fixture_prop_f_shape(sp("l1(2)"), 0, 1)


@pytest.mark.parametrize("space", REAL, ids=ids)
@pytest.mark.parametrize("g0", [-1, 0, 0.3, 2.0])
def test_lemma43_real_nonnegative_or_minus_one(space, g0):
    assert P.fixture_lemma43(space, g0).verdict == HOLDS


@pytest.mark.parametrize("space", [s for s in ALL if not P._peak_pair(s)[2] is None], ids=ids)
def test_lemma43_with_flat_face(space):
    g0s = [-1, 0.3, -0.4]
    if space.is_complex:
        g0s += [-0.5 + 0.5j, 2j]
    for g0 in g0s:
        assert P.fixture_lemma43(space, g0).verdict == HOLDS, g0


def test_lemma43_examples():
    r = P.fixture_lemma43(sp("linf(2)"), -1, (3,))
    assert r.verdict == HOLDS
    w = r.witnesses[0]
    np.testing.assert_allclose(P.decode_array(w["functional"]), [-2, 0])
    r = P.fixture_lemma43(sp("l2(2)", "complex"), -0.5 + 0.5j, (1,))
    ident = {w["values"]["identity"]: w for w in r.witnesses}
    # the one-plus branch is exact at the peak vector in every space
    assert P.replay_witness(r, 0) >= 0
    sub = [w for w in r.witnesses if w["values"]["identity"] == "one_plus_g0"]
    for w in sub:
        assert w["values"]["lhs"] == pytest.approx(1, abs=1e-12)
    with pytest.raises(ValueError):
        P.fixture_lemma43(sp("l2(2)"), -1, (0.5,))
    with pytest.raises(ValueError):
        P.fixture_lemma43(sp("l2(2)"), 0.3, (0.1,))
    assert ident  # witnesses present


def test_lemma43_smooth_ball_third_identity_fails():
    # on a Euclidean ball the g0 Id + T_t identity needs g0 >= 0 or g0 = -1
    r = P.fixture_lemma43(sp("l2(2)", "complex"), -0.5 + 0.5j)
    assert r.verdict == FAILS
    assert r.witnesses[0]["values"]["identity"] == "g0_id"
    _replays(r)


def test_tsquare_examples():
    x = np.array([1, -1, 0.9])
    f = np.array([-0.2, 0.2, 0.6])
    r = P.check_tsquare(sp("linf(3)"), "+", samples=0, probes=[(f, x)])
    assert r.verdict == FAILS
    assert r.max_violation == pytest.approx(0.1, abs=1e-9)
    _replays(r)
    r = P.check_tsquare(sp("linf(3)"), "+", samples=10, probes=[(f, x)])
    assert r.verdict == FAILS and r.max_violation >= 0.1 - 1e-9
    r = P.check_tsquare(sp("l2(2)"), "-", samples=10)
    assert r.verdict == FAILS and r.max_violation >= 1 - 1e-9
    with pytest.raises(ValueError):
        P.check_tsquare(sp("l2(2)", "complex"), "+")
    with pytest.raises(ValueError):
        P.check_tsquare(sp("l2(2)"), "+", probes=[(np.array([-1.0, 0]), np.array([1.0, 0]))])


@pytest.mark.parametrize("space", REAL, ids=ids)
def test_tsquare_support_sample_holds(space):
    probes = [(S.support_functional(space, x), x) for x in
              (S.sample_sphere(space, i) for i in range(3))]
    assert P.check_tsquare(space, "+", samples=0, probes=probes).verdict == HOLDS


def test_geometric_condition():
    r = P.search_geometric_condition(sp("linf(2)"), [1, 0], [1, 0], 0.1)
    assert r.found and r.exhaustive
    y = r.y
    assert S.norm(sp("linf(2)"), y) == pytest.approx(1)
    assert S.norm(sp("linf(2)"), np.array([1, 0]) + y) > 1.9 and y[0] > 0.9
    r = P.search_geometric_condition(sp("l2(2)"), [1, 0], [0, 1], 0.1)
    assert not r.found and r.exhaustive and r.margin < 0
    r = P.search_geometric_condition(sp("l2(2)"), [1, 0], [0, 1], 2.0)
    assert r.found
    with pytest.raises(ValueError):
        P.search_geometric_condition(sp("l2(2)"), [2, 0], [0, 1], 0.1)


def test_geometric_condition_euclidean_vs_brute():
    space = sp("l2(2)")
    th = np.linspace(0, 2 * np.pi, 20001)
    Y = np.stack([np.cos(th), np.sin(th)], axis=1)
    for seed in range(10):
        x = S.sample_sphere(space, seed)
        f = S.sample_sphere(space, seed + 100)
        for eps in (0.05, 0.3, 1.0):
            best = np.max(np.minimum(np.linalg.norm(x + Y, axis=1) - (2 - eps), Y @ f - (1 - eps)))
            r = P.search_geometric_condition(space, x, f, eps)
            assert r.margin >= best - 1e-9
            assert r.found == (r.margin > 0)


def test_geometric_condition_polytope_vs_brute():
    space = sp("l1(2)")
    rng = np.random.default_rng(3)
    for _ in range(10):
        x = S.sample_sphere(space, int(rng.integers(1000)))
        f = rng.standard_normal(2)
        f /= S.dual_norm(space, f)
        for eps in (0.05, 0.5):
            pts = [S.sample_sphere(space, [7, k]) for k in range(3000)] + list(S.extreme_points(space))
            best = max(P._geom_margin(space, x, f, y, eps) for y in pts)
            r = P.search_geometric_condition(space, x, f, eps)
            assert r.exhaustive
            if best > 1e-6:
                assert r.found


def test_slice_diameter_examples():
    e = P.slice_diameter(sp("linf(2)"), [1, 0], 0.5)
    assert e.lo == e.hi == 2 and e.certified
    assert P.slice_diameter(sp("linf(2)"), [1, 0], 1.999).lo == 2
    assert P.slice_diameter(sp("linf(2)"), [0.5, 0.5], 0.1).hi <= 0.4
    e = P.slice_diameter(sp("l2(2)"), [1, 0], 0.02)
    assert e.lo == pytest.approx(2 * math.sqrt(1 - 0.98**2))


def test_slice_diameter_monotone_in_alpha():
    space = sp("l1(3)")
    f = np.array([0.3, -1.0, 0.5])
    d = [P.slice_diameter(space, f, a).lo for a in (0.05, 0.2, 0.6, 1.2, 1.9)]
    assert all(a <= b + 1e-12 for a, b in zip(d, d[1:]))


def test_denting():
    r = P.check_denting(sp("linf(2)"), [1, 1], (0.5, 0.1, 0.01))
    assert r.verdict == HOLDS
    assert all(w["values"]["diameter"] <= w["values"]["eps"] for w in r.witnesses)
    r = P.check_denting(sp("linf(2)"), [1, 0], (0.5, 0.1))
    assert r.verdict == FAILS
    _replays(r)
    r = P.check_denting(sp("linf(2)"), [0.5, 0], (0.1,))
    assert r.verdict == FAILS
    with pytest.raises(SpaceError):
        P.check_denting(sp("l2(2)"), [1, 0])


def test_hull_examples():
    space = sp("linf(2)")
    assert P.hull_gap(space, [1, 0], 0.5, [1, 0]) == pytest.approx(1.5, abs=1e-12)
    r = P.check_hull(space, [1, 0], 0.5, [[1, 0]])
    assert r.verdict == FAILS and r.max_violation == pytest.approx(1.5)
    _replays(r)
    assert P.check_hull(space, [1, 0], 2.0).verdict == HOLDS


@pytest.mark.parametrize("space", [s for s in REAL if S.is_polytope(s) and s.dim <= 3], ids=ids)
def test_hull_gap_monotone_and_positive(space):
    rng = np.random.default_rng(1)
    x = S.extreme_points(space)[0]
    dirs = ([S.support_functional(space, x)] + list(S.facets(space))
            + list(rng.standard_normal((5, space.dim))))
    assert max(P.hull_gap(space, x, 0.05, f) for f in dirs) > 0
    for f in dirs:
        gaps = [P.hull_gap(space, x, e, f) for e in (0.05, 0.1, 0.5, 1.0, 1.5, 2.0)]
        assert all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] <= 1e-9


def test_bad_projections():
    for text in ("l2(2)", "linf(2)"):
        r = P.check_bad_projections(sp(text), samples=30)
        assert r.verdict == FAILS
        _replays(r)
    r = P.check_bad_projections(sp("l1(3)"), samples=50)
    for w in r.witnesses:
        assert w["values"]["idempotence_error"] <= 1e-12
    with pytest.raises(SpaceError):
        P.check_bad_projections(sp("l2(1)"))


@pytest.mark.parametrize("space", [s for s in ALL if s.dsl != "sum2(linf(2),linf(2))" or not s.is_complex],
                         ids=ids)
def test_dual_transfer(space):
    r = P.check_dual_transfer(space, samples=40)
    assert r.verdict == HOLDS
    if space.is_complex:
        assert P.check_dual_transfer(space, 1j, samples=10).verdict == HOLDS


def test_dual_transfer_linf_l1_100_samples():
    r = P.check_dual_transfer(sp("linf(2)"), samples=100)
    assert r.verdict == HOLDS and r.max_violation <= 1e-10


def test_scalar_cases():
    sq = Poly((0, 0, 1))
    r = P.scalar_cases(sq, [2.0, 0.0, -1.5])
    assert r.verdict == HOLDS and r.max_violation <= 1e-12
    r = P.scalar_cases(sq, [1.0], field="complex")
    assert r.verdict == FAILS
    v = r.witnesses[0]["values"]
    assert v["abs_g"] == pytest.approx(1)
    assert {round(v["abs_one_plus_g1"], 12), round(v["abs_one_plus_g2"], 12)} == {2.0, 0.0}
    _replays(r)
    # the real identities fail for functions taking negative values
    assert P.scalar_cases(Named("cos")).verdict == FAILS
    with pytest.raises(ValueError):
        P.scalar_cases(sq, field="p-adic")


def test_spread_report():
    r = P.spread_report(Poly((0, 0, 1)), sp("linf(2)"), 1)
    assert r.verdict == FAILS and r.max_violation >= 0.9
    assert P.spread_report(Poly((1, 2)), sp("linf(2)"), 1).verdict == HOLDS


@given(st.integers(0, 10**6), st.integers(1, 4))
def test_jobs_do_not_change_results(seed, jobs):
    space = sp("sum2(l1(2),linf(2))")
    a = P.check_daugavet(space, samples=15, seed=seed, jobs=1)
    b = P.check_daugavet(space, samples=15, seed=seed, jobs=jobs)
    assert a.to_dict(timing=False) == b.to_dict(timing=False)


def test_report_round_trip():
    r = P.check_omega(sp("l2(2)", "complex"), 1j, samples=5)
    back = CheckReport.from_json(r.to_json())
    assert back.to_dict() == r.to_dict()
    assert back.params["omega"] == 1j


def test_fails_verdict_witness_replays_everywhere():
    for space in REAL:
        for rep in (P.check_daugavet(space, samples=10), P.check_omega(space, -1.0, samples=10)):
            if rep.verdict == FAILS:
                assert P.replay_witness(rep) >= rep.tolerance
                _replays(rep)


def test_verdict_scope_recorded():
    assert P.check_daugavet(sp("l2(2)"), samples=1).params["scope"]
    assert UNDECIDED in ("holds", "fails", "undecided")
