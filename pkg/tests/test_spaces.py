import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nelab import spaces as S
from nelab.spaces import SpaceError


def sp(text, field="real"):
    return S.parse_space(text, field)


def test_norm_examples():
    assert S.norm(sp("linf(2)"), [1, -1]) == 1
    assert S.norm(sp("sum2(linf(2),linf(2))"), [1, 0, 1, 0]) == pytest.approx(math.sqrt(2))
    assert S.norm(sp("l1(3)"), [0.5, -0.25, 0.25]) == 1.0


def test_dual_norm_examples():
    assert S.dual_norm(sp("linf(2)"), [0.5, 0.5]) == 1
    assert S.dual_norm(sp("l2(3)"), [3, 4, 0]) == 5
    assert S.dual_norm(sp("l1(2)"), [2, -7]) == 7


def test_pair_examples():
    w = np.exp(0.3j)
    assert S.pair(np.array([1, 0]), np.array([w, 3])) == w
    assert S.pair(np.zeros(2), np.array([1.0, 2.0])) == 0
    assert S.pair(np.array([1.0, 1.0]), np.array([1.0, -1.0])) == 0


def test_support_functional_examples():
    np.testing.assert_allclose(S.support_functional(sp("linf(2)"), [1, 1]), [1, 0])
    np.testing.assert_allclose(S.support_functional(sp("l2(2)"), [3, 4]), [0.6, 0.8])
    np.testing.assert_allclose(S.support_functional(sp("l1(2)"), [0.5, -0.5]), [1, -1])


def test_support_functional_zero_vector():
    with pytest.raises(ValueError):
        S.support_functional(sp("l2(2)"), [0, 0])


@pytest.mark.parametrize("space", S.registry(), ids=lambda s: f"{s.field}-{s.dsl}")
def test_support_functional_peaks(space):
    for seed in range(5):
        v = S.sample_sphere(space, seed) * 1.7
        f = S.support_functional(space, v)
        assert S.dual_norm(space, f) == pytest.approx(1, abs=1e-12)
        assert S.pair(f, v) == pytest.approx(S.norm(space, v), abs=1e-12)


def test_witness_pair_examples():
    f, x = S.witness_pair(sp("linf(2)"), 0)
    assert S.pair(f, x) == 0
    assert S.norm(sp("linf(2)"), x) == 1
    f, x = S.witness_pair(sp("l2(2)"), 0.5)
    np.testing.assert_allclose(x, [1, 0])
    np.testing.assert_allclose(f, [0.5, math.sqrt(3) / 2])


@pytest.mark.parametrize("space", S.registry(), ids=lambda s: f"{s.field}-{s.dsl}")
def test_witness_pair_invariants(space):
    alphas = [-1.0, -0.3, 0.0, 0.5, 1.0]
    if space.is_complex:
        alphas += [0.6j, np.exp(2j) * 0.9, -0.2 - 0.1j]
    for a in alphas:
        f, x = S.witness_pair(space, a)
        assert S.norm(space, x) == pytest.approx(1, abs=1e-12)
        assert S.dual_norm(space, f) == pytest.approx(1, abs=1e-12)
        assert S.pair(f, x) == pytest.approx(a, abs=1e-12)


def test_witness_pair_rejects_large_alpha():
    with pytest.raises(ValueError):
        S.witness_pair(sp("l2(2)"), 1.5)


def test_extreme_points_and_facets():
    assert len(S.extreme_points(sp("linf(2)"))) == 4
    assert {tuple(v) for v in S.extreme_points(sp("l1(2)"))} == {(1, 0), (-1, 0), (0, 1), (0, -1)}
    assert len(S.extreme_points(sp("linf(3)"))) == 8
    assert {tuple(v) for v in S.facets(sp("linf(2)"))} == {(1, 0), (-1, 0), (0, 1), (0, -1)}
    assert len(S.facets(sp("l1(2)"))) == 4
    with pytest.raises(SpaceError):
        S.facets(sp("l2(2)"))


def test_sample_sphere_unit():
    for space in S.registry():
        for seed in range(3):
            assert S.norm(space, S.sample_sphere(space, seed)) == pytest.approx(1, abs=1e-12)


def test_parse_errors():
    with pytest.raises(SpaceError, match="unsupported exponent"):
        sp("l3(2)")
    for bad in ("linf(0)", "linf(2", "sum2(l1(2))", "foo(2)", "l2(2) x"):
        with pytest.raises(SpaceError):
            sp(bad)
    with pytest.raises(SpaceError):
        S.parse_space("l2(2)", "quaternion")


def test_dimension_mismatch():
    with pytest.raises(SpaceError):
        S.norm(sp("l2(2)"), [1, 2, 3])


@pytest.mark.parametrize("space", S.registry(), ids=lambda s: f"{s.field}-{s.dsl}")
def test_dsl_round_trip(space):
    assert S.parse_space(space.dsl, space.field) == space


def test_dual_tree():
    assert S.dual(sp("sum2(l1(2),linf(3))")).dsl == "sum2(linf(2),l1(3))"
    assert S.dual(sp("l2(4)")).dsl == "l2(4)"


def test_realify_examples():
    c = sp("l2(1)", "complex")
    v = S.realify_vector(c, np.array([1j]))
    np.testing.assert_allclose(v, [0, 1])
    assert S.norm(S.realify(c), v) == 1
    f = S.realify_functional(c, np.array([1.0 + 0j]))
    assert S.pair(f, v) == 0


@pytest.mark.parametrize("space", S.registry("complex"), ids=lambda s: s.dsl)
def test_realify_preserves_norms(space):
    R = S.realify(space)
    rng = np.random.default_rng(7)
    for _ in range(100):
        v = rng.standard_normal(space.dim) + 1j * rng.standard_normal(space.dim)
        f = rng.standard_normal(space.dim) + 1j * rng.standard_normal(space.dim)
        assert S.norm(R, S.realify_vector(space, v)) == pytest.approx(S.norm(space, v), rel=1e-13)
        assert S.pair(S.realify_functional(space, f), S.realify_vector(space, v)) == pytest.approx(
            S.pair(f, v).real, rel=1e-12, abs=1e-12)
        assert S.dual_norm(R, S.realify_functional(space, f)) == pytest.approx(
            S.dual_norm(space, f), rel=1e-12)


finite = st.floats(-1e3, 1e3, allow_nan=False)


@given(st.sampled_from(S.registry("real")), st.lists(finite, min_size=12, max_size=12),
       st.lists(finite, min_size=12, max_size=12), st.floats(-50, 50))
def test_norm_axioms(space, u, v, c):
    u = np.array(u[: space.dim])
    v = np.array(v[: space.dim])
    assert S.norm(space, c * u) == pytest.approx(abs(c) * S.norm(space, u), rel=1e-12, abs=1e-9)
    assert S.norm(space, u + v) <= S.norm(space, u) + S.norm(space, v) + 1e-9
    # Hoelder: |f(v)| <= ||f||* ||v||
    assert abs(S.pair(u, v)) <= S.dual_norm(space, u) * S.norm(space, v) * (1 + 1e-12) + 1e-9


@given(st.sampled_from(S.registry("real")), st.integers(0, 2**32))
def test_dual_norm_is_sup_over_extremes(space, seed):
    f = np.random.default_rng(seed).standard_normal(space.dim)
    if S.is_polytope(space):
        sup = max(abs(f @ e) for e in S.extreme_points(space))
        assert S.dual_norm(space, f) == pytest.approx(sup, rel=1e-12)
    else:
        y = S.sample_sphere(space, seed)
        assert abs(f @ y) <= S.dual_norm(space, f) + 1e-12


def test_edges_are_adjacent_vertices():
    space = sp("linf(3)")
    V = S.extreme_points(space)
    E = S.edges(space)
    assert len(E) == 12
    for a, b in E:
        assert np.sum(V[a] != V[b]) == 1
