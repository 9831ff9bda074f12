"""Rank-one operators ``y -> f(y) x`` on a concrete space."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import spaces
from .spaces import SpaceDesc, SpaceError

__all__ = [
    "RankOne", "apply", "scale", "power_as_rankone", "adjoint",
    "realify_operator", "random_rankone",
]


@dataclass(frozen=True, eq=False)
class RankOne:
    """The operator ``f (x) x``; ``alpha`` caches ``f(x)``."""

    f: np.ndarray
    x: np.ndarray
    space: SpaceDesc
    alpha: complex | float = field(init=False)

    def __post_init__(self):
        f = spaces.as_vector(self.space, self.f)
        x = spaces.as_vector(self.space, self.x)
        f.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "alpha", spaces.pair(f, x))

    @property
    def dim(self) -> int:
        return self.space.dim

    def matrix(self) -> np.ndarray:
        return np.outer(self.x, self.f)

    def norm(self) -> float:
        return spaces.dual_norm(self.space, self.f) * spaces.norm(self.space, self.x)

    def __call__(self, y) -> np.ndarray:
        return apply(self, y)

    def __repr__(self) -> str:
        return f"RankOne(space={self.space}, alpha={self.alpha!r})"


def apply(T: RankOne, y) -> np.ndarray:
    y = spaces.as_vector(T.space, y)
    return spaces.pair(T.f, y) * T.x


def scale(T: RankOne, lam) -> RankOne:
    """``lam * T``; the scalar goes into the functional so ``x`` is untouched."""
    return RankOne(T.f * lam, T.x, T.space)


def power_as_rankone(T: RankOne, lam, k: int):
    """``(lam T)^k == coefficient * T`` for k >= 1; returns ``(coefficient, T)``."""
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer (k=0 gives Id, not rank-one); got {k!r}")
    k = int(k)
    coef = lam if k == 1 else T.alpha ** (k - 1) * lam ** k
    return coef, T


def adjoint(T: RankOne) -> RankOne:
    """Banach adjoint ``x (x) f`` acting on the dual space."""
    return RankOne(T.x, T.f, spaces.dual(T.space))


def realify_operator(T: RankOne) -> RankOne:
    """The real-linear operator ``Re f (x) x`` on the realified space."""
    if not T.space.is_complex:
        raise SpaceError("realify_operator: operator is already real")
    return RankOne(
        spaces.realify_functional(T.space, T.f),
        spaces.realify_vector(T.space, T.x),
        spaces.realify(T.space),
    )


def random_rankone(space: SpaceDesc, seed, norm_target: float = 1.0) -> RankOne:
    """Seeded rank-one with ``||x|| = 1`` and ``||f|| = norm_target``."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(space.dim)
    f = rng.standard_normal(space.dim)
    if space.is_complex:
        x = x + 1j * rng.standard_normal(space.dim)
        f = f + 1j * rng.standard_normal(space.dim)
    x = x / spaces.norm(space, x)
    f = f * (norm_target / spaces.dual_norm(space, f))
    return RankOne(f, x, space)
