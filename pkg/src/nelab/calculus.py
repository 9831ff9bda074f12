"""Entire functions and their exact calculus on rank-one operators.

For ``T = f (x) x`` with ``alpha = f(x)`` one has ``(lam T)^k = alpha^(k-1) lam^k T``
for k >= 1, so any entire ``g = sum a_k z^k`` gives

    g(lam T) = a_0 Id + c T,   c = (g(alpha lam) - a_0) / alpha   (alpha != 0)
                               c = a_1 lam                         (alpha == 0)

``c`` is an entire function of ``alpha``; near ``alpha lam = 0`` it is
evaluated from the series to avoid cancellation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .rankone import RankOne

__all__ = [
    "EntireFunction", "Poly", "Named", "Series", "parse_function",
    "eval_scalar", "gtilde_ratio", "apply_calculus", "oracle_truncated",
    "SERIES_SWITCH",
]

# below this |alpha*lam| the ratio is summed from the series
SERIES_SWITCH = 2.0 ** -20
_SWITCH_TERMS = 8
_ORACLE_DIM_CAP = 32


def _as_scalar(z):
    z = complex(z)
    return z.real if z.imag == 0 else z


def _expm1(z: complex) -> complex:
    if z.imag == 0:
        return complex(math.expm1(z.real))
    x, y = z.real, z.imag
    em = math.expm1(x)
    s = math.sin(y / 2)
    return complex(em * math.cos(y) - 2 * s * s, math.exp(x) * math.sin(y))


def _inv_fact(k: int) -> float:
    return 1.0 / math.factorial(k) if k <= 170 else 0.0


class EntireFunction:
    """Common interface: coefficients, scalar value, and ``g - a_0``."""

    def coefficient(self, k: int) -> complex:
        raise NotImplementedError

    @property
    def a0(self):
        return _as_scalar(self.coefficient(0))

    @property
    def a1(self):
        return _as_scalar(self.coefficient(1))

    @property
    def degree(self) -> int | None:
        """Polynomial degree, or None for transcendental functions."""
        return None

    def evaluate(self, z) -> tuple[complex, float]:
        """``(g(z), radius)``; radius is 0 except for truncated series."""
        raise NotImplementedError

    def derivative(self, z) -> complex:
        raise NotImplementedError

    def gtilde(self, z) -> tuple[complex, float]:
        value, err = self.evaluate(z)
        return value - self.coefficient(0), err

    def dsl(self) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.dsl()


@dataclass(frozen=True)
class Poly(EntireFunction):
    coeffs: tuple

    def __post_init__(self):
        if len(self.coeffs) == 0:
            raise ValueError("polynomial needs at least one coefficient")
        object.__setattr__(self, "coeffs", tuple(_as_scalar(c) for c in self.coeffs))

    def coefficient(self, k: int) -> complex:
        return complex(self.coeffs[k]) if k < len(self.coeffs) else 0j

    @property
    def degree(self) -> int:
        d = len(self.coeffs) - 1
        while d > 0 and self.coeffs[d] == 0:
            d -= 1
        return d

    def evaluate(self, z):
        acc = 0j
        for c in reversed(self.coeffs):
            acc = acc * z + c
        return acc, 0.0

    def derivative(self, z) -> complex:
        acc = 0j
        for k in range(len(self.coeffs) - 1, 0, -1):
            acc = acc * z + k * self.coeffs[k]
        return acc

    def dsl(self) -> str:
        return "poly:" + ",".join(_fmt_scalar(c) for c in self.coeffs)


_NAMED_VALUE: dict[str, Callable[[complex], complex]] = {
    "exp": cmath.exp, "sin": cmath.sin, "cos": cmath.cos,
    "sinh": cmath.sinh, "cosh": cmath.cosh,
}
_NAMED_DERIV: dict[str, Callable[[complex], complex]] = {
    "exp": cmath.exp, "sin": cmath.cos, "cos": lambda z: -cmath.sin(z),
    "sinh": cmath.cosh, "cosh": cmath.sinh,
}


def _named_gtilde(name: str, z: complex) -> complex:
    if name == "exp":
        return _expm1(z)
    if name == "cos":
        s = cmath.sin(z / 2)
        return -2 * s * s
    if name == "cosh":
        s = cmath.sinh(z / 2)
        return 2 * s * s
    return _NAMED_VALUE[name](z)


@dataclass(frozen=True)
class Named(EntireFunction):
    name: str

    def __post_init__(self):
        if self.name not in _NAMED_VALUE:
            raise ValueError(f"unknown function {self.name!r}; choose from {sorted(_NAMED_VALUE)}")

    def coefficient(self, k: int) -> complex:
        c = _inv_fact(k)
        if self.name == "exp":
            return complex(c)
        if self.name in ("sin", "sinh"):
            if k % 2 == 0:
                return 0j
            return complex(c if self.name == "sinh" or k % 4 == 1 else -c)
        if k % 2 == 1:
            return 0j
        return complex(c if self.name == "cosh" or k % 4 == 0 else -c)

    def evaluate(self, z):
        return _NAMED_VALUE[self.name](complex(z)), 0.0

    def derivative(self, z) -> complex:
        return _NAMED_DERIV[self.name](complex(z))

    def gtilde(self, z):
        return _named_gtilde(self.name, complex(z)), 0.0

    def dsl(self) -> str:
        return self.name


@dataclass(frozen=True)
class Series(EntireFunction):
    """Power series given by a coefficient generator and a tail bound.

    ``tail_bound(K, R)`` must bound ``|sum_{k>K} a_k z^k|`` for ``|z| <= R``.
    The generator is called afresh for every coefficient, so it must be pure.
    """

    coef: Callable[[int], complex]
    tail_bound: Callable[[int, float], float] | None
    label: str = "series"
    tol: float = 1e-15
    max_terms: int = 512

    def coefficient(self, k: int) -> complex:
        return complex(self.coef(k))

    def _terms_for(self, r: float) -> tuple[int, float]:
        if self.tail_bound is None:
            raise ValueError(f"series {self.label!r} has no tail bound")
        K = 8
        while True:
            bound = float(self.tail_bound(K, r))
            if bound <= self.tol or K >= self.max_terms:
                return K, bound
            K *= 2

    def evaluate(self, z):
        z = complex(z)
        K, bound = self._terms_for(abs(z))
        acc = 0j
        for k in range(K, -1, -1):
            acc = acc * z + self.coefficient(k)
        return acc, bound

    def derivative(self, z) -> complex:
        z = complex(z)
        K, _ = self._terms_for(abs(z))
        acc = 0j
        for k in range(K, 0, -1):
            acc = acc * z + k * self.coefficient(k)
        return acc

    def dsl(self) -> str:
        return self.label


def _fmt_scalar(c) -> str:
    c = complex(c)
    if c.imag == 0:
        x = c.real
        return str(int(x)) if x.is_integer() and abs(x) < 1e15 else repr(x)
    return repr(c).strip("()")


def parse_function(text: str) -> EntireFunction:
    """``poly:a0,a1,...`` or one of ``exp sin cos sinh cosh``."""
    text = text.strip()
    if text.startswith("poly:"):
        body = text[5:]
        try:
            coeffs = [complex(tok.strip().replace("i", "j")) for tok in body.split(",")]
        except ValueError as exc:
            raise ValueError(f"malformed polynomial coefficients {body!r}") from exc
        return Poly(tuple(coeffs))
    if text in _NAMED_VALUE:
        return Named(text)
    raise ValueError(f"unknown function {text!r}; use poly:a0,a1,... or one of {sorted(_NAMED_VALUE)}")


def eval_scalar(g: EntireFunction, zeta) -> tuple:
    """``(g(zeta), error radius)``."""
    value, err = g.evaluate(zeta)
    return _as_scalar(value), err


def _ratio_series(g: EntireFunction, z: complex, lam) -> complex:
    # (g(z) - a0)/alpha = lam * sum_{k>=1} a_k z^(k-1)
    acc = 0j
    for k in range(_SWITCH_TERMS, 0, -1):
        acc = acc * z + g.coefficient(k)
    return lam * acc


def gtilde_ratio(g: EntireFunction, alpha, lam):
    """``(g(alpha lam) - a_0)/alpha``, continued by ``a_1 lam`` at ``alpha = 0``."""
    z = complex(alpha) * complex(lam)
    if alpha == 0:
        out = g.coefficient(1) * lam
    elif isinstance(g, Poly):
        acc = 0j
        for c in reversed(g.coeffs[1:]):
            acc = acc * z + c
        out = lam * acc
    elif abs(z) < SERIES_SWITCH:
        out = _ratio_series(g, z, lam)
    else:
        out = g.gtilde(z)[0] / alpha
    return _as_scalar(out)


def apply_calculus(g: EntireFunction, lam, T: RankOne) -> tuple:
    """Coefficients ``(c0, c1)`` with ``g(lam T) = c0 Id + c1 T``."""
    return g.a0, gtilde_ratio(g, T.alpha, lam)


def oracle_truncated(g: EntireFunction, lam, T: RankOne, K: int = 64) -> np.ndarray:
    """Dense ``sum_{k<=K} a_k (lam T)^k`` built from matrix powers."""
    n = T.dim
    if n > _ORACLE_DIM_CAP:
        raise ValueError(f"oracle_truncated: dimension {n} exceeds cap {_ORACLE_DIM_CAP}")
    if K < 1:
        raise ValueError("oracle_truncated: K must be >= 1")
    M = lam * T.matrix().astype(complex)
    power = np.eye(n, dtype=complex)
    out = g.coefficient(0) * power
    for k in range(1, K + 1):
        power = power @ M
        a = g.coefficient(k)
        if a != 0:
            out = out + a * power
    if not T.space.is_complex and np.isrealobj(lam) and all(
            g.coefficient(k).imag == 0 for k in range(K + 1)):
        return out.real
    return out
