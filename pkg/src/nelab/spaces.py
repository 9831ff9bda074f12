"""Concrete finite-dimensional normed spaces.

A space is a tree of ``Lp`` leaves (p in {1, 2, inf}) joined by ``Sum2``
nodes (Euclidean combination of block norms), over the real or complex
field.  Vectors and functionals are plain 1-D numpy arrays; a functional
acts on a vector through the bilinear sum ``sum(f * v)``.

A complex space can be *realified*: the result is a real space on twice
as many coordinates, laid out as ``[Re z, Im z]``, whose norm is the
norm of the underlying complex vector.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "Lp", "Sum2", "SpaceDesc", "SpaceError", "parse_space", "REGISTRY",
    "registry", "dual", "leaves", "norm", "dual_norm", "pair", "as_vector",
    "support_functional", "witness_pair", "extreme_points", "extreme_family",
    "facets", "edges", "is_polytope", "sample_sphere", "realify",
    "realify_vector", "realify_functional", "complexify_vector",
]

INF = math.inf


class SpaceError(ValueError):
    """Raised for malformed descriptors or unsupported space operations."""


@dataclass(frozen=True)
class Lp:
    n: int
    p: float

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise SpaceError(f"dimension must be a positive integer, got {self.n!r}")
        if self.p not in (1, 2, INF):
            raise SpaceError(f"unsupported exponent p={self.p!r}; use 1, 2 or inf")

    @property
    def dim(self) -> int:
        return int(self.n)

    def render(self) -> str:
        tag = "inf" if self.p == INF else str(int(self.p))
        return f"l{tag}({self.n})"


@dataclass(frozen=True)
class Sum2:
    left: "Node"
    right: "Node"

    @property
    def dim(self) -> int:
        return self.left.dim + self.right.dim

    def render(self) -> str:
        return f"sum2({self.left.render()},{self.right.render()})"


Node = Union[Lp, Sum2]


@dataclass(frozen=True)
class SpaceDesc:
    """Descriptor of a normed space: node tree, scalar field, realified flag."""

    root: Node
    field: str = "real"
    realified: bool = False

    def __post_init__(self):
        if self.field not in ("real", "complex"):
            raise SpaceError(f"field must be 'real' or 'complex', got {self.field!r}")
        if self.realified and self.field != "real":
            raise SpaceError("a realified space is real by construction")

    @property
    def dim(self) -> int:
        """Number of (field) coordinates of a vector."""
        return self.root.dim * (2 if self.realified else 1)

    @property
    def is_complex(self) -> bool:
        return self.field == "complex"

    @property
    def dtype(self):
        return np.complex128 if self.is_complex else np.float64

    @property
    def dsl(self) -> str:
        text = self.root.render()
        return f"realify({text})" if self.realified else text

    def complex_form(self) -> "SpaceDesc":
        """The complex space underlying a realified one."""
        if not self.realified:
            raise SpaceError("space is not realified")
        return SpaceDesc(self.root, "complex")

    def __str__(self) -> str:
        return f"{self.dsl} [{self.field}]"


# --------------------------------------------------------------------------
# DSL
# --------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<num>\d+)|(?P<sym>[(),]))")


def _tokenize(text: str) -> list[str]:
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise SpaceError(f"malformed space descriptor near {text[pos:]!r}")
        out.append(m.group(m.lastgroup))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, expected=None) -> str:
        tok = self.peek()
        if tok is None:
            raise SpaceError(f"unexpected end of descriptor {self.text!r}")
        if expected is not None and tok != expected:
            raise SpaceError(f"expected {expected!r} but found {tok!r} in {self.text!r}")
        self.i += 1
        return tok

    def node(self) -> Node:
        name = self.take()
        if name == "sum2":
            self.take("(")
            left = self.node()
            self.take(",")
            right = self.node()
            self.take(")")
            return Sum2(left, right)
        m = re.fullmatch(r"l(\w+)", name)
        if not m:
            raise SpaceError(f"unknown space constructor {name!r}")
        tag = m.group(1)
        if tag not in ("1", "2", "inf"):
            raise SpaceError(f"unsupported exponent {tag!r} in {name!r}; use l1, l2 or linf")
        self.take("(")
        num = self.take()
        if not num.isdigit() or int(num) < 1:
            raise SpaceError(f"dimension must be a positive integer, got {num!r}")
        self.take(")")
        return Lp(int(num), INF if tag == "inf" else int(tag))


def parse_space(text: str, field: str = "real") -> SpaceDesc:
    """Parse ``l1(N)``, ``l2(N)``, ``linf(N)``, ``sum2(S,S)`` (or ``realify(S)``)."""
    parser = _Parser(text)
    realified = False
    if parser.peek() == "realify":
        parser.take()
        parser.take("(")
        root = parser.node()
        parser.take(")")
        realified = True
        if field != "real":
            raise SpaceError("realify(...) denotes a real space")
    else:
        root = parser.node()
    if parser.peek() is not None:
        raise SpaceError(f"trailing input {parser.toks[parser.i:]} in {text!r}")
    return SpaceDesc(root, field, realified)


# Spaces every property is exercised on.
REGISTRY: tuple[tuple[str, str], ...] = (
    ("linf(2)", "real"),
    ("linf(3)", "real"),
    ("l1(2)", "real"),
    ("l1(3)", "real"),
    ("l2(2)", "real"),
    ("l2(3)", "real"),
    ("sum2(linf(2),linf(2))", "real"),
    ("sum2(l1(2),linf(2))", "real"),
    ("sum2(l2(2),l1(2))", "real"),
    ("linf(2)", "complex"),
    ("l1(3)", "complex"),
    ("l2(2)", "complex"),
    ("l2(4)", "complex"),
    ("sum2(l2(1),l1(1))", "complex"),
    ("sum2(linf(2),linf(2))", "complex"),
)


def registry(field: str | None = None) -> list[SpaceDesc]:
    return [parse_space(s, f) for s, f in REGISTRY if field is None or f == field]


# --------------------------------------------------------------------------
# Structure
# --------------------------------------------------------------------------

def _dual_node(node: Node) -> Node:
    if isinstance(node, Sum2):
        return Sum2(_dual_node(node.left), _dual_node(node.right))
    q = {1: INF, 2: 2, INF: 1}[node.p]
    return Lp(node.n, q)


def dual(space: SpaceDesc) -> SpaceDesc:
    """Descriptor of the dual space (coordinates paired bilinearly)."""
    return SpaceDesc(_dual_node(space.root), space.field, space.realified)


def _leaves(node: Node, offset: int, out: list):
    if isinstance(node, Sum2):
        _leaves(node.left, offset, out)
        _leaves(node.right, offset + node.left.dim, out)
    else:
        out.append((offset, node))


def leaves(space: SpaceDesc) -> list[tuple[int, Lp]]:
    """(offset, leaf) pairs in coordinate order (of the complex form if realified)."""
    out: list = []
    _leaves(space.root, 0, out)
    return out


def as_vector(space: SpaceDesc, v) -> np.ndarray:
    arr = np.asarray(v)
    if arr.ndim != 1 or arr.shape[0] != space.dim:
        raise SpaceError(f"expected a vector of length {space.dim} for {space.dsl}, got shape {arr.shape}")
    if np.iscomplexobj(arr) and not space.is_complex:
        if np.any(arr.imag != 0):
            raise SpaceError(f"complex coordinates for real space {space.dsl}")
        arr = arr.real
    return arr.astype(space.dtype, copy=False)


def _leaf_norm(v: np.ndarray, p: float) -> float:
    a = np.abs(v)
    if p == 1:
        return float(a.sum())
    if p == 2:
        return float(math.sqrt(float(np.dot(a, a))))
    return float(a.max())


def _node_norm(node: Node, v: np.ndarray) -> float:
    if isinstance(node, Sum2):
        k = node.left.dim
        return math.hypot(_node_norm(node.left, v[:k]), _node_norm(node.right, v[k:]))
    return _leaf_norm(v, node.p)


def complexify_vector(space: SpaceDesc, v) -> np.ndarray:
    """Inverse of :func:`realify_vector`."""
    v = as_vector(space, v)
    n = space.root.dim
    return v[:n] + 1j * v[n:]


def norm(space: SpaceDesc, v) -> float:
    v = as_vector(space, v)
    if space.realified:
        return _node_norm(space.root, complexify_vector(space, v))
    return _node_norm(space.root, v)


def dual_norm(space: SpaceDesc, f) -> float:
    f = as_vector(space, f)
    if space.realified:
        n = space.root.dim
        return _node_norm(_dual_node(space.root), f[:n] - 1j * f[n:])
    return _node_norm(_dual_node(space.root), f)


def pair(f, v):
    """Evaluate the functional ``f`` at ``v``: ``sum_j f_j v_j``."""
    f = np.asarray(f)
    v = np.asarray(v)
    if f.shape != v.shape:
        raise SpaceError(f"dimension mismatch: functional {f.shape} vs vector {v.shape}")
    val = complex(np.dot(f, v))
    if not (np.iscomplexobj(f) or np.iscomplexobj(v)):
        return val.real
    return val


# --------------------------------------------------------------------------
# Support functionals and witness pairs
# --------------------------------------------------------------------------

def _phase_conj(z):
    """conj(z)/|z| (the unimodular u with u*z = |z|); 1 when z = 0."""
    a = abs(z)
    return np.conj(z) / a if a > 0 else 1.0


def _support_node(node: Node, v: np.ndarray) -> tuple[np.ndarray, float]:
    if isinstance(node, Sum2):
        k = node.left.dim
        fl, nl = _support_node(node.left, v[:k])
        fr, nr = _support_node(node.right, v[k:])
        total = math.hypot(nl, nr)
        if total == 0:
            return np.zeros_like(v), 0.0
        return np.concatenate([fl * (nl / total), fr * (nr / total)]), total
    a = np.abs(v)
    f = np.zeros_like(v)
    if node.p == INF:
        val = float(a.max())
        if val > 0:
            i = int(np.argmax(a))  # lowest attaining index
            f[i] = _phase_conj(v[i])
        return f, val
    if node.p == 1:
        val = float(a.sum())
        nz = a > 0
        f[nz] = np.conj(v[nz]) / a[nz]
        return f, val
    val = float(math.sqrt(float(np.dot(a, a))))
    if val > 0:
        f = np.conj(v) / val
    return f, val


def support_functional(space: SpaceDesc, v) -> np.ndarray:
    """Norm-one functional attaining the norm of ``v`` (lowest-index ties)."""
    v = as_vector(space, v)
    if space.realified:
        z = complexify_vector(space, v)
        g = support_functional(space.complex_form(), z)
        return realify_functional(space.complex_form(), g)
    f, val = _support_node(space.root, v)
    if val == 0:
        raise SpaceError("support functional of the zero vector is undefined")
    return f.astype(space.dtype)


def witness_pair(space: SpaceDesc, alpha) -> tuple[np.ndarray, np.ndarray]:
    """Unit functional and unit vector with ``pair(f, x) == alpha``.

    Needs two coordinates; inside one leaf of dimension >= 2 when possible,
    otherwise two one-dimensional leaves of an l2-sum.
    """
    if space.dim < 2:
        raise SpaceError("witness_pair needs dimension >= 2")
    if abs(alpha) > 1 + 1e-15:
        raise SpaceError(f"|alpha| must be <= 1, got {abs(alpha)}")
    if space.realified:
        if complex(alpha).imag != 0:
            raise SpaceError("alpha must be real on a realified space")
        cspace = space.complex_form()
        if cspace.dim >= 2:
            f, x = witness_pair(cspace, complex(alpha).real)
            return realify_functional(cspace, f), realify_vector(cspace, x)
        # realified l(1): C viewed as R^2 with Euclidean norm
        a = float(complex(alpha).real)
        return np.array([a, math.sqrt(max(0.0, 1 - a * a))]), np.array([1.0, 0.0])

    alpha = complex(alpha) if space.is_complex else float(np.real(alpha))
    r = min(abs(alpha), 1.0)
    omega = alpha / abs(alpha) if abs(alpha) > 0 else 1.0
    f = np.zeros(space.dim, dtype=space.dtype)
    x = np.zeros(space.dim, dtype=space.dtype)
    for off, leaf in leaves(space):
        if leaf.n < 2:
            continue
        i, j = off, off + 1
        if leaf.p == INF:
            x[i] = x[j] = 1
            f[i] = omega * (1 + r) / 2
            f[j] = -omega * (1 - r) / 2
        elif leaf.p == 1:
            x[i] = (1 + r) / 2
            x[j] = -(1 - r) / 2
            f[i] = f[j] = omega
        else:
            x[i] = 1
            f[i] = alpha
            f[j] = math.sqrt(max(0.0, 1 - r * r))
        return f, x
    # only one-dimensional leaves: two coordinates combine euclideanly
    i, j = 0, 1
    x[i] = 1
    f[i] = alpha
    f[j] = math.sqrt(max(0.0, 1 - r * r))
    return f, x


# --------------------------------------------------------------------------
# Polytope geometry
# --------------------------------------------------------------------------

def _is_polytope_leaf(leaf: Lp) -> bool:
    return leaf.p in (1, INF) or leaf.n == 1


def is_polytope(space: SpaceDesc) -> bool:
    """True for real single-leaf spaces whose ball is a polytope."""
    return (not space.is_complex and not space.realified
            and isinstance(space.root, Lp) and _is_polytope_leaf(space.root))


def _require_polytope(space: SpaceDesc, what: str):
    if space.is_complex:
        raise SpaceError(f"{what}: complex balls are not polytopes")
    if space.realified:
        raise SpaceError(f"{what}: realified balls are not polytopes")
    if isinstance(space.root, Sum2):
        raise SpaceError(f"{what}: l2-sum balls are not polytopes; use extreme_family")
    if not _is_polytope_leaf(space.root):
        raise SpaceError(f"{what}: l2 ball is not a polytope (continuum of extreme points)")


def _leaf_vertices(leaf: Lp) -> np.ndarray:
    n = leaf.n
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if leaf.p == INF:
        return np.array(list(itertools.product((1.0, -1.0), repeat=n)))
    if leaf.p == 1:
        eye = np.eye(n)
        return np.concatenate([eye, -eye])
    raise SpaceError("l2 ball has no vertex list")


def extreme_points(space: SpaceDesc) -> np.ndarray:
    """Vertices of the unit ball of a real polytope space, one per row."""
    _require_polytope(space, "extreme_points")
    return _leaf_vertices(space.root)


@dataclass(frozen=True)
class ExtremeFamily:
    """Extreme points of an l2-sum ball: ``(c_1 s_1, ..., c_k s_k)`` with
    ``c`` on the Euclidean unit sphere of R^k, ``s_b`` a vertex of leaf b
    (rows of ``vertices[b]``) or any unit vector when ``vertices[b]`` is None."""

    offsets: tuple[int, ...]
    dims: tuple[int, ...]
    vertices: tuple[np.ndarray | None, ...]


def extreme_family(space: SpaceDesc) -> ExtremeFamily:
    if space.is_complex or space.realified:
        raise SpaceError("extreme_family: real spaces only")
    offs, dims, verts = [], [], []
    for off, leaf in leaves(space):
        offs.append(off)
        dims.append(leaf.n)
        verts.append(_leaf_vertices(leaf) if _is_polytope_leaf(leaf) and leaf.n > 1 else None)
    return ExtremeFamily(tuple(offs), tuple(dims), tuple(verts))


def facets(space: SpaceDesc, cap: int = 6) -> np.ndarray:
    """Facet functionals (rows) with ``norm(y) == max(facets @ y)``."""
    _require_polytope(space, "facets")
    if space.dim > cap:
        raise SpaceError(f"facets: dimension {space.dim} exceeds cap {cap}")
    return _leaf_vertices(_dual_node(space.root))


def edges(space: SpaceDesc) -> list[tuple[int, int]]:
    """Index pairs into :func:`extreme_points` forming the edges of the ball."""
    verts = extreme_points(space)
    leaf = space.root
    out = []
    for a, b in itertools.combinations(range(len(verts)), 2):
        u, v = verts[a], verts[b]
        if leaf.n == 1 or leaf.p == INF:
            ok = int(np.sum(u != v)) == 1
        else:
            ok = not np.array_equal(np.abs(u), np.abs(v))
        if ok:
            out.append((a, b))
    return out


# --------------------------------------------------------------------------
# Sampling and realification
# --------------------------------------------------------------------------

def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def sample_sphere(space: SpaceDesc, seed) -> np.ndarray:
    """Deterministic (per seed) point of the unit sphere."""
    rng = _rng(seed)
    v = rng.standard_normal(space.dim)
    if space.is_complex:
        v = v + 1j * rng.standard_normal(space.dim)
    return v / norm(space, v)


def realify(space: SpaceDesc) -> SpaceDesc:
    if not space.is_complex:
        raise SpaceError("realify: space is already real")
    return SpaceDesc(space.root, "real", realified=True)


def realify_vector(space: SpaceDesc, v) -> np.ndarray:
    v = as_vector(space, v)
    if not space.is_complex:
        raise SpaceError("realify_vector: space is already real")
    return np.concatenate([v.real, v.imag])


def realify_functional(space: SpaceDesc, f) -> np.ndarray:
    """Coordinates of the real functional ``Re f`` on the realified space."""
    f = as_vector(space, f)
    if not space.is_complex:
        raise SpaceError("realify_functional: space is already real")
    return np.concatenate([f.real, -f.imag])
