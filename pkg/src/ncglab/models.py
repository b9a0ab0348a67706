"""Concrete representation families and their truncated matrices.

Four families are available:

``toeplitz``
    The unilateral shift ``s`` on l^2(N).  The *-algebra it generates is spanned
    by ``1``, ``s^i``, ``(s*)^j`` and the matrix units ``e_ij``.
``compacts_unit``
    Matrix units plus the identity (the unitized compacts, AF filtered).
``diagonal``
    Multiplication by a real sequence ``x_i`` (commutative, AF filtered).
``rfd``
    A direct sum of matrix blocks with repetition counts; block elements act
    blockwise and the block layout repeats periodically down the diagonal.

Elements are finite linear combinations of words in the generators.  A word
is realized exactly: it is multiplied out at a padded dimension large enough
that no intermediate vector leaves the window, then cut down to ``P_N w P_N``.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

MODEL_NAMES = ("toeplitz", "compacts_unit", "diagonal", "rfd")
DEFAULT_WINDING_SAMPLES = 4096
WINDING_RESIDUAL_MAX = 0.01
SYMBOL_FLOOR = 1e-8


# --------------------------------------------------------------------------
# generators


@dataclass(frozen=True)
class Identity:
    def adjoint(self):
        return self

    def __str__(self):
        return "1"


@dataclass(frozen=True)
class ShiftPower:
    power: int = 1

    def __post_init__(self):
        if self.power < 1:
            raise ValueError("shift power must be >= 1")

    def adjoint(self):
        return AdjShiftPower(self.power)

    def __str__(self):
        return "s" if self.power == 1 else f"s^{self.power}"


@dataclass(frozen=True)
class AdjShiftPower:
    power: int = 1

    def __post_init__(self):
        if self.power < 1:
            raise ValueError("shift power must be >= 1")

    def adjoint(self):
        return ShiftPower(self.power)

    def __str__(self):
        return "s*" if self.power == 1 else f"s*^{self.power}"


@dataclass(frozen=True)
class MatrixUnit:
    i: int
    j: int

    def __post_init__(self):
        if self.i < 1 or self.j < 1:
            raise ValueError("matrix unit indices are 1-based")

    def adjoint(self):
        return MatrixUnit(self.j, self.i)

    def __str__(self):
        return f"e({self.i},{self.j})"


@dataclass(frozen=True)
class DiagFunction:
    """Multiplication by the model's real sequence x_i (self-adjoint)."""

    def adjoint(self):
        return self

    def __str__(self):
        return "x"


@dataclass(frozen=True)
class BlockElement:
    """``matrix`` acting on every copy of block type ``index`` of an rfd model."""

    index: int
    matrix: tuple

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("block index is 1-based")
        m = np.asarray(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("block matrix must be square")
        object.__setattr__(self, "matrix", tuple(tuple(complex(v) for v in row) for row in m))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.matrix, dtype=np.complex128)

    def adjoint(self):
        return BlockElement(self.index, self.array.conj().T)

    def __str__(self):
        m = self.array
        nz = np.argwhere(m != 0)
        if len(nz) == 1 and m[tuple(nz[0])] == 1:
            i, j = nz[0] + 1
            return f"b({self.index},{i},{j})"
        return f"b({self.index},<{m.shape[0]}x{m.shape[0]}>)"


Generator = Identity | ShiftPower | AdjShiftPower | MatrixUnit | DiagFunction | BlockElement


# --------------------------------------------------------------------------
# elements


def _fmt_coeff(c: complex) -> str:
    if c.imag == 0:
        return repr(c.real)
    return repr(c)


@dataclass(frozen=True)
class Element:
    """Finite linear combination of words in the generators.

    ``terms`` is a tuple of ``(coefficient, word)`` pairs; a word is a tuple of
    generators read as a product left to right.
    """

    terms: tuple = ()

    @classmethod
    def of(cls, *gens: Generator, coeff: complex = 1.0) -> "Element":
        return cls(((complex(coeff), tuple(gens)),))

    @classmethod
    def identity(cls):
        return cls.of(Identity())

    @classmethod
    def shift(cls, power: int = 1):
        return cls.of(ShiftPower(power))

    @classmethod
    def adj_shift(cls, power: int = 1):
        return cls.of(AdjShiftPower(power))

    @classmethod
    def unit(cls, i: int, j: int):
        return cls.of(MatrixUnit(i, j))

    @classmethod
    def diag(cls):
        return cls.of(DiagFunction())

    @classmethod
    def block(cls, index: int, matrix):
        return cls.of(BlockElement(index, matrix))

    def generators(self):
        for _, word in self.terms:
            yield from word

    def adjoint(self) -> "Element":
        return Element(
            tuple((c.conjugate(), tuple(g.adjoint() for g in reversed(w))) for c, w in self.terms)
        )

    def __add__(self, other: "Element") -> "Element":
        return Element(self.terms + other.terms)

    def __neg__(self):
        return Element(tuple((-c, w) for c, w in self.terms))

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, Element):
            return Element(
                tuple((c1 * c2, w1 + w2) for (c1, w1), (c2, w2) in itertools.product(self.terms, other.terms))
            )
        return Element(tuple((complex(other) * c, w) for c, w in self.terms))

    def __rmul__(self, scalar):
        return self * scalar

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for c, w in self.terms:
            word = " ".join(str(g) for g in w) or "1"
            parts.append(word if c == 1 else f"({_fmt_coeff(c)}) {word}")
        return " + ".join(parts)


_TOKEN = re.compile(
    r"""\s*(?:
        (?P<adj>s\*(?:\^(?P<ap>\d+))?)
      | (?P<shift>s(?:\^(?P<sp>\d+))?)
      | (?P<unit>e\(\s*(?P<ui>\d+)\s*,\s*(?P<uj>\d+)\s*\))
      | (?P<blk>b\(\s*(?P<bk>\d+)\s*,\s*(?P<bi>\d+)\s*,\s*(?P<bj>\d+)\s*\))
      | (?P<diag>x)
      | (?P<one>1|I)
    )\s*""",
    re.VERBOSE,
)


def parse_element(text: str, model: "RepresentationModel | None" = None) -> Element:
    """Parse ``"s* s + e(1,2)"``-style text into an :class:`Element`.

    Terms are separated by ``+`` and factors within a term by whitespace.
    ``b(k,i,j)`` is the matrix unit ``e_ij`` inside block type ``k`` of an rfd
    model, so ``model`` is needed to know the block size.
    """
    terms = []
    for chunk in text.split("+"):
        chunk = chunk.strip()
        if not chunk:
            raise ValueError(f"empty term in element {text!r}")
        pos, word = 0, []
        while pos < len(chunk):
            m = _TOKEN.match(chunk, pos)
            if not m or m.end() == pos:
                raise ValueError(f"cannot parse element {text!r} at {chunk[pos:]!r}")
            pos = m.end()
            if m["adj"]:
                word.append(AdjShiftPower(int(m["ap"] or 1)))
            elif m["shift"]:
                word.append(ShiftPower(int(m["sp"] or 1)))
            elif m["unit"]:
                word.append(MatrixUnit(int(m["ui"]), int(m["uj"])))
            elif m["blk"]:
                k, i, j = int(m["bk"]), int(m["bi"]), int(m["bj"])
                if model is None or model.name != "rfd":
                    raise ValueError("block elements need an rfd model")
                dims = model.block_types
                if not 1 <= k <= len(dims) or not (1 <= i <= dims[k - 1] and 1 <= j <= dims[k - 1]):
                    raise ValueError(f"block element {m['blk']} out of range for blocks {dims}")
                mat = np.zeros((dims[k - 1], dims[k - 1]))
                mat[i - 1, j - 1] = 1.0
                word.append(BlockElement(k, mat))
            elif m["diag"]:
                word.append(DiagFunction())
            else:
                word.append(Identity())
        terms.append((1.0 + 0j, tuple(word)))
    return Element(tuple(terms))


# --------------------------------------------------------------------------
# models

_ALLOWED = {
    "toeplitz": (Identity, ShiftPower, AdjShiftPower, MatrixUnit),
    "compacts_unit": (Identity, MatrixUnit),
    "diagonal": (Identity, DiagFunction),
    "rfd": (Identity, BlockElement),
}

_FLAGS = {
    "toeplitz": dict(af_filtration=False, rfd=False, known_non_qd=True),
    "compacts_unit": dict(af_filtration=True, rfd=False, known_non_qd=False),
    "diagonal": dict(af_filtration=True, rfd=False, known_non_qd=False),
    "rfd": dict(af_filtration=False, rfd=True, known_non_qd=False),
}


@dataclass(frozen=True)
class ModelMetadata:
    af_filtration: bool
    rfd: bool
    known_non_qd: bool


@dataclass(frozen=True)
class RepresentationModel:
    """A named representation family.

    ``params`` for ``diagonal``: ``{"x": "inverse"}`` (x_i = 1/i, the default),
    ``{"x": "identity"}`` (x_i = i) or ``{"x": [x_1, x_2, ...]}``.
    For ``rfd``: ``{"blocks": [[dim, count], ...]}``; a bare ``dim`` means count 1.
    The other families take no parameters.
    """

    name: str
    params: Mapping = field(default_factory=dict)
    metadata: ModelMetadata = None

    def __post_init__(self):
        if self.name not in MODEL_NAMES:
            raise ValueError(f"unknown model {self.name!r}; expected one of {MODEL_NAMES}")
        params = dict(self.params or {})
        if self.name == "diagonal":
            x = params.setdefault("x", "inverse")
            if isinstance(x, str):
                if x not in ("inverse", "identity"):
                    raise ValueError(f"unknown diagonal sequence {x!r}")
            else:
                params["x"] = tuple(float(v) for v in x)
                if not params["x"]:
                    raise ValueError("diagonal sequence must be nonempty")
        elif self.name == "rfd":
            raw = params.get("blocks")
            if not raw:
                raise ValueError("rfd model needs a nonempty 'blocks' list")
            blocks = []
            for b in raw:
                dim, count = (b, 1) if isinstance(b, int) else tuple(b)
                if int(dim) < 1 or int(count) < 1:
                    raise ValueError(f"bad rfd block {b!r}")
                blocks.append((int(dim), int(count)))
            params["blocks"] = tuple(blocks)
        extra = set(params) - {"diagonal": {"x"}, "rfd": {"blocks"}}.get(self.name, set())
        if extra:
            raise ValueError(f"unknown parameters for {self.name}: {sorted(extra)}")
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "metadata", ModelMetadata(**_FLAGS[self.name]))

    @classmethod
    def toeplitz(cls):
        return cls("toeplitz")

    @classmethod
    def compacts_unit(cls):
        return cls("compacts_unit")

    @classmethod
    def diagonal(cls, x="inverse"):
        return cls("diagonal", {"x": x})

    @classmethod
    def rfd(cls, blocks):
        return cls("rfd", {"blocks": blocks})

    @property
    def block_types(self) -> tuple:
        return tuple(d for d, _ in self.params["blocks"])

    def diagonal_values(self, n: int) -> np.ndarray:
        x = self.params["x"]
        i = np.arange(1, n + 1, dtype=float)
        if x == "inverse":
            return 1.0 / i
        if x == "identity":
            return i
        if n > len(x):
            raise ValueError(f"diagonal sequence has {len(x)} values, need {n}")
        return np.array(x[:n])

    def block_layout(self, n: int) -> list:
        """``(offset, type_index)`` of each block meeting the first ``n`` coordinates."""
        pattern = [k for k, (_, count) in enumerate(self.params["blocks"], 1) for _ in range(count)]
        dims = self.block_types
        out, offset = [], 0
        for k in itertools.cycle(pattern):
            if offset >= n:
                break
            out.append((offset, k))
            offset += dims[k - 1]
        return out

    def describe(self) -> dict:
        params = {k: (list(map(list, v)) if k == "blocks" else (list(v) if isinstance(v, tuple) else v))
                  for k, v in self.params.items()}
        return {
            "name": self.name,
            "params": params,
            "metadata": {
                "af_filtration": self.metadata.af_filtration,
                "rfd": self.metadata.rfd,
                "known_non_qd": self.metadata.known_non_qd,
            },
        }


def _generator_matrix(model: RepresentationModel, g, n: int) -> np.ndarray:
    if isinstance(g, Identity):
        return np.eye(n, dtype=np.complex128)
    m = np.zeros((n, n), dtype=np.complex128)
    if isinstance(g, (ShiftPower, AdjShiftPower)):
        k = g.power
        if k < n:
            r = np.arange(n - k)
            if isinstance(g, ShiftPower):
                m[r + k, r] = 1.0
            else:
                m[r, r + k] = 1.0
    elif isinstance(g, MatrixUnit):
        if g.i <= n and g.j <= n:
            m[g.i - 1, g.j - 1] = 1.0
    elif isinstance(g, DiagFunction):
        m[np.arange(n), np.arange(n)] = model.diagonal_values(n)
    elif isinstance(g, BlockElement):
        dims = model.block_types
        if g.index > len(dims):
            raise ValueError(f"block index {g.index} but model has {len(dims)} block types")
        block = g.array
        if block.shape[0] != dims[g.index - 1]:
            raise ValueError(
                f"block {g.index} has dimension {dims[g.index - 1]}, got {block.shape[0]}x{block.shape[0]}"
            )
        d = block.shape[0]
        for offset, k in model.block_layout(n):
            if k == g.index:
                w = min(d, n - offset)
                m[offset:offset + w, offset:offset + w] = block[:w, :w]
    return m


def _padding(model: RepresentationModel, word: tuple, n: int) -> int:
    if len(word) <= 1:
        return n
    top = n
    for g in word:
        if isinstance(g, MatrixUnit):
            top = max(top, g.i, g.j)
    extra = sum(g.power for g in word if isinstance(g, ShiftPower))
    if model.name == "rfd":
        extra += max(model.block_types) * sum(isinstance(g, BlockElement) for g in word)
    return top + extra


def check_element(model: RepresentationModel, e: Element) -> None:
    allowed = _ALLOWED[model.name]
    for g in e.generators():
        if not isinstance(g, allowed):
            raise ValueError(f"generator {g} is not available in the {model.name} model")


def realize(model: RepresentationModel, e: Element, n: int) -> np.ndarray:
    """The compression ``P_N e P_N`` in the standard basis, as an ``n x n`` matrix."""
    if n < 1:
        raise ValueError("truncation dimension must be >= 1")
    check_element(model, e)
    out = np.zeros((n, n), dtype=np.complex128)
    for coeff, word in e.terms:
        if not word:
            word = (Identity(),)
        big = _padding(model, word, n)
        mats = [_generator_matrix(model, g, big) for g in word]
        prod = mats[0]
        for m in mats[1:]:
            prod = prod @ m
        out += coeff * prod[:n, :n]
    return out


def default_chain(model: RepresentationModel, n: int) -> tuple:
    """Coordinate filtration ranks ending at ``n``; block boundaries for rfd."""
    if n < 1:
        raise ValueError("truncation dimension must be >= 1")
    if model.name != "rfd":
        return tuple(range(1, n + 1))
    dims = model.block_types
    ranks = [offset + dims[k - 1] for offset, k in model.block_layout(n)]
    ranks = [r for r in ranks if r < n]
    return tuple(ranks + [n])


def closure(model: RepresentationModel, elements: Sequence[Element], depth: int, n: int) -> list:
    """Close ``elements`` under adjoints and products of length up to ``depth``.

    Words that realize to zero or to a matrix already present at dimension
    ``n`` are dropped.  The input elements come first, in their given order.
    """
    if depth < 1:
        raise ValueError("closure depth must be >= 1")
    base = list(elements)
    for e in elements:
        base.append(e.adjoint())
    seen, out = set(), []

    def add(e):
        m = realize(model, e, n)
        if not np.any(m):
            return
        key = m.tobytes()
        if key not in seen:
            seen.add(key)
            out.append(e)

    for e in base:
        add(e)
    for length in range(2, depth + 1):
        for combo in itertools.product(base, repeat=length):
            prod = combo[0]
            for f in combo[1:]:
                prod = prod * f
            add(prod)
    return out


# --------------------------------------------------------------------------
# symbols and index


class SymbolVanishes(ValueError):
    """The symbol has (numerically) a zero on the unit circle; no Fredholm index."""


@dataclass(frozen=True)
class SymbolPolynomial:
    """Laurent polynomial ``phi(z) = sum_k c_k z^k`` on the unit circle."""

    coeffs: Mapping

    def __post_init__(self):
        clean = {int(k): complex(v) for k, v in dict(self.coeffs).items() if v != 0}
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def monomial(cls, degree: int, coeff: complex = 1.0):
        return cls({degree: coeff})

    @classmethod
    def parse(cls, text: str):
        """``"1:1"`` or ``"0:2, 1:-1+0.5j"``: comma separated ``degree:coefficient``."""
        coeffs = {}
        for item in text.split(","):
            deg, _, val = item.partition(":")
            if not _:
                raise ValueError(f"bad symbol term {item!r}; expected degree:coefficient")
            coeffs[int(deg)] = coeffs.get(int(deg), 0) + complex(val.replace(" ", ""))
        return cls(coeffs)

    @property
    def degree_span(self) -> int:
        if not self.coeffs:
            return 0
        return max(self.coeffs) - min(self.coeffs)

    def __call__(self, z):
        z = np.asarray(z, dtype=np.complex128)
        out = np.zeros_like(z)
        for k, c in self.coeffs.items():
            out += c * z ** k
        return out

    def __mul__(self, other: "SymbolPolynomial") -> "SymbolPolynomial":
        out = {}
        for (k1, c1), (k2, c2) in itertools.product(self.coeffs.items(), other.coeffs.items()):
            out[k1 + k2] = out.get(k1 + k2, 0) + c1 * c2
        return SymbolPolynomial(out)

    def __str__(self):
        return ", ".join(f"{k}:{_fmt_coeff(c)}" for k, c in sorted(self.coeffs.items()))


def winding_number(phi: SymbolPolynomial, samples: int = DEFAULT_WINDING_SAMPLES) -> tuple:
    """Accumulated-argument winding of ``phi`` around 0: ``(rounded, residual)``."""
    if samples < 16 * max(1, phi.degree_span):
        raise ValueError(f"{samples} samples too few for degree span {phi.degree_span}")
    z = np.exp(2j * np.pi * np.arange(samples + 1) / samples)
    v = phi(z)
    floor = float(np.min(np.abs(v)))
    if floor <= SYMBOL_FLOOR:
        raise SymbolVanishes(f"symbol nearly vanishes on the circle (min |phi| = {floor:.3g})")
    turns = float(np.sum(np.angle(v[1:] / v[:-1]))) / (2 * math.pi)
    rounded = round(turns)
    residual = abs(turns - rounded)
    if residual >= WINDING_RESIDUAL_MAX:
        raise SymbolVanishes(f"winding residual {residual:.3g} turns; sampling too coarse")
    return int(rounded), residual


def winding_index(phi: SymbolPolynomial, samples: int = DEFAULT_WINDING_SAMPLES) -> int:
    """Fredholm index of the Toeplitz operator with symbol ``phi``: minus its winding."""
    w, _ = winding_number(phi, samples)
    return -w
