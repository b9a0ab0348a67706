"""Projection chains, diagonal Dirac operators and the commutator block calculus.

A chain of coordinate projections ``P_1 <= ... <= P_m`` (ranks ``r_1 < ... < r_m``)
splits the space into blocks ``Q_k = P_k - P_{k-1}``; ``D = sum_k alpha_k Q_k`` is
then diagonal and ``[D, a]`` has ``(i, j)`` block ``(alpha_i - alpha_j) a_ij``.

``select_chain`` realizes, greedily and on a finite prefix, the passage to a
subsequence of the chain along which the weighted commutator series
``sum_k |alpha_k| (||[a, P_{n_k}]|| + ||[a, P_{n_{k-1}}]||)`` stays summable for
every element of a finite test set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ncglab.models import Element, RepresentationModel, default_chain, realize
from ncglab.opcore import as_operator, coordinate_commutator_norm

ALPHA_KINDS = ("harmonic", "power", "geometric", "custom")
# bound on the envelope-controlled part of every element's series
ENVELOPE_TOTAL = 1.5


@dataclass(frozen=True)
class ProjectionChain:
    ambient_dim: int
    ranks: tuple

    def __post_init__(self):
        ranks = tuple(int(r) for r in self.ranks)
        if self.ambient_dim < 1:
            raise ValueError("ambient dimension must be >= 1")
        if not ranks:
            raise ValueError("a chain needs at least one projection")
        if ranks[0] < 1 or any(b <= a for a, b in zip(ranks, ranks[1:])):
            raise ValueError(f"ranks must be positive and strictly increasing: {ranks}")
        if ranks[-1] > self.ambient_dim:
            raise ValueError(f"rank {ranks[-1]} exceeds ambient dimension {self.ambient_dim}")
        object.__setattr__(self, "ranks", ranks)

    @classmethod
    def singletons(cls, n: int) -> "ProjectionChain":
        return cls(n, tuple(range(1, n + 1)))

    @classmethod
    def default(cls, model: RepresentationModel, n: int) -> "ProjectionChain":
        return cls(n, default_chain(model, n))

    def __len__(self):
        return len(self.ranks)

    def rank(self, k: int) -> int:
        """Rank of ``P_k``; ``P_0 = 0``."""
        if k == 0:
            return 0
        return self.ranks[k - 1]

    @property
    def top(self) -> int:
        return self.ranks[-1]

    @property
    def multiplicities(self) -> tuple:
        return tuple(b - a for a, b in zip((0,) + self.ranks, self.ranks))

    def subchain(self, indices: Sequence[int]) -> "ProjectionChain":
        return ProjectionChain(self.ambient_dim, tuple(self.rank(n) for n in indices))


@dataclass(frozen=True)
class AlphaSequence:
    """Real eigenvalue sequence with nondecreasing ``|alpha_k|``.

    ``harmonic``: alpha_n = 1 + 1/2 + ... + 1/n.  ``power``: alpha_k = k**exponent.
    ``geometric``: alpha_k = ratio**k.  ``custom``: an explicit finite list.
    ``signs``, when given, is a +-1 pattern applied cyclically.
    """

    kind: str
    exponent: float | None = None
    ratio: float | None = None
    values: tuple | None = None
    signs: tuple | None = None

    def __post_init__(self):
        if self.kind not in ALPHA_KINDS:
            raise ValueError(f"unknown alpha kind {self.kind!r}; expected one of {ALPHA_KINDS}")
        if self.kind == "power" and not (self.exponent is not None and self.exponent > 0):
            raise ValueError("power alpha needs exponent > 0")
        if self.kind == "geometric" and not (self.ratio is not None and self.ratio > 1):
            raise ValueError("geometric alpha needs ratio > 1")
        if self.kind == "custom":
            if not self.values:
                raise ValueError("custom alpha needs a nonempty value list")
            vals = tuple(float(v) for v in self.values)
            mags = np.abs(vals)
            if np.any(np.diff(mags) < 0):
                raise ValueError("custom alpha must have nondecreasing |alpha_k|")
            object.__setattr__(self, "values", vals)
        if self.signs is not None:
            signs = tuple(int(s) for s in self.signs)
            if not signs or any(s not in (1, -1) for s in signs):
                raise ValueError("signs must be a nonempty pattern of +1/-1")
            object.__setattr__(self, "signs", signs)

    @classmethod
    def harmonic(cls):
        return cls("harmonic")

    @classmethod
    def power(cls, exponent: float):
        return cls("power", exponent=float(exponent))

    @classmethod
    def geometric(cls, ratio: float):
        return cls("geometric", ratio=float(ratio))

    @classmethod
    def custom(cls, values):
        return cls("custom", values=tuple(values))

    @classmethod
    def parse(cls, text: str) -> "AlphaSequence":
        """``harmonic``, ``power:q``, ``geometric:rho`` or ``custom:a1,a2,...``."""
        kind, _, arg = text.strip().partition(":")
        if kind == "harmonic" and not arg:
            return cls.harmonic()
        if kind == "power" and arg:
            return cls.power(float(arg))
        if kind == "geometric" and arg:
            return cls.geometric(float(arg))
        if kind == "custom" and arg:
            return cls.custom(float(v) for v in arg.split(","))
        raise ValueError(f"cannot parse alpha spec {text!r}")

    @property
    def suspect_bounded(self) -> bool:
        """Custom lists whose last quarter shows no growth in |alpha|."""
        if self.kind != "custom" or len(self.values) < 2:
            return False
        mags = np.abs(self.values)
        return bool(mags[-1] == mags[(3 * len(mags)) // 4 - 1 if len(mags) >= 4 else 0])

    def __call__(self, n: int) -> np.ndarray:
        """The first ``n`` values alpha_1..alpha_n."""
        k = np.arange(1, n + 1, dtype=float)
        if self.kind == "harmonic":
            vals = np.cumsum(1.0 / k)
        elif self.kind == "power":
            vals = k ** self.exponent
        elif self.kind == "geometric":
            with np.errstate(over="ignore"):
                vals = self.ratio ** k
        else:
            if n > len(self.values):
                raise ValueError(f"custom alpha has {len(self.values)} values, need {n}")
            vals = np.array(self.values[:n])
        if self.signs is not None:
            vals = vals * np.resize(np.array(self.signs, dtype=float), n)
        return vals

    def describe(self) -> dict:
        out = {"kind": self.kind}
        if self.exponent is not None:
            out["exponent"] = self.exponent
        if self.ratio is not None:
            out["ratio"] = self.ratio
        if self.values is not None:
            out["values"] = list(self.values)
        if self.signs is not None:
            out["signs"] = list(self.signs)
        return out


def blocks(chain: ProjectionChain) -> list:
    """1-based ``(offset, size)`` extents of the blocks ``Q_k``."""
    return [(chain.rank(k - 1) + 1, m) for k, m in enumerate(chain.multiplicities, 1)]


def expanded_alpha(chain: ProjectionChain, alpha: AlphaSequence) -> np.ndarray:
    """Diagonal of ``D``: alpha_k repeated mult_k times."""
    vals = alpha(len(chain))
    return np.repeat(vals, chain.multiplicities)


def assemble_dirac(chain: ProjectionChain, alpha: AlphaSequence) -> np.ndarray:
    return np.diag(expanded_alpha(chain, alpha).astype(np.complex128))


def _check_dim(a: np.ndarray, chain: ProjectionChain) -> None:
    if a.shape[0] != chain.top:
        raise ValueError(f"operator has dimension {a.shape[0]}, chain covers {chain.top}")


def block_of(a, chain: ProjectionChain, idx: tuple) -> np.ndarray:
    """The block ``a_ij = Q_i a Q_j`` as a ``mult_i x mult_j`` array."""
    a = as_operator(a)
    _check_dim(a, chain)
    i, j = idx
    m = len(chain)
    if not (1 <= i <= m and 1 <= j <= m):
        raise IndexError(f"block index {idx} outside 1..{m}")
    return a[chain.rank(i - 1):chain.rank(i), chain.rank(j - 1):chain.rank(j)]


def commutator_blocks(a, chain: ProjectionChain, alpha: AlphaSequence) -> np.ndarray:
    """``[D, a]`` from the block formula: block (i, j) is ``(alpha_i - alpha_j) a_ij``."""
    a = as_operator(a)
    _check_dim(a, chain)
    d = expanded_alpha(chain, alpha)
    return (d[:, None] - d[None, :]) * a


def commutator_tail(a, chain: ProjectionChain, alpha: AlphaSequence, K: int) -> list:
    """Partial sums of ``sum_k |alpha_k| (||[P_k,a]|| + ||[P_{k-1},a]||)`` for a matrix."""
    a = as_operator(a)
    if a.shape[0] != chain.ambient_dim:
        raise ValueError(f"operator has dimension {a.shape[0]}, ambient is {chain.ambient_dim}")
    if not 1 <= K <= len(chain):
        raise ValueError(f"K={K} outside 1..{len(chain)}")
    weights = np.abs(alpha(K))
    norms = [0.0] + [coordinate_commutator_norm(a, chain.rank(k)) for k in range(1, K + 1)]
    sums, total = [], 0.0
    for k in range(1, K + 1):
        total += float(weights[k - 1]) * (norms[k] + norms[k - 1])
        sums.append(total)
    return sums


def tail_estimate(e: Element, model: RepresentationModel, chain: ProjectionChain,
                  alpha: AlphaSequence, K: int) -> list:
    """Partial sums S_1..S_K of the weighted commutator series at the chain's ambient dimension."""
    a = realize(model, e, chain.ambient_dim)
    return commutator_tail(a, chain, alpha, K)


# --------------------------------------------------------------------------
# subsequence selection


@dataclass(frozen=True)
class StepRecord:
    k: int
    index: int
    rank: int
    max_norm: float
    envelope: float
    active: int


@dataclass(frozen=True)
class PreActivationTerm:
    """A series term of ``element`` not covered by the envelope (chosen before it was active)."""

    element: int
    k: int
    part: str  # "current" -> ||[a, P_{n_k}]||, "carry" -> ||[a, P_{n_{k-1}}]||
    weight: float
    norm: float
    value: float


@dataclass
class SelectionCertificate:
    indices: list
    ranks: list
    steps: list
    pre_activation: list
    element_labels: list
    element_series: list
    certified_total: float
    multiplicities: list
    ambient_dim: int
    envelope_total: float = ENVELOPE_TOTAL

    @property
    def pre_activation_total(self) -> float:
        return math.fsum(t.value for t in self.pre_activation)

    def chain(self) -> ProjectionChain:
        return ProjectionChain(self.ambient_dim, tuple(self.ranks))


class NoProgress(RuntimeError):
    """No admissible chain index exists at some step of the selection."""

    def __init__(self, step: int, envelope: float, examined: list, partial: list):
        self.step = step
        self.envelope = envelope
        self.examined = examined  # (index, max commutator norm) for every candidate tried
        self.partial = partial  # StepRecords completed before the failure
        super().__init__(
            f"no admissible index at step {step}: envelope {envelope:.3g}, "
            f"{len(examined)} candidates examined"
        )


def envelope(k: int, alpha_abs: np.ndarray) -> float:
    """Admissible commutator norm at step ``k``: 2^-(k+1) / max(|alpha_k|, |alpha_{k+1}|)."""
    scale = max(alpha_abs[k - 1], alpha_abs[k])
    if scale == 0:
        return math.inf
    return 2.0 ** -(k + 1) / scale


def select_chain(elements: Sequence[Element], model: RepresentationModel, chain: ProjectionChain,
                 alpha: AlphaSequence, budget: int) -> SelectionCertificate:
    """Greedy subsequence ``n_1 < ... < n_budget`` of ``chain``.

    Element ``a_i`` joins the constraint set at step ``i``.  At step ``k`` the
    smallest ``n_k > n_{k-1}`` with ``max_active ||[a_i, P_{n_k}]||`` at most
    :func:`envelope` wins.  Indices whose projection is the ambient identity
    are never candidates: they commute with everything only because of the
    truncation.  Raises :class:`NoProgress` when a step has no admissible index.
    """
    if not elements:
        raise ValueError("select_chain needs at least one element")
    if not 1 <= budget <= len(chain):
        raise ValueError(f"budget {budget} outside 1..{len(chain)}")
    N = chain.ambient_dim
    mats = [realize(model, e, N) for e in elements]
    alpha_abs = np.abs(alpha(budget + 1))
    candidates = [n for n in range(1, len(chain) + 1) if chain.rank(n) < N]
    cache: dict = {}

    def norm(i: int, n: int) -> float:
        if n == 0:
            return 0.0
        key = (i, n)
        if key not in cache:
            cache[key] = coordinate_commutator_norm(mats[i], chain.rank(n))
        return cache[key]

    steps, chosen, pos = [], [], 0
    for k in range(1, budget + 1):
        active = min(k, len(mats))
        bound = envelope(k, alpha_abs)
        examined = []
        while pos < len(candidates):
            n = candidates[pos]
            pos += 1
            worst = max(norm(i, n) for i in range(active))
            examined.append((n, worst))
            if worst <= bound:
                steps.append(StepRecord(k, n, chain.rank(n), worst, bound, active))
                chosen.append(n)
                break
        else:
            raise NoProgress(k, bound, examined, steps)

    pre, series = [], []
    for i in range(len(mats)):
        act = i + 1
        total = []
        prev = 0
        for k, n in enumerate(chosen, 1):
            w = float(alpha_abs[k - 1])
            cur, carry = w * norm(i, n), w * norm(i, prev)
            total += [cur, carry]
            if k < act:
                pre.append(PreActivationTerm(i + 1, k, "current", w, norm(i, n), cur))
            if k - 1 < act and k > 1:
                pre.append(PreActivationTerm(i + 1, k, "carry", w, norm(i, prev), carry))
            prev = n
        series.append(math.fsum(total))
    sub = chain.subchain(chosen)
    return SelectionCertificate(
        indices=chosen,
        ranks=list(sub.ranks),
        steps=steps,
        pre_activation=pre,
        element_labels=[str(e) for e in elements],
        element_series=series,
        certified_total=ENVELOPE_TOTAL + math.fsum(t.value for t in pre),
        multiplicities=list(sub.multiplicities),
        ambient_dim=N,
    )
