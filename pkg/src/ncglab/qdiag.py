"""Quasidiagonality diagnostics along a coordinate projection chain.

The compressions ``phi_n(a) = P_n a P_n`` are unital completely positive
contractions into ``M_{r_n}``.  Along a quasidiagonal chain their
multiplicativity defects, the norm defects and the commutators ``[P_n, a]``
all tend to zero; for the unilateral shift the pair ``(s*, s)`` pins the
multiplicativity defect at 1 for every ``n`` below the truncation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ncglab.dirac import ProjectionChain
from ncglab.models import Element, RepresentationModel, realize
from ncglab.opcore import as_operator, coordinate_commutator_norm, op_norm

VANISHING_ABS = 1e-6
VANISHING_DECAY = 10.0
PERSISTENT_FLOOR = 0.1


@dataclass
class DefectTable:
    rows: list  # dicts: n, rank, pair, mult_defect, norm_defect, comm_norm
    verdict: str
    reference_dim: int
    thresholds: dict = field(default_factory=dict)

    def series(self) -> dict:
        """Each tracked defect as its list of values over ascending n."""
        out: dict = {}
        for row in self.rows:
            for key in ("mult_defect", "norm_defect", "comm_norm"):
                if row[key] is not None:
                    out.setdefault((key, row["pair"]), []).append(row[key])
        return out


def compress(a, chain: ProjectionChain, n: int) -> np.ndarray:
    """Top-left ``r_n x r_n`` corner of ``a``."""
    a = as_operator(a)
    if not 1 <= n <= len(chain):
        raise IndexError(f"chain index {n} outside 1..{len(chain)}")
    r = chain.rank(n)
    return a[:r, :r]


def mult_defect(a, b, chain: ProjectionChain, n: int) -> float:
    """``||phi_n(ab) - phi_n(a) phi_n(b)||``."""
    a, b = as_operator(a), as_operator(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return op_norm(compress(a @ b, chain, n) - compress(a, chain, n) @ compress(b, chain, n))


def _verdict(series: dict) -> str:
    vanishing = all(v[-1] < VANISHING_ABS or v[-1] * VANISHING_DECAY <= v[0] for v in series.values())
    if vanishing:
        return "vanishing"
    if any(min(v) > PERSISTENT_FLOOR for v in series.values()):
        return "persistent"
    return "inconclusive"


def qd_scan(model: RepresentationModel, elements: Sequence[Element], chain: ProjectionChain,
            n_values: Sequence[int], reference_dim: int | None = None) -> DefectTable:
    """Tabulate multiplicativity, norm and commutator defects of the compressions.

    Products are realized exactly as words, so ``phi_n(ab)`` is the compression
    of the true product rather than of the product of truncations.  ``||a||``
    is taken at ``reference_dim`` (default twice the ambient dimension).
    """
    if not elements:
        raise ValueError("qd_scan needs at least one element")
    n_values = [int(n) for n in n_values]
    if not n_values or any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError("n_values must be nonempty and strictly increasing")
    if n_values[0] < 1 or n_values[-1] > len(chain):
        raise ValueError(f"n_values must lie in 1..{len(chain)}")
    N = chain.ambient_dim
    ref = 2 * N if reference_dim is None else int(reference_dim)
    if ref < N:
        raise ValueError("reference_dim must be at least the ambient dimension")

    labels = [str(e) for e in elements]
    mats = [realize(model, e, N) for e in elements]
    ref_norms = [op_norm(realize(model, e, ref)) for e in elements]
    pairs = [(i, j) for i in range(len(elements)) for j in range(len(elements))]
    products = {(i, j): realize(model, elements[i] * elements[j], N) for i, j in pairs}

    rows = []
    for n in n_values:
        r = chain.rank(n)
        for i, j in pairs:
            d = op_norm(products[i, j][:r, :r] - mats[i][:r, :r] @ mats[j][:r, :r])
            rows.append(dict(n=n, rank=r, pair=f"{labels[i]}|{labels[j]}",
                             mult_defect=d, norm_defect=None, comm_norm=None))
        for i, a in enumerate(mats):
            rows.append(dict(n=n, rank=r, pair=labels[i], mult_defect=None,
                             norm_defect=abs(op_norm(a[:r, :r]) - ref_norms[i]),
                             comm_norm=coordinate_commutator_norm(a, r)))
    table = DefectTable(rows, "", ref, {
        "vanishing_abs": VANISHING_ABS,
        "vanishing_decay": VANISHING_DECAY,
        "persistent_floor": PERSISTENT_FLOOR,
    })
    table.verdict = _verdict(table.series())
    return table
