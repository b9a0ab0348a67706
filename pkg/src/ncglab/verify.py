"""Spectral-triple diagnostics at finite truncation.

Boundedness and compactness of ``[D, a]`` cannot be decided from finitely many
truncations, so the scans report *consistency* verdicts under fixed numeric
rules; the rules and their thresholds travel with every report.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ncglab.dirac import AlphaSequence, ProjectionChain, block_of, commutator_blocks
from ncglab.models import Element, RepresentationModel, realize
from ncglab.opcore import Tolerance, as_operator, block_norm, op_norm, singular_values

STABILITY_WINDOW = 1e-6
MONOTONE_SLACK = 1e-12
CONVERGED_REL_TAIL = 1e-6
DIVERGING_INCREMENT = 1e-6
FIRST_CHECKPOINT_EXP = 4


@dataclass
class ScanReport:
    kind: str
    records: list
    verdict: str
    evidence: dict
    thresholds: dict = field(default_factory=dict)


@dataclass
class OffDiagResult:
    passed: bool
    norm: float
    worst_ratio: float
    worst_index: tuple | None
    skipped: list


@dataclass
class SummabilityReport:
    p: float
    checkpoints: list  # (K, partial_sum, tail_bound)
    tail_bound: float | None
    verdict: str
    thresholds: dict = field(default_factory=dict)

    @property
    def partial_sums(self) -> list:
        return [s for _, s, _ in self.checkpoints]

    @property
    def value(self) -> float:
        return self.checkpoints[-1][1]


def truncated_commutator(model: RepresentationModel, e: Element, alpha: AlphaSequence, n: int) -> np.ndarray:
    """``[D, a]_N`` on the model's default chain at dimension ``n``."""
    chain = ProjectionChain.default(model, n)
    return commutator_blocks(realize(model, e, n), chain, alpha)


def _map(fn, items, workers):
    if workers and workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _check_dims(dims):
    dims = [int(d) for d in dims]
    if not dims:
        raise ValueError("dims must be nonempty")
    if any(d < 1 for d in dims) or any(b <= a for a, b in zip(dims, dims[1:])):
        raise ValueError(f"dims must be positive and strictly increasing: {dims}")
    return dims


def boundedness_scan(model: RepresentationModel, e: Element, alpha: AlphaSequence,
                     dims: Sequence[int], workers: int | None = None) -> ScanReport:
    """``||[D, a]_N||`` for each N; stable iff the last two values agree to 1e-6 (relative to 1 + last)."""
    dims = _check_dims(dims)
    values = _map(lambda n: op_norm(truncated_commutator(model, e, alpha, n)), dims, workers)
    records = [{"N": n, "value": v} for n, v in zip(dims, values)]
    evidence = {"last": values[-1]}
    if len(values) < 2:
        verdict = "inconclusive"
    else:
        diff = abs(values[-1] - values[-2])
        evidence.update(previous=values[-2], difference=diff, window=STABILITY_WINDOW * (1 + values[-1]))
        if diff < STABILITY_WINDOW * (1 + values[-1]):
            verdict = "stable"
        elif values[-1] > values[-2]:
            verdict = "growing"
        else:
            verdict = "inconclusive"
    return ScanReport("boundedness", records, verdict, evidence, {"stability_window": STABILITY_WINDOW})


def compactness_scan(model: RepresentationModel, e: Element, alpha: AlphaSequence,
                     dims: Sequence[int], tail_index: int = 2, workers: int | None = None) -> ScanReport:
    """Track sigma_{J+1}([D,a]_N) over N and look for tail decay at the largest N.

    Compact-consistent (verdict ``stable``) iff the tracked singular value is
    nonincreasing in N and, at the largest N, either sigma_J is zero or some
    sigma_j with j <= N/2 falls below sigma_J / 2.  The window j <= N/2 keeps
    the rank deficiency created by the truncation boundary out of the test.
    """
    dims = _check_dims(dims)
    J = int(tail_index)
    if not 1 <= J < dims[0]:
        raise ValueError(f"tail index J={J} must satisfy 1 <= J < min(dims)={dims[0]}")
    svals = _map(lambda n: singular_values(truncated_commutator(model, e, alpha, n)), dims, workers)
    tracked = [float(s[J]) for s in svals]
    records = [{"N": n, "value": t} for n, t in zip(dims, tracked)]

    nonincreasing = all(b <= a + MONOTONE_SLACK * (1 + a) for a, b in zip(tracked, tracked[1:]))
    top = svals[-1]
    sigma_J = float(top[J - 1])
    window = top[: max(J, len(top) // 2)]
    if sigma_J == 0:
        decay_at = J
    else:
        hits = np.flatnonzero(window < sigma_J / 2)
        decay_at = int(hits[0]) + 1 if hits.size else None
    compact = nonincreasing and decay_at is not None
    evidence = {
        "tail_index": J,
        "nonincreasing": nonincreasing,
        "sigma_J": sigma_J,
        "decay_index": decay_at,
        "compact_consistent": compact,
        "singular_values": [float(v) for v in top],
    }
    thresholds = {"monotone_slack": MONOTONE_SLACK, "decay_factor": 0.5, "window_fraction": 0.5}
    return ScanReport("compactness", records, "stable" if compact else "growing", evidence, thresholds)


def offdiag_check(a, chain: ProjectionChain, alpha: AlphaSequence, tol: Tolerance = Tolerance()) -> OffDiagResult:
    """Check ``||a_ij|| <= C / |alpha_i - alpha_j| + slack`` with ``C = ||[D, a]||``.

    Pairs with equal alpha values carry no bound; they are listed in ``skipped``.
    ``worst_ratio`` is the largest ``||a_ij|| |alpha_i - alpha_j| / C``.
    """
    a = as_operator(a)
    C = op_norm(commutator_blocks(a, chain, alpha))
    vals = alpha(len(chain))
    m = len(chain)
    passed, worst, worst_idx, skipped = True, 0.0, None, []
    for i in range(1, m + 1):
        for j in range(1, m + 1):
            if i == j:
                continue
            nij = block_norm(block_of(a, chain, (i, j)))
            gap = abs(vals[i - 1] - vals[j - 1])
            if gap == 0:
                skipped.append((i, j))
                continue
            if nij > C / gap + tol.bound_slack:
                passed = False
            if C > 0:
                ratio = nij * gap / C
            else:
                ratio = 0.0 if nij == 0 else math.inf
            if ratio > worst:
                worst, worst_idx = ratio, (i, j)
    return OffDiagResult(passed, C, worst, worst_idx, skipped)


# --------------------------------------------------------------------------
# summability


def _tail_integral(alpha: AlphaSequence, p: float, K: int) -> float | None:
    """Upper bound for the integral of (1 + alpha(x)^2)^(-p/2) over [K, inf).

    Uses ``(1 + t^2)^(-p/2) <= |t|^(-p)`` with the natural continuous extension
    of each kind.  ``None`` for custom lists, which have no extension.
    """
    if alpha.kind == "harmonic":
        # alpha(x) ~ log x, so (log x)^-p is never integrable at infinity
        return math.inf
    if alpha.kind == "power":
        s = p * alpha.exponent
        if s <= 1:
            return math.inf
        return K ** (1 - s) / (s - 1)
    if alpha.kind == "geometric":
        return math.exp(-p * K * math.log(alpha.ratio)) / (p * math.log(alpha.ratio))
    return None


def _checkpoints(K_max: int) -> list:
    first = 2 ** FIRST_CHECKPOINT_EXP
    if K_max < first:
        raise ValueError(f"K_max must be at least {first}")
    ks, k = [], first
    while k <= K_max:
        ks.append(k)
        k *= 2
    if ks[-1] != K_max:
        ks.append(K_max)
    return ks


def summability_profile(alpha: AlphaSequence, multiplicities: Sequence[int] | None = None,
                        p_values: Sequence[float] = (1.0,), K_max: int = 2 ** 20) -> list:
    """Partial traces ``S_K(p) = sum_{k<=K} mult_k (1 + alpha_k^2)^(-p/2)`` at doubling K.

    Multiplicities beyond the given list repeat its last entry.  Verdicts:
    ``converged`` when the integral-test tail bound past ``K_max`` is below
    1e-6 of the sum, ``diverging`` when each of the last three doublings adds
    more than 1e-6, ``inconclusive`` otherwise.  The tail bound is only used
    when the combined terms are nonincreasing over the upper half of the range.
    """
    p_values = [float(p) for p in p_values]
    if any(not p > 0 for p in p_values):
        raise ValueError("p values must be positive")
    ks = _checkpoints(int(K_max))
    K_max = ks[-1]
    if multiplicities is None:
        mult = np.ones(K_max)
        m_last = 1.0
    else:
        given = np.asarray(multiplicities, dtype=float)
        if given.size == 0 or np.any(given < 1):
            raise ValueError("multiplicities must be a nonempty list of positive integers")
        if given.size >= K_max:
            mult = given[:K_max]
        else:
            mult = np.concatenate([given, np.full(K_max - given.size, given[-1])])
        # largest multiplicity past K_max (the list's last entry repeats forever)
        m_last = float(max(given[K_max:].max(initial=0.0), given[-1]))
    mags = np.abs(alpha(K_max))
    thresholds = {"converged_rel_tail": CONVERGED_REL_TAIL, "diverging_increment": DIVERGING_INCREMENT,
                  "checkpoint_start": ks[0]}
    reports = []
    for p in p_values:
        with np.errstate(over="ignore"):
            terms = mult * (1.0 + mags ** 2) ** (-p / 2)
        sums = [math.fsum(terms[:K]) for K in ks]
        monotone = bool(np.all(np.diff(terms[K_max // 2:]) <= 0))
        integral = _tail_integral(alpha, p, K_max) if monotone else None
        far = None if integral is None else m_last * integral
        rows = []
        for K, S in zip(ks, sums):
            tail = None if far is None else (sums[-1] - S) + far
            rows.append((K, S, tail))
        S = sums[-1]
        incs = np.diff(sums[-4:]) if len(sums) >= 4 else np.array([])
        if far is not None and far < CONVERGED_REL_TAIL * S:
            verdict = "converged"
        elif incs.size == 3 and np.all(incs > DIVERGING_INCREMENT):
            verdict = "diverging"
        else:
            verdict = "inconclusive"
        reports.append(SummabilityReport(p, rows, far, verdict, thresholds))
    return reports
