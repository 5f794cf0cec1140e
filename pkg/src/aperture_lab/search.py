"""Exhaustive search for solutions of the balance equations.

Two searches live here:

* the structural search walks every multiset of simple factors inside the
  search bounds and keeps those with ``(G + A/2)^2 == K R``;
* the representational search solves ``H^2 / 2^n == disc`` with
  ``H = N_gen * gen_size`` over even spacetime dimensions.

Everything is integer arithmetic and fully deterministic.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import Iterator

from .algebra import (
    RULE_TABLE_VERSION,
    AlgebraFactor,
    CandidateAlgebra,
    DivisionRing,
    factor_profile,
)

__all__ = [
    "SearchBounds",
    "SearchCertificate",
    "RepBalanceSolution",
    "ANOMALY_QUARTIC_YQ_SQUARED",
    "factor_catalogue",
    "enumerate_candidates",
    "structural_solutions",
    "representational_solutions",
    "worker_count",
]

# Value the n = 6 quartic anomaly condition reduces to; no real solution exists.
# Stored as metadata for the exclusion rule, not recomputed.
ANOMALY_QUARTIC_YQ_SQUARED = Fraction(-5, 36)


def worker_count() -> int:
    """Parallelism cap from ``APERTURE_LAB_THREADS`` (default 1)."""
    raw = os.environ.get("APERTURE_LAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class SearchBounds:
    max_disc: int = 144
    max_summands: int = 12

    def __post_init__(self):
        if self.max_disc < 1:
            raise ValueError("max_disc must be >= 1")
        if self.max_summands < 1:
            raise ValueError("max_summands must be >= 1")

    @property
    def max_matrix_dim(self) -> dict[str, int]:
        """Largest admissible m per ring with single-factor K R <= max_disc (0 if none)."""
        caps = {}
        for ring in DivisionRing:
            m = 0
            while True:
                p = factor_profile(AlgebraFactor(ring, m + 1))
                if p.K * p.R > self.max_disc:
                    break
                m += 1
            caps[ring.value] = m
        return caps

    def to_dict(self) -> dict:
        return {"max_disc": self.max_disc, "max_summands": self.max_summands,
                "max_matrix_dim": self.max_matrix_dim}


def factor_catalogue(bounds: SearchBounds) -> list[AlgebraFactor]:
    """Every simple factor whose own K R fits the bound, in canonical order."""
    caps = bounds.max_matrix_dim
    return [AlgebraFactor(ring, m) for ring in DivisionRing for m in range(1, caps[ring.value] + 1)]


def enumerate_candidates(bounds: SearchBounds) -> Iterator[CandidateAlgebra]:
    """Yield each canonical multiset with total K R <= max_disc exactly once.

    Order is depth-first over non-decreasing catalogue indices, so the output
    is deterministic.  K and R only grow as factors are added, which makes
    the total-disc test a valid pruning rule.
    """
    catalogue = factor_catalogue(bounds)
    profiles = [factor_profile(f).as_tuple() for f in catalogue]

    def walk(start: int, k: int, r: int, chosen: list[int]):
        for i in range(start, len(catalogue)):
            K = k + profiles[i][0]
            R = r + profiles[i][1]
            if K * R > bounds.max_disc:
                continue
            chosen.append(i)
            yield CandidateAlgebra(tuple(catalogue[j] for j in chosen))
            if len(chosen) < bounds.max_summands:
                yield from walk(i, K, R, chosen)
            chosen.pop()

    yield from walk(0, 0, 0, [])


def _walk_lead(args) -> tuple[int, int, list[tuple[int, tuple[int, ...]]]]:
    """Scan all multisets whose smallest catalogue index is ``lead``.

    Returns (multisets scanned, of which within the disc bound, balanced hits).
    """
    profiles, lead, max_summands, max_disc = args
    n_types = len(profiles)
    scanned = 0
    within = 0
    hits: list[tuple[int, tuple[int, ...]]] = []
    chosen = [lead]

    def visit(start, k, r, g, a, depth):
        nonlocal scanned, within
        scanned += 1
        disc = k * r
        if disc <= max_disc:
            within += 1
            if (2 * g + a) ** 2 == 4 * disc:
                hits.append((disc, tuple(chosen)))
        if depth == max_summands:
            return
        for i in range(start, n_types):
            K, R, G, A = profiles[i]
            chosen.append(i)
            visit(i, k + K, r + R, g + G, a + A, depth + 1)
            chosen.pop()

    K, R, G, A = profiles[lead]
    visit(lead, K, R, G, A, 1)
    return scanned, within, hits


@dataclass
class SearchCertificate:
    """Outcome of the structural search.

    ``candidates_enumerated`` counts every multiset of catalogue factors with
    at most ``max_summands`` summands; ``candidates_within_bound`` counts the
    subset whose total K R respects ``max_disc``.  Solutions are reported only
    inside the bound, where the search is exhaustive.
    """

    candidates_enumerated: int
    candidates_within_bound: int
    solutions: list[tuple[CandidateAlgebra, int]]
    minimal_solution: CandidateAlgebra | None
    minimal_unique: bool
    bounds: SearchBounds
    rule_table_version: str = RULE_TABLE_VERSION
    catalogue: list[AlgebraFactor] = field(default_factory=list)

    def solutions_at(self, disc: int) -> list[CandidateAlgebra]:
        return [c for c, d in self.solutions if d == disc]

    def to_dict(self) -> dict:
        return {
            "candidates_enumerated": self.candidates_enumerated,
            "candidates_within_bound": self.candidates_within_bound,
            "solutions": [_solution_row(c, d) for c, d in self.solutions],
            "minimal_solution": None if self.minimal_solution is None else self.minimal_solution.label,
            "minimal_unique": self.minimal_unique,
            "bounds": self.bounds.to_dict(),
            "rule_table_version": self.rule_table_version,
            "catalogue": [f.label for f in self.catalogue],
        }

    def csv_rows(self) -> list[dict]:
        return [_solution_row(c, d) for c, d in self.solutions]


def _solution_row(c: CandidateAlgebra, disc: int) -> dict:
    p = c.profile
    return {"factors": c.label, "K": p.K, "R": p.R, "G": p.G, "A": p.A, "disc": disc}


def structural_solutions(bounds: SearchBounds | None = None, workers: int | None = None) -> SearchCertificate:
    bounds = bounds or SearchBounds()
    catalogue = factor_catalogue(bounds)
    profiles = [factor_profile(f).as_tuple() for f in catalogue]
    jobs = [(profiles, lead, bounds.max_summands, bounds.max_disc) for lead in range(len(catalogue))]
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            parts = list(pool.map(_walk_lead, jobs))
    else:
        parts = [_walk_lead(job) for job in jobs]

    scanned = sum(p[0] for p in parts)
    within = sum(p[1] for p in parts)
    found = []
    for part in parts:
        for disc, idx in part[2]:
            found.append((CandidateAlgebra(tuple(catalogue[i] for i in idx)), disc))
    found.sort(key=lambda item: (item[1], item[0].key))

    minimal = found[0][0] if found else None
    unique = bool(found) and sum(1 for _, d in found if d == found[0][1]) == 1
    return SearchCertificate(
        candidates_enumerated=scanned,
        candidates_within_bound=within,
        solutions=found,
        minimal_solution=minimal,
        minimal_unique=unique,
        bounds=bounds,
        catalogue=catalogue,
    )


@dataclass(frozen=True)
class RepBalanceSolution:
    n: int
    N_gen: int
    H: int
    excluded_by_anomaly: bool

    def to_dict(self) -> dict:
        return {"n": self.n, "N_gen": self.N_gen, "H": self.H, "excluded_by_anomaly": self.excluded_by_anomaly}


def representational_solutions(
    disc: int = 144, gen_size: int = 16, n_min: int = 2, n_max: int = 12
) -> list[RepBalanceSolution]:
    """Even n in [n_min, n_max] for which ``(N_gen * gen_size)^2 == disc * 2^n``.

    Dimensions n >= 6 are flagged as excluded by the anomaly rule.
    """
    if disc < 1 or gen_size < 1:
        raise ValueError("disc and gen_size must be positive")
    out = []
    for n in range(n_min, n_max + 1):
        if n % 2:
            continue
        num = disc * 2**n
        den = gen_size * gen_size
        if num % den:
            continue
        ngen_sq = num // den
        ngen = isqrt(ngen_sq)
        if ngen * ngen != ngen_sq or ngen == 0:
            continue
        out.append(RepBalanceSolution(n=n, N_gen=ngen, H=ngen * gen_size, excluded_by_anomaly=n >= 6))
    return out
