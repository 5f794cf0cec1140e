"""Complex envelope, its center, boundary balance and context-free records."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt

import numpy as np

from ._random import derive_rng, haar_unitary
from .algebra import CandidateAlgebra, DivisionRing, FactorProfile
from .quantum import Projection, SectoredHilbertSpace, _as_matrix

__all__ = [
    "BoundaryBalanceError",
    "ComplexAlgebra",
    "BoundaryCenter",
    "BoundaryProfile",
    "ContextFreeVerdict",
    "complex_envelope",
    "center",
    "resolution_ratio",
    "boundary_profile",
    "sector_unitary_family",
    "verify_context_free",
]


class BoundaryBalanceError(ValueError):
    """K_b R_b 2^n_b is not a perfect square, so no integer H_b exists."""


@dataclass(frozen=True)
class ComplexAlgebra:
    """Direct sum of full complex matrix algebras M_{n_i}(C)."""

    summands: tuple[int, ...]

    def __post_init__(self):
        blocks = tuple(int(b) for b in self.summands)
        if not blocks or any(b < 1 for b in blocks):
            raise ValueError("block sizes must be positive")
        object.__setattr__(self, "summands", blocks)

    @property
    def rep_dim(self) -> int:
        return sum(self.summands)

    @property
    def label(self) -> str:
        return " + ".join("C" if b == 1 else f"M{b}(C)" for b in self.summands)


def complex_envelope(algebra: CandidateAlgebra) -> ComplexAlgebra:
    """pi(A) + i pi(A) in the minimal faithful representation.

    R and C factors complexify to blocks of their own size, quaternionic
    factors to blocks of twice their size.  Blocks are listed by size.
    """
    blocks = []
    for f in algebra.factors:
        blocks.append(2 * f.matrix_dim if f.division_ring is DivisionRing.H else f.matrix_dim)
    return ComplexAlgebra(tuple(sorted(blocks)))


@dataclass(frozen=True)
class BoundaryCenter:
    num_projections: int
    sector_dims: tuple[int, ...]
    K_b: int
    R_b: int

    @property
    def space(self) -> SectoredHilbertSpace:
        return SectoredHilbertSpace(self.sector_dims)


def center(env: ComplexAlgebra) -> BoundaryCenter:
    # Z(M_n(C)) = C * I_n, so the center is one copy of C per summand.
    k = len(env.summands)
    return BoundaryCenter(num_projections=k, sector_dims=env.summands, K_b=2 * k, R_b=k)


def resolution_ratio(disc: int, K: int) -> Fraction:
    return Fraction(disc, K)


@dataclass(frozen=True)
class BoundaryProfile:
    K_b: int
    R_b: int
    n_b: int
    H_b: int
    xi: Fraction
    resolution_bulk: int | None
    resolution_boundary: int

    def to_dict(self) -> dict:
        return {
            "K_b": self.K_b, "R_b": self.R_b, "n_b": self.n_b, "H_b": self.H_b,
            "xi": str(self.xi), "resolution_bulk": self.resolution_bulk,
            "resolution_boundary": self.resolution_boundary,
        }


def boundary_profile(K_b: int, R_b: int, n_b: int, H_bulk: int, bulk: FactorProfile | None = None) -> BoundaryProfile:
    product = K_b * R_b * 2**n_b
    H_b = isqrt(product)
    if H_b * H_b != product:
        raise BoundaryBalanceError(f"K_b * R_b * 2^n_b = {product} is not a perfect square")
    res_b = resolution_ratio(K_b * R_b, K_b)
    res_bulk = None if bulk is None else resolution_ratio(bulk.K * bulk.R, bulk.K)
    return BoundaryProfile(
        K_b=K_b, R_b=R_b, n_b=n_b, H_b=H_b, xi=Fraction(H_b, H_bulk),
        resolution_bulk=None if res_bulk is None else int(res_bulk),
        resolution_boundary=int(res_b),
    )


@dataclass
class ContextFreeVerdict:
    invariant: bool
    trials: int
    max_deviation: float
    counterexample: np.ndarray | None = None
    trial_index: int | None = None


def _phase_family(space: SectoredHilbertSpace) -> list[np.ndarray]:
    """Deterministic sector-wise unitaries.

    For theta in {pi/2, pi}: a global phase on each sector, and a relative
    phase on the last basis vector of each sector with rank >= 2.
    """
    out = []
    n = space.total_dim
    for theta in (np.pi / 2, np.pi):
        phase = np.exp(1j * theta)
        for a in range(space.num_sectors):
            d = np.ones(n, dtype=complex)
            d[space.sector_slice(a)] = phase
            out.append(np.diag(d))
        for a in range(space.num_sectors):
            if space.sector_dims[a] < 2:
                continue
            d = np.ones(n, dtype=complex)
            d[space.sector_slice(a).stop - 1] = phase
            out.append(np.diag(d))
    return out


def sector_unitary_family(space: SectoredHilbertSpace, trials: int, seed: int):
    """Yield ``trials`` sector-wise unitaries.

    Even trials are Haar draws (independent per sector, stream derived from
    (seed, trial)); odd trials cycle through the deterministic phase family.
    """
    phases = _phase_family(space)
    for t in range(trials):
        if t % 2 == 0:
            rng = derive_rng(seed, "sector-haar", t)
            yield space.block_diagonal([haar_unitary(r, rng) for r in space.sector_dims])
        else:
            yield phases[(t // 2) % len(phases)]


def verify_context_free(
    Q: Projection, space: SectoredHilbertSpace, trials: int, seed: int = 0, tol: float = 1e-12
) -> ContextFreeVerdict:
    """Test whether Q commutes with every sampled sector-wise unitary.

    Stops at the first unitary U with ||U Q U^dag - Q||_F > tol and returns it.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    q = Q.matrix if isinstance(Q, Projection) else Projection(_as_matrix(Q)).matrix
    if q.shape[0] != space.total_dim:
        raise ValueError("projection dimension does not match the sectored space")
    worst = 0.0
    for t, u in enumerate(sector_unitary_family(space, trials, seed)):
        dev = float(np.linalg.norm(u @ q @ u.conj().T - q))
        worst = max(worst, dev)
        if dev > tol:
            return ContextFreeVerdict(False, t + 1, worst, counterexample=u, trial_index=t)
    return ContextFreeVerdict(True, trials, worst)
