"""Dense finite-dimensional state engine.

Density operators, projections, unitaries and effects are thin validated
wrappers around read-only complex numpy arrays.  The operations are the
three inferential rules (Born probabilities, Lüders conditioning, unitary
conjugation) plus the valuation step that turns coherent outcome prices
into a probability vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

__all__ = [
    "VALIDATION_TOL",
    "PROPERTY_TOL",
    "RECONSTRUCTION_TOL",
    "EPS_PROB",
    "QuantumValidationError",
    "DimensionMismatchError",
    "ZeroProbabilityError",
    "AxiomViolationError",
    "SectoredHilbertSpace",
    "DensityOperator",
    "Projection",
    "UnitaryMap",
    "Effect",
    "ValuationFunctional",
    "born_probability",
    "effect_probability",
    "luders_update",
    "evolve",
    "valuation_to_probabilities",
    "subspace_probe_family",
    "l2_violation",
    "informationally_complete_family",
]

VALIDATION_TOL = 1e-10
PROPERTY_TOL = 1e-9
RECONSTRUCTION_TOL = 1e-8
EPS_PROB = 1e-12


class QuantumValidationError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


class ZeroProbabilityError(ValueError):
    """Conditioning on an event whose probability is below ``EPS_PROB``."""


class AxiomViolationError(ValueError):
    def __init__(self, axiom: str, detail: str):
        self.axiom = axiom
        super().__init__(f"{axiom}: {detail}")


def _as_matrix(m) -> np.ndarray:
    if isinstance(m, _Operator):
        return m.matrix
    arr = np.array(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise QuantumValidationError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


class _Operator:
    __slots__ = ("matrix",)

    def __init__(self, matrix, tol: float = VALIDATION_TOL):
        arr = _as_matrix(matrix)
        arr = self._prepare(arr)
        self._validate(arr, tol)
        object.__setattr__(self, "matrix", _frozen(arr))

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def _prepare(self, arr: np.ndarray) -> np.ndarray:
        return arr

    def _validate(self, arr: np.ndarray, tol: float) -> None:
        pass

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim})"


def _hermitian_gap(arr: np.ndarray) -> float:
    return float(np.linalg.norm(arr - arr.conj().T))


class DensityOperator(_Operator):
    __slots__ = ()

    def _prepare(self, arr):
        return (arr + arr.conj().T) / 2

    def _validate(self, arr, tol):
        tr = np.trace(arr).real
        if abs(tr - 1) > tol:
            raise QuantumValidationError(f"trace {tr!r} differs from 1")
        lo = np.linalg.eigvalsh(arr).min()
        if lo < -tol:
            raise QuantumValidationError(f"negative eigenvalue {lo!r}")

    @classmethod
    def pure(cls, psi) -> "DensityOperator":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityOperator":
        return cls(np.eye(dim) / dim)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


class Projection(_Operator):
    __slots__ = ()

    def _validate(self, arr, tol):
        if _hermitian_gap(arr) > tol:
            raise QuantumValidationError("projection is not Hermitian")
        if np.linalg.norm(arr @ arr - arr) > tol:
            raise QuantumValidationError("projection is not idempotent")

    @classmethod
    def onto(cls, vectors) -> "Projection":
        """Orthogonal projection onto the span of the given vectors.

        Accepts one vector, a sequence of vectors, or a matrix whose columns
        are the vectors.
        """
        if isinstance(vectors, (list, tuple)):
            v = np.stack([np.asarray(x, dtype=complex).ravel() for x in vectors], axis=1)
        else:
            v = np.asarray(vectors, dtype=complex)
        if v.ndim == 1:
            v = v[:, None]
        q, _ = np.linalg.qr(v)
        return cls(q @ q.conj().T)

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.matrix).real))


class UnitaryMap(_Operator):
    __slots__ = ()

    def _validate(self, arr, tol):
        if np.linalg.norm(arr.conj().T @ arr - np.eye(arr.shape[0])) > tol:
            raise QuantumValidationError("matrix is not unitary")

    @classmethod
    def identity(cls, dim: int) -> "UnitaryMap":
        return cls(np.eye(dim))

    @property
    def dagger(self) -> "UnitaryMap":
        return UnitaryMap(self.matrix.conj().T)


class Effect(_Operator):
    __slots__ = ()

    def _prepare(self, arr):
        return (arr + arr.conj().T) / 2

    def _validate(self, arr, tol):
        w = np.linalg.eigvalsh(arr)
        if w.min() < -tol or w.max() > 1 + tol:
            raise QuantumValidationError(f"effect spectrum [{w.min()!r}, {w.max()!r}] outside [0, 1]")


@dataclass(frozen=True)
class SectoredHilbertSpace:
    """C^N split into consecutive sector blocks of the given ranks."""

    sector_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.sector_dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError("sector dimensions must be positive integers")
        object.__setattr__(self, "sector_dims", dims)

    @property
    def total_dim(self) -> int:
        return sum(self.sector_dims)

    @property
    def num_sectors(self) -> int:
        return len(self.sector_dims)

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(int(x) for x in np.concatenate([[0], np.cumsum(self.sector_dims)[:-1]]))

    def sector_slice(self, alpha: int) -> slice:
        self._check(alpha)
        start = self.offsets[alpha]
        return slice(start, start + self.sector_dims[alpha])

    def projection_matrix(self, alpha: int) -> np.ndarray:
        p = np.zeros((self.total_dim, self.total_dim), dtype=complex)
        s = self.sector_slice(alpha)
        p[s, s] = np.eye(self.sector_dims[alpha])
        return p

    def projection(self, alpha: int) -> Projection:
        return Projection(self.projection_matrix(alpha))

    def projections(self) -> list[Projection]:
        return [self.projection(a) for a in range(self.num_sectors)]

    def record_projection(self, sectors: Sequence[int]) -> Projection:
        """Sum of the sector projections for the listed sectors."""
        p = np.zeros((self.total_dim, self.total_dim), dtype=complex)
        for a in set(sectors):
            p += self.projection_matrix(a)
        return Projection(p)

    def block_diagonal(self, blocks: Sequence[np.ndarray]) -> np.ndarray:
        if len(blocks) != self.num_sectors:
            raise DimensionMismatchError("one block per sector is required")
        u = np.zeros((self.total_dim, self.total_dim), dtype=complex)
        for a, b in enumerate(blocks):
            s = self.sector_slice(a)
            u[s, s] = b
        return u

    def _check(self, alpha: int) -> None:
        if not 0 <= alpha < self.num_sectors:
            raise IndexError(f"sector index {alpha} out of range for {self.num_sectors} sectors")


def _check_dims(*mats: np.ndarray) -> None:
    shapes = {m.shape for m in mats}
    if len(shapes) != 1:
        raise DimensionMismatchError(f"incompatible dimensions {sorted(shapes)}")


def born_probability(rho: DensityOperator, P: Projection) -> float:
    """Tr(rho P), clamped to [0, 1]."""
    r, p = _as_matrix(rho), _as_matrix(P)
    _check_dims(r, p)
    val = float(np.einsum("ij,ji->", r, p).real)
    return min(1.0, max(0.0, val))


def effect_probability(rho: DensityOperator, E: Effect) -> float:
    """Tr(rho E); the linear extension of the Born rule to effects."""
    r, e = _as_matrix(rho), _as_matrix(E)
    _check_dims(r, e)
    return float(np.einsum("ij,ji->", r, e).real)


def luders_update(rho: DensityOperator, P: Projection, eps: float = EPS_PROB) -> DensityOperator:
    r, p = _as_matrix(rho), _as_matrix(P)
    _check_dims(r, p)
    weight = float(np.einsum("ij,ji->", r, p).real)
    if weight <= eps:
        raise ZeroProbabilityError(f"conditioning event has probability {weight!r} <= {eps!r}")
    return DensityOperator(p @ r @ p / weight)


def evolve(rho: DensityOperator, U: UnitaryMap) -> DensityOperator:
    r, u = _as_matrix(rho), _as_matrix(U)
    _check_dims(r, u)
    return DensityOperator(u @ r @ u.conj().T)


@dataclass(frozen=True)
class ValuationFunctional:
    """Prices of the unit gambles on each outcome, checked against V1-V3.

    Linearity (V1) is built in: a gamble's value is the linear extension of
    the prices given on the indicator gambles.
    """

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        for i, v in enumerate(vals):
            if v < 0:
                raise AxiomViolationError("V2 positivity", f"indicator of outcome {i} valued at {v!r}")
        total = sum(vals)
        if abs(total - 1) > 1e-12:
            raise AxiomViolationError("V3 normalization", f"unit gamble valued at {total!r}")

    def __call__(self, gamble: Sequence[float]) -> float:
        g = np.asarray(gamble, dtype=float)
        if g.shape != (len(self.values),):
            raise DimensionMismatchError("gamble must assign one payoff per outcome")
        return float(np.dot(self.values, g))


def valuation_to_probabilities(values: Sequence[float] | ValuationFunctional) -> np.ndarray:
    v = values if isinstance(values, ValuationFunctional) else ValuationFunctional(tuple(values))
    return np.array(v.values)


def subspace_probe_family(P: Projection) -> list[Projection]:
    """Rank-1 probes below P that span the Hermitian operators on its range.

    Built from an orthonormal basis {v_j} of the range: |v_j><v_j| and the
    projections onto (v_j + v_k)/sqrt2 and (v_j + i v_k)/sqrt2.
    """
    p = _as_matrix(P)
    w, vecs = np.linalg.eigh(p)
    basis = vecs[:, w > 0.5]
    return [Projection(np.outer(v, v.conj())) for v in _ic_vectors(basis)]


def l2_violation(rho: DensityOperator, P: Projection, posterior, probes: Sequence[Projection] | None = None) -> float:
    """Largest |Tr(posterior Q) - Tr(rho Q)/Tr(rho P)| over rank-1 probes Q <= P.

    ``posterior`` may be any Hermitian matrix; it need not be a valid state.
    """
    r, p, s = _as_matrix(rho), _as_matrix(P), _as_matrix(posterior)
    weight = float(np.einsum("ij,ji->", r, p).real)
    if probes is None:
        w, vecs = np.linalg.eigh(p)
        V = np.stack(_ic_vectors(vecs[:, w > 0.5]), axis=1)
        # Tr(X vv^dag) = v^dag X v, column-wise
        lhs = np.einsum("in,in->n", V.conj(), s @ V).real
        rhs = np.einsum("in,in->n", V.conj(), r @ V).real / weight
    else:
        Q = np.stack([_as_matrix(q) for q in probes])
        lhs = np.einsum("ij,nji->n", s, Q).real
        rhs = np.einsum("ij,nji->n", r, Q).real / weight
    return float(np.abs(lhs - rhs).max()) if lhs.size else 0.0


def _ic_vectors(basis: np.ndarray) -> list[np.ndarray]:
    cols = [basis[:, j] for j in range(basis.shape[1])]
    out = list(cols)
    for j in range(len(cols)):
        for k in range(j + 1, len(cols)):
            out.append((cols[j] + cols[k]) / np.sqrt(2))
            out.append((cols[j] + 1j * cols[k]) / np.sqrt(2))
    return out


def informationally_complete_family(dim: int) -> list[Projection]:
    """The d^2 rank-1 projections spanning the real space of d x d Hermitian matrices."""
    return [Projection(np.outer(v, v.conj())) for v in _ic_vectors(np.eye(dim, dtype=complex))]
