"""Two-qubit singlet correlations, CHSH, no-signaling and interference."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._random import derive_rng
from .quantum import (
    VALIDATION_TOL,
    DensityOperator,
    Projection,
    QuantumValidationError,
    SectoredHilbertSpace,
    _as_matrix,
    born_probability,
)

__all__ = [
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "TSIRELSON_BOUND",
    "MeasurementSetting",
    "ChshConfig",
    "KrausChannel",
    "spin_observable",
    "singlet_state",
    "partial_trace",
    "correlation",
    "correlation_in_state",
    "canonical_chsh_config",
    "chsh_value",
    "chsh_scan",
    "apply_local_channel",
    "no_signaling_check",
    "random_kraus_channel",
    "transition_matrix",
    "interference_probabilities",
    "interference_deviation",
    "sector_isometry",
    "embed_bipartite",
]

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
TSIRELSON_BOUND = 2 * np.sqrt(2)


@dataclass(frozen=True)
class MeasurementSetting:
    unit_vector: tuple[float, float, float]

    def __post_init__(self):
        v = tuple(float(x) for x in self.unit_vector)
        if len(v) != 3:
            raise ValueError("a measurement setting is a vector in R^3")
        if abs(np.linalg.norm(v) - 1) > 1e-12:
            raise ValueError(f"setting {v} is not a unit vector")
        object.__setattr__(self, "unit_vector", v)

    @classmethod
    def planar(cls, theta: float) -> "MeasurementSetting":
        """Direction at angle theta from the z axis in the x-z plane."""
        return cls((float(np.sin(theta)), 0.0, float(np.cos(theta))))

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.unit_vector)


def spin_observable(n: MeasurementSetting) -> np.ndarray:
    x, y, z = n.unit_vector
    return x * PAULI_X + y * PAULI_Y + z * PAULI_Z


def _spin_projectors(n: MeasurementSetting) -> tuple[np.ndarray, np.ndarray]:
    s = spin_observable(n)
    eye = np.eye(2)
    return (eye + s) / 2, (eye - s) / 2


def singlet_state() -> DensityOperator:
    # basis |++>, |+->, |-+>, |--> with |+> = |0>
    psi = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
    return DensityOperator.pure(psi)


def partial_trace(rho, dims: tuple[int, int] = (2, 2), keep: int = 1) -> np.ndarray:
    """Reduced operator on factor ``keep`` (0 = A, 1 = B) of a bipartite operator."""
    r = _as_matrix(rho).reshape(dims[0], dims[1], dims[0], dims[1])
    if keep == 1:
        return np.einsum("ijil->jl", r)
    return np.einsum("ijkj->ik", r)


def correlation_in_state(state: DensityOperator, nA: MeasurementSetting, nB: MeasurementSetting) -> float:
    """Sum over outcome pairs of a * b * Tr(rho (Pi_a (x) Pi_b))."""
    pa = _spin_projectors(nA)
    pb = _spin_projectors(nB)
    total = 0.0
    for sa, proj_a in zip((1, -1), pa):
        for sb, proj_b in zip((1, -1), pb):
            total += sa * sb * born_probability(state, Projection(np.kron(proj_a, proj_b)))
    return total


def correlation(nA: MeasurementSetting, nB: MeasurementSetting) -> float:
    return correlation_in_state(singlet_state(), nA, nB)


@dataclass(frozen=True)
class ChshConfig:
    a: MeasurementSetting
    a_prime: MeasurementSetting
    b: MeasurementSetting
    b_prime: MeasurementSetting
    state: DensityOperator | None = None

    def __post_init__(self):
        if self.state is not None and self.state.dim != 4:
            raise ValueError("CHSH state must act on C^2 (x) C^2")


def canonical_chsh_config() -> ChshConfig:
    """Planar settings with AB, A'B, A'B' at pi/4 and AB' at 3pi/4."""
    P = MeasurementSetting.planar
    return ChshConfig(a=P(0.0), a_prime=P(np.pi / 2), b=P(np.pi / 4), b_prime=P(3 * np.pi / 4))


def chsh_value(cfg: ChshConfig) -> float:
    """|<A B> - <A B'> + <A' B> + <A' B'>|."""
    state = cfg.state or singlet_state()
    c = lambda x, y: correlation_in_state(state, x, y)  # noqa: E731
    return abs(c(cfg.a, cfg.b) - c(cfg.a, cfg.b_prime) + c(cfg.a_prime, cfg.b) + c(cfg.a_prime, cfg.b_prime))


def _planar_observables(thetas: np.ndarray) -> np.ndarray:
    return np.sin(thetas)[:, None, None] * PAULI_X + np.cos(thetas)[:, None, None] * PAULI_Z


def chsh_scan(num_configs: int = 10_000, seed: int = 0, grid: int = 8,
              state: DensityOperator | None = None) -> np.ndarray:
    """|<S>| over planar configurations: the full angle grid, then seeded jitter.

    The grid has ``grid`` angles per setting (multiples of 2 pi / grid);
    remaining configurations perturb random grid points by up to half a
    grid step.  Returns the four angles and |<S>| per row.
    """
    rho = (state or singlet_state()).matrix.reshape(2, 2, 2, 2)
    step = 2 * np.pi / grid
    base = np.array(np.meshgrid(*[np.arange(grid) * step] * 4, indexing="ij")).reshape(4, -1).T
    base = base[:num_configs]
    extra = num_configs - len(base)
    if extra > 0:
        rng = derive_rng(seed, "chsh-scan")
        picks = base[rng.integers(0, len(base), size=extra)]
        jitter = rng.uniform(-step / 2, step / 2, size=(extra, 4))
        base = np.concatenate([base, picks + jitter])
    obs = [_planar_observables(base[:, i]) for i in range(4)]

    def corr(x, y):
        # Tr(rho (X (x) Y)) on the reshaped (2,2,2,2) operator
        return np.einsum("ijkl,nki,nlj->n", rho, x, y).real

    a, a2, b, b2 = obs
    s = corr(a, b) - corr(a, b2) + corr(a2, b) + corr(a2, b2)
    return np.column_stack([base, np.abs(s)])


@dataclass(frozen=True)
class KrausChannel:
    operators: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.array(k, dtype=complex) for k in self.operators)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        d = ops[0].shape[1]
        total = sum(k.conj().T @ k for k in ops)
        if np.linalg.norm(total - np.eye(d)) > VALIDATION_TOL:
            raise QuantumValidationError("Kraus operators are not trace preserving")
        object.__setattr__(self, "operators", ops)

    @property
    def dim(self) -> int:
        return self.operators[0].shape[1]

    @classmethod
    def identity(cls, dim: int = 2) -> "KrausChannel":
        return cls((np.eye(dim),))

    @classmethod
    def dephasing(cls) -> "KrausChannel":
        return cls((np.diag([1, 0]).astype(complex), np.diag([0, 1]).astype(complex)))


def random_kraus_channel(rng: np.random.Generator, num_ops: int = 3, dim: int = 2) -> KrausChannel:
    """Random channel from a Haar isometry C^d -> C^(d * num_ops)."""
    g = rng.normal(size=(dim * num_ops, dim)) + 1j * rng.normal(size=(dim * num_ops, dim))
    v, _ = np.linalg.qr(g)
    return KrausChannel(tuple(v[i * dim:(i + 1) * dim] for i in range(num_ops)))


def apply_local_channel(rho, channel: KrausChannel, dim_b: int = 2) -> np.ndarray:
    """(Phi_A (x) id_B)(rho)."""
    r = _as_matrix(rho)
    eye = np.eye(dim_b)
    out = np.zeros_like(r)
    for k in channel.operators:
        kk = np.kron(k, eye)
        out += kk @ r @ kk.conj().T
    return out


def no_signaling_check(rho, channel: KrausChannel) -> float:
    """||Tr_A((Phi_A (x) id)(rho)) - Tr_A(rho)||_F."""
    r = _as_matrix(rho)
    dims = (channel.dim, r.shape[0] // channel.dim)
    after = partial_trace(apply_local_channel(r, channel, dims[1]), dims, keep=1)
    before = partial_trace(r, dims, keep=1)
    return float(np.linalg.norm(after - before))


def transition_matrix(U, basis: np.ndarray | None = None) -> np.ndarray:
    """T_ik = <b_i | U | b_k> for the orthonormal columns b of ``basis``."""
    u = _as_matrix(U)
    if basis is None:
        return u
    b = np.asarray(basis, dtype=complex)
    if np.linalg.norm(b.conj().T @ b - np.eye(b.shape[1])) > VALIDATION_TOL:
        raise ValueError("basis columns are not orthonormal")
    return b.conj().T @ u @ b


def interference_probabilities(U1, U2, i: int, j: int, basis=None) -> tuple[float, float]:
    """(quantum, classical) probability of j -> i through U1 then U2.

    Quantum composes amplitudes, |sum_k T2_ik T1_kj|^2; classical composes
    probabilities, sum_k |T2_ik|^2 |T1_kj|^2.
    """
    t1 = transition_matrix(U1, basis)
    t2 = transition_matrix(U2, basis)
    n = t1.shape[0]
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"indices ({i}, {j}) out of range for dimension {n}")
    quantum = abs(t2[i, :] @ t1[:, j]) ** 2
    classical = float(np.sum(np.abs(t2[i, :]) ** 2 * np.abs(t1[:, j]) ** 2))
    return float(quantum), classical


def interference_deviation(U1, U2, i: int, j: int, basis=None) -> float:
    q, c = interference_probabilities(U1, U2, i, j, basis)
    return abs(q - c)


def sector_isometry(space: SectoredHilbertSpace, sector: int) -> np.ndarray:
    """Isometry C^r -> H onto the given sector."""
    v = np.zeros((space.total_dim, space.sector_dims[sector]), dtype=complex)
    s = space.sector_slice(sector)
    v[s, :] = np.eye(space.sector_dims[sector])
    return v


def embed_bipartite(op, space: SectoredHilbertSpace, sector: int = 1) -> np.ndarray:
    """Map an operator on C^2 (x) C^2 into B(H (x) H) via two copies of a rank-2 sector."""
    if space.sector_dims[sector] != 2:
        raise ValueError("the host sector must have rank 2")
    v = sector_isometry(space, sector)
    vv = np.kron(v, v)
    return vv @ _as_matrix(op) @ vv.conj().T

