import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aperture_lab._random import derive_rng, haar_unitary, random_density
from aperture_lab.quantum import (
    AxiomViolationError,
    DensityOperator,
    DimensionMismatchError,
    Effect,
    Projection,
    QuantumValidationError,
    SectoredHilbertSpace,
    UnitaryMap,
    ValuationFunctional,
    ZeroProbabilityError,
    born_probability,
    effect_probability,
    evolve,
    informationally_complete_family,
    l2_violation,
    luders_update,
    subspace_probe_family,
    valuation_to_probabilities,
)


def random_family(d, rng):
    """Complete orthogonal family: a Haar basis cut into random contiguous groups."""
    u = haar_unitary(d, rng)
    cuts = np.sort(rng.choice(np.arange(1, d), size=rng.integers(1, min(d, 6)), replace=False))
    groups = np.split(np.arange(d), cuts)
    return [Projection(u[:, g] @ u[:, g].conj().T) for g in groups]


def random_projection(d, rng):
    u = haar_unitary(d, rng)
    k = int(rng.integers(1, d))
    return Projection(u[:, :k] @ u[:, :k].conj().T)


def test_valuation_examples():
    v = ValuationFunctional((0.2, 0.3, 0.5))
    assert np.abs(valuation_to_probabilities(v) - [0.2, 0.3, 0.5]).max() < 1e-15
    assert abs(v([1, 1, 1]) - 1) < 1e-15
    assert abs(v([2, 0, -1]) - (0.4 - 0.5)) < 1e-15
    with pytest.raises(AxiomViolationError) as exc:
        ValuationFunctional((0.6, -0.1, 0.5))
    assert "V2" in exc.value.axiom
    with pytest.raises(AxiomViolationError) as exc:
        valuation_to_probabilities((0.2, 0.2))
    assert "V3" in exc.value.axiom
    with pytest.raises(DimensionMismatchError):
        v([1, 0])


def test_born_examples():
    psi = np.array([1, 1j]) / np.sqrt(2)
    rho = DensityOperator.pure(psi)
    assert abs(born_probability(rho, Projection(np.diag([1, 0]))) - 0.5) < 1e-15
    assert abs(born_probability(rho, Projection.onto(psi)) - 1) < 1e-15
    mixed = DensityOperator.maximally_mixed(6)
    space = SectoredHilbertSpace((1, 2, 3))
    for a, d in enumerate((1, 2, 3)):
        assert abs(born_probability(mixed, space.projection(a)) - d / 6) < 1e-15
    with pytest.raises(DimensionMismatchError):
        born_probability(mixed, Projection(np.eye(2)))


def test_operator_validation():
    with pytest.raises(QuantumValidationError):
        DensityOperator(np.diag([1.5, -0.5]))
    with pytest.raises(QuantumValidationError):
        DensityOperator(np.eye(2))
    with pytest.raises(QuantumValidationError):
        Projection(np.diag([1, 0.5]))
    with pytest.raises(QuantumValidationError):
        UnitaryMap(np.diag([1, 2]))
    with pytest.raises(QuantumValidationError):
        Effect(np.diag([1.2, 0]))
    rho = DensityOperator.maximally_mixed(2)
    with pytest.raises((ValueError, AttributeError)):
        rho.matrix[0, 0] = 0


@pytest.mark.parametrize("d", [6, 48])
def test_finite_additivity(d):
    worst = 0.0
    for t in range(100):
        rng = derive_rng(11, "family", d, t)
        rho = DensityOperator(random_density(d, rng))
        fam = random_family(d, rng)
        probs = [born_probability(rho, p) for p in fam]
        worst = max(worst, abs(sum(probs) - 1))
        if len(fam) >= 2:
            joined = Projection(fam[0].matrix + fam[1].matrix)
            worst = max(worst, abs(born_probability(rho, joined) - probs[0] - probs[1]))
    assert worst < 1e-9


def test_effect_additivity():
    rng = derive_rng(2, "effects")
    rho = DensityOperator(random_density(5, rng))
    fam = random_family(5, rng)
    weights = rng.random(len(fam))
    E = Effect(sum(w * p.matrix for w, p in zip(weights, fam)))
    expected = sum(w * born_probability(rho, p) for w, p in zip(weights, fam))
    assert abs(effect_probability(rho, E) - expected) < 1e-12
    half = Effect(E.matrix / 2)
    assert abs(2 * effect_probability(rho, half) - effect_probability(rho, E)) < 1e-12


@pytest.mark.parametrize("d", [6, 48])
def test_luders_properties(d):
    worst = 0.0
    for t in range(100):
        rng = derive_rng(13, "luders", d, t)
        rho = DensityOperator(random_density(d, rng))
        P = random_projection(d, rng)
        post = luders_update(rho, P)
        # (L1) support in P
        worst = max(worst, abs(born_probability(post, P) - 1))
        # (L2) rank-1 probes below P rescale by Tr(rho P)
        worst = max(worst, l2_violation(rho, P, post))
    assert worst < 1e-9


@pytest.mark.parametrize("d", [6, 48])
def test_luders_uniqueness_perturbation(d):
    rejected = 0
    for t in range(100):
        rng = derive_rng(17, "perturb", d, t)
        rho = DensityOperator(random_density(d, rng))
        P = random_projection(d, rng)
        post = luders_update(rho, P).matrix
        # Hermitian traceless perturbation compressed into the range of P
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        x = P.matrix @ (g + g.conj().T) @ P.matrix
        x -= np.trace(x) / P.rank * P.matrix
        if np.linalg.norm(x) < 1e-12:
            # rank-1 P leaves no traceless room; leak outside the range instead
            x = (np.eye(d) - P.matrix) @ (g + g.conj().T) @ P.matrix
            x = x + x.conj().T
        x *= 1e-4 / np.linalg.norm(x)
        perturbed = post + x
        l1 = np.abs(P.matrix @ perturbed @ P.matrix - perturbed).max()
        l2 = l2_violation(rho, P, perturbed)
        rejected += bool(l1 > 1e-9 or l2 > 1e-9)
    assert rejected == 100


def test_luders_zero_probability():
    rho = DensityOperator(np.diag([1.0, 0.0]))
    with pytest.raises(ZeroProbabilityError):
        luders_update(rho, Projection(np.diag([0, 1])))


@pytest.mark.parametrize("d", [6, 48])
def test_evolution_consistency(d):
    rng = derive_rng(19, "evolve", d)
    rho = DensityOperator(random_density(d, rng))
    U = UnitaryMap(haar_unitary(d, rng))
    P = random_projection(d, rng)
    moved = Projection(U.dagger.matrix @ P.matrix @ U.matrix)
    # Heisenberg and Schroedinger pictures agree
    assert abs(born_probability(evolve(rho, U), P) - born_probability(rho, moved)) < 1e-10
    back = evolve(evolve(rho, U), U.dagger)
    assert np.abs(back.matrix - rho.matrix).max() < 1e-10
    assert np.abs(evolve(rho, UnitaryMap.identity(d)).matrix - rho.matrix).max() < 1e-15


def test_informationally_complete_family_spans():
    for d in (2, 3, 6):
        fam = informationally_complete_family(d)
        assert len(fam) == d * d
        rows = np.array([np.concatenate([p.matrix.real.ravel(), p.matrix.imag.ravel()]) for p in fam])
        assert np.linalg.matrix_rank(rows) == d * d


def test_l2_probe_paths_agree():
    rng = derive_rng(23, "probes")
    rho = DensityOperator(random_density(4, rng))
    P = random_projection(4, rng)
    sigma = luders_update(rho, P).matrix + 1e-3 * P.matrix
    a = l2_violation(rho, P, sigma)
    b = l2_violation(rho, P, sigma, subspace_probe_family(P))
    assert abs(a - b) < 1e-14 and a > 1e-5


def test_sectored_space():
    s = SectoredHilbertSpace((1, 2, 3))
    assert s.total_dim == 6 and s.num_sectors == 3 and s.offsets == (0, 1, 3)
    assert s.record_projection([0, 2]).rank == 4
    blocks = [np.eye(1), 2 * np.eye(2), 3 * np.eye(3)]
    assert np.abs(np.diag(s.block_diagonal(blocks)) - [1, 2, 2, 3, 3, 3]).max() == 0
    with pytest.raises((ValueError, IndexError)):
        s.projection(3)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 7), st.integers(0, 2**32 - 1))
def test_born_in_unit_interval(d, seed):
    rng = derive_rng(seed, "prop")
    rho = DensityOperator(random_density(d, rng))
    P = random_projection(d, rng)
    p = born_probability(rho, P)
    q = born_probability(rho, Projection(np.eye(d) - P.matrix))
    assert 0 <= p <= 1 and abs(p + q - 1) < 1e-12
