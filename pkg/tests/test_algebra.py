from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import null_space

from aperture_lab.algebra import (
    AlgebraFactor,
    CandidateAlgebra,
    DivisionRing,
    FactorProfile,
    accessibility,
    cont_accessibility,
    disc_accessibility,
    factor_profile,
    is_structurally_balanced,
    sum_profiles,
    sym_accessibility,
)


def _matrix_basis(ring: str, m: int) -> list[np.ndarray]:
    """Real basis of M_m(ring) in its defining complex representation."""
    units = []
    for j in range(m):
        for k in range(m):
            e = np.zeros((m, m), dtype=complex)
            e[j, k] = 1
            units.append(e)
    if ring == "R":
        return units
    if ring == "C":
        return units + [1j * e for e in units]
    # quaternion a + b j  ->  [[a, -conj(b)], [b, conj(a)]]
    basis = []
    for e in units:
        for a, b in ((1, 0), (1j, 0), (0, 1), (0, 1j)):
            basis.append(np.block([[a * e, -np.conj(b) * e], [b * e, np.conj(a) * e]]))
    return basis


def _real_span_dim(mats) -> int:
    flat = np.array([np.concatenate([x.real.ravel(), x.imag.ravel()]) for x in mats])
    return int(np.linalg.matrix_rank(flat))


def _lie_oracle(ring: str, m: int) -> tuple[int, int, int, int]:
    """(K, R, G, A) from linear algebra on the representation.

    The unitary Lie algebra is the skew-Hermitian part of the algebra; A is
    the dimension of its center, G the remainder.
    """
    basis = _matrix_basis(ring, m)
    K = _real_span_dim(basis)
    rep = basis[0].shape[0]
    herm = np.array([np.concatenate([(b + b.conj().T).real.ravel(), (b + b.conj().T).imag.ravel()]) for b in basis]).T
    coeffs = null_space(herm)
    lie = [sum(c * b for c, b in zip(col, basis)) for col in coeffs.T]
    if not lie:
        return K, rep, 0, 0
    rows = []
    for y in lie:
        comms = [x @ y - y @ x for x in lie]
        rows.append(np.array([np.concatenate([c.real.ravel(), c.imag.ravel()]) for c in comms]).T)
    center = null_space(np.vstack(rows))
    A = center.shape[1]
    return K, rep, len(lie) - A, A


@pytest.mark.parametrize(
    "ring,m",
    [("R", 1), ("R", 2), ("R", 3), ("R", 4), ("C", 1), ("C", 2), ("C", 3), ("H", 1), ("H", 2)],
)
def test_factor_profile_matches_lie_oracle(ring, m):
    p = factor_profile(AlgebraFactor(DivisionRing(ring), m))
    assert p.as_tuple() == _lie_oracle(ring, m)


def test_factor_profile_examples():
    assert factor_profile(AlgebraFactor.parse("C")).as_tuple() == (2, 1, 0, 1)
    assert factor_profile(AlgebraFactor.parse("H")).as_tuple() == (4, 2, 3, 0)
    assert factor_profile(AlgebraFactor.parse("M3(C)")).as_tuple() == (18, 3, 8, 1)
    total = CandidateAlgebra.parse("C + H + M3(C)").profile
    assert total.as_tuple() == (24, 6, 11, 2)


def test_sum_profiles_examples():
    c1 = FactorProfile(2, 1, 0, 1)
    assert sum_profiles([c1]) == c1
    assert sum_profiles([c1, FactorProfile(4, 2, 3, 0), FactorProfile(18, 3, 8, 1)]).as_tuple() == (24, 6, 11, 2)
    r1 = factor_profile(AlgebraFactor.parse("M1(R)"))
    assert sum_profiles([r1, r1]).as_tuple() == (2, 2, 0, 0)
    with pytest.raises(ValueError):
        sum_profiles([])


def test_disc_accessibility():
    assert disc_accessibility(FactorProfile(24, 6, 0, 0)) == 144
    assert disc_accessibility(FactorProfile(1, 1, 0, 0)) == 1
    assert disc_accessibility(FactorProfile(6, 3, 0, 0)) == 18
    assert isinstance(disc_accessibility(FactorProfile(24, 6, 11, 2)), int)


def test_sym_accessibility():
    assert sym_accessibility(FactorProfile(0, 0, 11, 2)) == 144
    assert sym_accessibility(FactorProfile(0, 0, 0, 0)) == 0
    assert sym_accessibility(FactorProfile(0, 0, 0, 1)) == Fraction(1, 4)
    assert isinstance(sym_accessibility(FactorProfile(0, 0, 0, 1)), Fraction)


def test_cont_accessibility():
    assert cont_accessibility(48, 4) == 144
    assert cont_accessibility(12, 3) == 18
    assert cont_accessibility(0, 7) == 0
    with pytest.raises(ValueError):
        cont_accessibility(-1, 2)


def test_minimal_algebra_fully_balanced():
    acc = accessibility(CandidateAlgebra.parse("M1(C) + M1(H) + M3(C)").profile, H_eff=48, n=4)
    assert acc.disc == 144 and acc.sym == 144 and acc.cont == 144
    assert acc.fully_balanced


def test_candidate_canonical_form():
    a = CandidateAlgebra.parse("M3(C) + H + C")
    b = CandidateAlgebra.of("C", "M3(C)", "H")
    assert a == b
    assert a.label == "M1(C) + M3(C) + M1(H)"
    with pytest.raises(ValueError):
        CandidateAlgebra(())
    with pytest.raises(ValueError):
        AlgebraFactor(DivisionRing.C, 0)


factors = st.builds(AlgebraFactor, st.sampled_from(list(DivisionRing)), st.integers(1, 8))


@given(factors)
def test_factor_invariants(f):
    p = factor_profile(f)
    assert p.K == f.matrix_dim**2 * f.division_ring.real_dim
    assert p.G + p.A <= p.K
    if f.division_ring is not DivisionRing.R:
        assert p.K >= p.R
    acc = accessibility(p)
    assert acc.sym * 4 == (2 * p.G + p.A) ** 2
    assert acc.disc == p.K * p.R


@given(st.lists(factors, min_size=1, max_size=6), st.randoms())
def test_sum_is_order_insensitive(fs, rnd):
    shuffled = list(fs)
    rnd.shuffle(shuffled)
    assert CandidateAlgebra(tuple(fs)) == CandidateAlgebra(tuple(shuffled))
    assert sum_profiles(map(factor_profile, fs)) == sum_profiles(map(factor_profile, shuffled))
    p = CandidateAlgebra(tuple(fs)).profile
    assert is_structurally_balanced(p) == (sym_accessibility(p) == disc_accessibility(p))
