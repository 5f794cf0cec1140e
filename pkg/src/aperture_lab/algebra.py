"""Simple real *-algebra factors and their accessibility measures.

A factor is ``M_m(D)`` with ``D`` one of the real division rings R, C, H.
Each factor carries four structural integers:

* ``K`` -- real dimension of the algebra,
* ``R`` -- dimension of the minimal faithful complex representation,
* ``G`` -- dimension of the non-abelian part of the unitary Lie algebra,
* ``A`` -- number of abelian ``u(1)`` summands of that Lie algebra.

All four are additive under direct sums, and all accessibility values are
computed in exact integer / rational arithmetic.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

__all__ = [
    "DivisionRing",
    "AlgebraFactor",
    "FactorProfile",
    "CandidateAlgebra",
    "AccessibilityProfile",
    "RULE_TABLE_VERSION",
    "factor_profile",
    "sum_profiles",
    "disc_accessibility",
    "sym_accessibility",
    "cont_accessibility",
    "accessibility",
    "is_structurally_balanced",
]

RULE_TABLE_VERSION = "compact-unitary-v1"


class DivisionRing(enum.Enum):
    R = "R"
    C = "C"
    H = "H"

    @property
    def real_dim(self) -> int:
        return {"R": 1, "C": 2, "H": 4}[self.value]

    @property
    def rank(self) -> int:
        """Position in the canonical ordering R < C < H."""
        return {"R": 0, "C": 1, "H": 2}[self.value]

    @classmethod
    def parse(cls, value: "DivisionRing | str") -> "DivisionRing":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"unknown division ring {value!r}; expected R, C or H") from None


@dataclass(frozen=True)
class AlgebraFactor:
    """The simple factor ``M_m(division_ring)``."""

    division_ring: DivisionRing
    matrix_dim: int

    def __post_init__(self):
        object.__setattr__(self, "division_ring", DivisionRing.parse(self.division_ring))
        if int(self.matrix_dim) != self.matrix_dim or self.matrix_dim < 1:
            raise ValueError(f"matrix_dim must be a positive integer, got {self.matrix_dim!r}")
        object.__setattr__(self, "matrix_dim", int(self.matrix_dim))

    @property
    def real_dim(self) -> int:
        return self.matrix_dim**2 * self.division_ring.real_dim

    @property
    def sort_key(self) -> tuple[int, int]:
        return (self.division_ring.rank, self.matrix_dim)

    @property
    def label(self) -> str:
        return f"M{self.matrix_dim}({self.division_ring.value})"

    @classmethod
    def parse(cls, text: str) -> "AlgebraFactor":
        """Parse ``"M3(C)"`` or a bare ring letter such as ``"H"``."""
        s = text.strip()
        if len(s) == 1:
            return cls(DivisionRing.parse(s), 1)
        if s.startswith("M") and s.endswith(")") and "(" in s:
            dim, ring = s[1:-1].split("(")
            return cls(DivisionRing.parse(ring), int(dim))
        raise ValueError(f"cannot parse algebra factor {text!r}")

    def __str__(self) -> str:
        return self.label


@dataclass(frozen=True)
class FactorProfile:
    K: int
    R: int
    G: int
    A: int

    def __post_init__(self):
        for name in ("K", "R", "G", "A"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def __add__(self, other: "FactorProfile") -> "FactorProfile":
        return FactorProfile(self.K + other.K, self.R + other.R, self.G + other.G, self.A + other.A)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.K, self.R, self.G, self.A)


def factor_profile(factor: AlgebraFactor) -> FactorProfile:
    """(K, R, G, A) of a single factor.

    The gauge part is the Lie algebra of the compact unitary group of the
    factor: ``so(m)`` for R, ``u(m)`` for C and ``sp(m)`` for H.
    """
    m = factor.matrix_dim
    ring = factor.division_ring
    if ring is DivisionRing.R:
        if m == 1:
            G, A = 0, 0
        elif m == 2:
            G, A = 0, 1  # so(2) = u(1)
        else:
            G, A = m * (m - 1) // 2, 0
        return FactorProfile(K=m * m, R=m, G=G, A=A)
    if ring is DivisionRing.C:
        G = 0 if m == 1 else m * m - 1
        return FactorProfile(K=2 * m * m, R=m, G=G, A=1)
    return FactorProfile(K=4 * m * m, R=2 * m, G=m * (2 * m + 1), A=0)


def sum_profiles(profiles: Iterable[FactorProfile]) -> FactorProfile:
    profiles = list(profiles)
    if not profiles:
        raise ValueError("empty direct sum: the trivial algebra is not a candidate")
    total = profiles[0]
    for p in profiles[1:]:
        total = total + p
    return total


def disc_accessibility(p: FactorProfile) -> int:
    return p.K * p.R


def sym_accessibility(p: FactorProfile) -> Fraction:
    """(G + A/2)^2, kept exact as (2G + A)^2 / 4."""
    return Fraction((2 * p.G + p.A) ** 2, 4)


def cont_accessibility(H_eff: int, n: int) -> Fraction:
    if H_eff < 0 or n < 0:
        raise ValueError("H_eff and n must be non-negative")
    return Fraction(H_eff * H_eff, 2**n)


def is_structurally_balanced(p: FactorProfile) -> bool:
    # (G + A/2)^2 == K R, multiplied through by 4
    return (2 * p.G + p.A) ** 2 == 4 * p.K * p.R


@dataclass(frozen=True)
class AccessibilityProfile:
    disc: int
    sym: Fraction
    cont: Fraction | None = None

    @property
    def structurally_balanced(self) -> bool:
        return self.sym == self.disc

    @property
    def fully_balanced(self) -> bool:
        return self.cont is not None and self.sym == self.disc == self.cont


def accessibility(p: FactorProfile, H_eff: int | None = None, n: int | None = None) -> AccessibilityProfile:
    cont = None
    if H_eff is not None and n is not None:
        cont = cont_accessibility(H_eff, n)
    return AccessibilityProfile(disc=disc_accessibility(p), sym=sym_accessibility(p), cont=cont)


@dataclass(frozen=True)
class CandidateAlgebra:
    """A non-trivial finite direct sum of simple factors, stored canonically."""

    factors: tuple[AlgebraFactor, ...]

    def __post_init__(self):
        factors = tuple(sorted(self.factors, key=lambda f: f.sort_key))
        if not factors:
            raise ValueError("a candidate algebra needs at least one factor")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def of(cls, *factors: "AlgebraFactor | str") -> "CandidateAlgebra":
        return cls(tuple(f if isinstance(f, AlgebraFactor) else AlgebraFactor.parse(f) for f in factors))

    @classmethod
    def parse(cls, text: str) -> "CandidateAlgebra":
        return cls.of(*(part for part in text.replace("⊕", "+").split("+") if part.strip()))

    @property
    def profile(self) -> FactorProfile:
        return sum_profiles(factor_profile(f) for f in self.factors)

    @property
    def disc(self) -> int:
        return disc_accessibility(self.profile)

    @property
    def key(self) -> tuple[tuple[int, int], ...]:
        return tuple(f.sort_key for f in self.factors)

    @property
    def label(self) -> str:
        return " + ".join(f.label for f in self.factors)

    def __len__(self) -> int:
        return len(self.factors)

    def __str__(self) -> str:
        return self.label
