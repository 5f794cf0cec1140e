"""Sector-label record processes generated by unitary steps and Lüders conditioning.

Histories are tuples of 0-based sector indices.  Exact mode evaluates the
whole branching tree; sample mode draws i.i.d. histories by per-step
conditional sampling.  Transition effect operators
``E_beta^(alpha) = P_alpha U^dag P_beta U P_alpha`` decide whether exits from
a sector can carry memory of the hidden intra-sector state.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._random import derive_rng, haar_unitary
from .quantum import (
    EPS_PROB,
    VALIDATION_TOL,
    DensityOperator,
    Effect,
    QuantumValidationError,
    SectoredHilbertSpace,
    UnitaryMap,
    _as_matrix,
)

__all__ = [
    "EXACT_MODE_CAP",
    "WITNESS_TOL",
    "ExactModeCapError",
    "InstrumentConfig",
    "JointDistribution",
    "TransitionEffect",
    "ResetCheck",
    "MarkovVerdict",
    "Witness",
    "history_states",
    "joint_distribution",
    "sample_records",
    "empirical_distribution",
    "transition_effect",
    "transition_effects",
    "is_mixing",
    "scalar_reset_check",
    "markov_check",
    "witness_search",
    "identity_unitary",
    "sector_swap_unitary",
    "seeded_haar_unitary",
]

EXACT_MODE_CAP = 3**12
WITNESS_TOL = 1e-6


class ExactModeCapError(ValueError):
    pass


@dataclass(frozen=True)
class InstrumentConfig:
    space: SectoredHilbertSpace
    unitaries: tuple[UnitaryMap, ...]
    initial_state: DensityOperator

    def __post_init__(self):
        us = tuple(u if isinstance(u, UnitaryMap) else UnitaryMap(u) for u in self.unitaries)
        rho = self.initial_state
        if not isinstance(rho, DensityOperator):
            rho = DensityOperator(rho)
        if not us:
            raise ValueError("at least one step is required")
        n = self.space.total_dim
        if any(u.dim != n for u in us) or rho.dim != n:
            raise ValueError(f"all operators must act on dimension {n}")
        object.__setattr__(self, "unitaries", us)
        object.__setattr__(self, "initial_state", rho)

    @property
    def steps(self) -> int:
        return len(self.unitaries)


# -- named generators ---------------------------------------------------------

def identity_unitary(space: SectoredHilbertSpace) -> UnitaryMap:
    return UnitaryMap.identity(space.total_dim)


def sector_swap_unitary(space: SectoredHilbertSpace, a: int, b: int) -> UnitaryMap:
    """Permutation exchanging the basis of sector a with the leading basis vectors of sector b."""
    ra, rb = space.sector_dims[a], space.sector_dims[b]
    if a == b or ra > rb:
        raise ValueError("sector_swap needs distinct sectors with rank(a) <= rank(b)")
    perm = np.arange(space.total_dim)
    sa, sb = space.sector_slice(a), space.sector_slice(b)
    for i in range(ra):
        perm[sa.start + i], perm[sb.start + i] = sb.start + i, sa.start + i
    return UnitaryMap(np.eye(space.total_dim)[perm])


def seeded_haar_unitary(space: SectoredHilbertSpace, seed: int, sectors: Sequence[int] | None = None,
                        stream: Sequence = ()) -> UnitaryMap:
    """Haar unitary on the span of the listed sectors, identity elsewhere."""
    sectors = list(range(space.num_sectors)) if sectors is None else sorted(set(sectors))
    idx = np.concatenate([np.arange(space.total_dim)[space.sector_slice(a)] for a in sectors])
    u = np.eye(space.total_dim, dtype=complex)
    u[np.ix_(idx, idx)] = haar_unitary(len(idx), derive_rng(seed, "haar", *stream))
    return UnitaryMap(u)


# -- exact tree ---------------------------------------------------------------

def _branch(sigma: np.ndarray, u: np.ndarray, space: SectoredHilbertSpace):
    """Conditional sector weights and Lüders post-states after one unitary step."""
    evolved = u @ sigma @ u.conj().T
    out = []
    for a in range(space.num_sectors):
        s = space.sector_slice(a)
        w = float(np.trace(evolved[s, s]).real)
        post = np.zeros_like(evolved)
        post[s, s] = evolved[s, s]
        out.append((w, post))
    return out


def history_states(cfg: InstrumentConfig, depth: int | None = None, eps: float = EPS_PROB):
    """Exact tree up to ``depth`` steps.

    Returns ``(nodes, pruned)`` where ``nodes`` maps every reachable history
    (lengths 1..depth) to ``(probability, sigma_k(history))`` and ``pruned``
    maps each cut branch to the probability mass it carried.
    """
    depth = cfg.steps if depth is None else depth
    if not 1 <= depth <= cfg.steps:
        raise ValueError(f"depth must lie in [1, {cfg.steps}]")
    nodes: dict[tuple[int, ...], tuple[float, np.ndarray]] = {}
    pruned: dict[tuple[int, ...], float] = {}
    frontier = [((), 1.0, cfg.initial_state.matrix)]
    for k in range(depth):
        u = cfg.unitaries[k].matrix
        nxt = []
        for hist, prob, sigma in frontier:
            for a, (w, post) in enumerate(_branch(sigma, u, cfg.space)):
                h = hist + (a,)
                if w <= eps:
                    pruned[h] = prob * max(w, 0.0)
                    continue
                state = post / w
                nodes[h] = (prob * w, state)
                nxt.append((h, prob * w, state))
        frontier = nxt
    return nodes, pruned


@dataclass
class JointDistribution:
    num_sectors: int
    steps: int
    probabilities: dict[tuple[int, ...], float]
    pruned: dict[tuple[int, ...], float] = field(default_factory=dict)

    @property
    def total_mass(self) -> float:
        return float(sum(self.probabilities.values()))

    @property
    def pruned_mass(self) -> float:
        return float(sum(self.pruned.values()))

    def prob(self, history: Sequence[int]) -> float:
        return self.probabilities.get(tuple(history), 0.0)

    def marginal(self, prefix: Sequence[int]) -> float:
        prefix = tuple(prefix)
        k = len(prefix)
        return float(sum(p for h, p in self.probabilities.items() if h[:k] == prefix))

    def prefix_marginals(self, length: int) -> dict[tuple[int, ...], float]:
        out: dict[tuple[int, ...], float] = defaultdict(float)
        for h, p in self.probabilities.items():
            out[h[:length]] += p
        return dict(out)

    def table(self) -> list[tuple[tuple[int, ...], float]]:
        """All histories of full length in lexicographic order, zeros included."""
        return [(h, self.prob(h)) for h in itertools.product(range(self.num_sectors), repeat=self.steps)]


def joint_distribution(cfg: InstrumentConfig, eps: float = EPS_PROB, cap: int = EXACT_MODE_CAP) -> JointDistribution:
    size = cfg.space.num_sectors**cfg.steps
    if size > cap:
        raise ExactModeCapError(
            f"{size} histories exceed the exact-mode cap {cap}; use sample_records instead"
        )
    nodes, pruned = history_states(cfg, eps=eps)
    probs = {h: p for h, (p, _) in nodes.items() if len(h) == cfg.steps}
    return JointDistribution(cfg.space.num_sectors, cfg.steps, probs, pruned)


# -- sampling -----------------------------------------------------------------

def sample_records(cfg: InstrumentConfig, num_samples: int, seed: int, eps: float = EPS_PROB) -> list[tuple[int, ...]]:
    """Draw i.i.d. histories.

    Sample ``i`` consumes row ``i`` of a uniform table drawn from the seeded
    stream, and its label at each step is drawn from the Born weights of the
    current Lüders state (renormalized over branches above ``eps``).
    Post-states are cached per history prefix.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    rng = derive_rng(seed, "records")
    uniforms = rng.random((num_samples, cfg.steps))
    labels = np.zeros((num_samples, cfg.steps), dtype=np.int64)
    states = {(): cfg.initial_state.matrix}
    groups: dict[tuple[int, ...], np.ndarray] = {(): np.arange(num_samples)}
    for k in range(cfg.steps):
        u = cfg.unitaries[k].matrix
        nxt: dict[tuple[int, ...], list[np.ndarray]] = defaultdict(list)
        for prefix, idx in groups.items():
            branches = _branch(states[prefix], u, cfg.space)
            w = np.array([max(b[0], 0.0) for b in branches])
            w[w <= eps] = 0.0
            total = w.sum()
            if total <= 0:
                raise ValueError(f"history {prefix} has no branch above eps")
            cdf = np.cumsum(w / total)
            cdf[-1] = 1.0
            drawn = np.searchsorted(cdf, uniforms[idx, k], side="right")
            drawn = np.minimum(drawn, len(w) - 1)
            labels[idx, k] = drawn
            for a in np.unique(drawn):
                h = prefix + (int(a),)
                if h not in states:
                    states[h] = branches[a][1] / branches[a][0]
                nxt[h].append(idx[drawn == a])
        groups = {h: np.concatenate(parts) for h, parts in nxt.items()}
    return [tuple(int(x) for x in row) for row in labels]


def empirical_distribution(samples: Sequence[Sequence[int]]) -> dict[tuple[int, ...], float]:
    counts: dict[tuple[int, ...], int] = defaultdict(int)
    for s in samples:
        counts[tuple(s)] += 1
    n = len(samples)
    return {h: c / n for h, c in sorted(counts.items())}


# -- transition effects -------------------------------------------------------

@dataclass(frozen=True)
class TransitionEffect:
    alpha: int
    beta: int
    matrix: np.ndarray
    sector_projection: np.ndarray

    @property
    def sector_rank(self) -> int:
        return int(round(np.trace(self.sector_projection).real))

    @property
    def spectrum(self) -> np.ndarray:
        """Eigenvalues of E restricted to the sector, ascending."""
        w, v = np.linalg.eigh(self.sector_projection)
        basis = v[:, w > 0.5]
        return np.linalg.eigvalsh(basis.conj().T @ self.matrix @ basis)


def transition_effect(U: UnitaryMap, alpha: int, beta: int, space: SectoredHilbertSpace,
                      tol: float = VALIDATION_TOL) -> TransitionEffect:
    u = _as_matrix(U)
    pa = space.projection_matrix(alpha)
    pb = space.projection_matrix(beta)
    e = pa @ u.conj().T @ pb @ u @ pa
    e = (e + e.conj().T) / 2
    Effect(e, tol=tol)
    if np.linalg.eigvalsh(pa - e).min() < -tol:
        raise QuantumValidationError("transition effect exceeds its sector projection")
    return TransitionEffect(alpha, beta, e, pa)


def transition_effects(U: UnitaryMap, alpha: int, space: SectoredHilbertSpace,
                       tol: float = VALIDATION_TOL) -> list[TransitionEffect]:
    """All exits from ``alpha``; raises if they do not sum to P_alpha."""
    effects = [transition_effect(U, alpha, b, space, tol) for b in range(space.num_sectors)]
    gap = np.linalg.norm(sum(e.matrix for e in effects) - space.projection_matrix(alpha))
    if gap > tol:
        raise QuantumValidationError(f"transition effects from sector {alpha} miss completeness by {gap:.3e}")
    return effects


def is_mixing(E: TransitionEffect, tol: float = VALIDATION_TOL) -> bool:
    r = E.sector_rank
    scalar = np.trace(E.matrix).real / r * E.sector_projection
    return bool(np.linalg.norm(E.matrix - scalar) > tol)


@dataclass(frozen=True)
class ResetCheck:
    markovian_exit: bool
    constants: tuple[float, ...]
    max_deviation: float


def scalar_reset_check(U: UnitaryMap, alpha: int, space: SectoredHilbertSpace, tol: float = VALIDATION_TOL) -> ResetCheck:
    """Whether every exit effect from ``alpha`` is a multiple c_ab P_a."""
    effects = transition_effects(U, alpha, space)
    r = space.sector_dims[alpha]
    consts = tuple(float(np.trace(e.matrix).real / r) for e in effects)
    dev = max(float(np.linalg.norm(e.matrix - c * e.sector_projection)) for e, c in zip(effects, consts))
    ok = dev <= tol and abs(sum(consts) - 1) <= tol
    return ResetCheck(ok, consts, dev)


# -- Markov property ----------------------------------------------------------

@dataclass(frozen=True)
class MarkovVerdict:
    markovian: bool
    worst_violation: tuple[tuple[int, ...], tuple[int, ...], int, float] | None
    pairs_compared: int


def markov_check(dist: JointDistribution, tol: float = WITNESS_TOL, eps: float = EPS_PROB) -> MarkovVerdict:
    """Compare next-label conditionals across pasts that share the current label.

    Only prefixes with marginal probability above ``eps`` are compared.
    """
    if dist.steps < 3:
        raise ValueError("markov_check needs histories of length >= 3")
    worst = None
    pairs = 0
    for k in range(2, dist.steps):
        marg = dist.prefix_marginals(k)
        ext = dist.prefix_marginals(k + 1)
        by_last: dict[int, list[tuple[tuple[int, ...], np.ndarray]]] = defaultdict(list)
        for h in sorted(marg):
            if marg[h] <= eps:
                continue
            cond = np.array([ext.get(h + (b,), 0.0) / marg[h] for b in range(dist.num_sectors)])
            by_last[h[-1]].append((h, cond))
        for entries in by_last.values():
            for (h1, c1), (h2, c2) in itertools.combinations(entries, 2):
                pairs += 1
                diff = np.abs(c1 - c2)
                b = int(np.argmax(diff))
                if worst is None or diff[b] > worst[3]:
                    worst = (h1, h2, b, float(diff[b]))
    markovian = worst is None or worst[3] <= tol
    return MarkovVerdict(markovian, worst, pairs)


@dataclass(frozen=True)
class Witness:
    step: int
    history: tuple[int, ...]
    other_history: tuple[int, ...]
    alpha: int
    beta: int
    conditional: float
    other_conditional: float
    gap: float
    state_distance: float
    trace_identity_error: float
    effect_spectrum: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "step": self.step, "history": list(self.history), "other_history": list(self.other_history),
            "alpha": self.alpha, "beta": self.beta, "conditional": self.conditional,
            "other_conditional": self.other_conditional, "gap": self.gap,
            "state_distance": self.state_distance, "trace_identity_error": self.trace_identity_error,
            "effect_spectrum": list(self.effect_spectrum),
        }


def witness_search(cfg: InstrumentConfig, depth: int, tol: float = WITNESS_TOL) -> Witness | None:
    """Largest-gap pair of histories ending in the same sector with distinguishable futures.

    For histories h, h' of length k < depth ending in alpha, the next-step
    conditional of beta is Tr(E_beta^(alpha) sigma_k(h)) with E built from
    the (k+1)-th unitary.  A witness needs both a conditional gap and
    distinct post-interaction states above ``tol``.
    """
    if depth < 2:
        raise ValueError("depth must be >= 2")
    if depth > cfg.steps:
        raise ValueError(f"depth {depth} exceeds the {cfg.steps} configured steps")
    nodes, _ = history_states(cfg, depth - 1)
    best: Witness | None = None
    for k in range(1, depth):
        u = cfg.unitaries[k]
        by_last: dict[int, list[tuple[int, ...]]] = defaultdict(list)
        for h in sorted(nodes):
            if len(h) == k:
                by_last[h[-1]].append(h)
        for alpha, hists in sorted(by_last.items()):
            if len(hists) < 2:
                continue
            effects = transition_effects(u, alpha, cfg.space)
            for h1, h2 in itertools.combinations(hists, 2):
                s1, s2 = nodes[h1][1], nodes[h2][1]
                dist = float(np.linalg.norm(s1 - s2))
                if dist <= tol:
                    continue
                for e in effects:
                    c1 = float(np.trace(e.matrix @ s1).real)
                    c2 = float(np.trace(e.matrix @ s2).real)
                    gap = abs(c1 - c2)
                    if gap <= tol or (best is not None and gap <= best.gap):
                        continue
                    um = u.matrix
                    pb = cfg.space.projection_matrix(e.beta)
                    direct = [float(np.trace(pb @ um @ s @ um.conj().T).real) for s in (s1, s2)]
                    err = max(abs(direct[0] - c1), abs(direct[1] - c2))
                    best = Witness(k, h1, h2, alpha, e.beta, c1, c2, gap, dist, err,
                                   tuple(float(x) for x in e.spectrum))
    return best
