"""Subcommand runners: config in, :class:`RunReport` out.

Each runner returns JSON-ready results; ``checks_for`` turns a report into
the named pass/fail assertions used by ``--check``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from math import sqrt
from typing import Any, Callable

import numpy as np

from . import __version__
from ._random import derive_rng, haar_unitary, random_density, random_pure_vector
from .algebra import CandidateAlgebra, accessibility
from .bell import (
    TSIRELSON_BOUND,
    MeasurementSetting,
    canonical_chsh_config,
    chsh_scan,
    chsh_value,
    correlation,
    interference_deviation,
    interference_probabilities,
    no_signaling_check,
    random_kraus_channel,
)
from .boundary import boundary_profile, center, complex_envelope, verify_context_free
from .config import (
    SCHEMA_VERSION,
    BellConfig,
    BoundaryConfig,
    RecordConfig,
    SearchConfig,
    StateSpec,
    TraceConfig,
    UnitarySpec,
)
from .quantum import DensityOperator, Projection, SectoredHilbertSpace, UnitaryMap
from .records import (
    EXACT_MODE_CAP,
    InstrumentConfig,
    empirical_distribution,
    identity_unitary,
    is_mixing,
    joint_distribution,
    markov_check,
    sample_records,
    scalar_reset_check,
    sector_swap_unitary,
    seeded_haar_unitary,
    transition_effects,
    witness_search,
)
from .search import ANOMALY_QUARTIC_YQ_SQUARED, SearchBounds, representational_solutions, structural_solutions
from .serialization import dumps, matrix_from_json, to_jsonable

__all__ = ["RunReport", "run_search", "run_boundary", "run_record", "run_bell", "run_trace",
           "RUNNERS", "checks_for", "csv_table"]


@dataclass
class RunReport:
    command: str
    config: dict
    results: dict
    seed: int
    duration_s: float = 0.0
    tool_version: str = __version__
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "command": self.command,
            "tool_version": self.tool_version,
            "seed": self.seed,
            "duration_s": self.duration_s,
            "config": self.config,
            "results": self.results,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        return cls(
            command=data["command"], config=data["config"], results=data["results"],
            seed=data["seed"], duration_s=data["duration_s"], tool_version=data["tool_version"],
            schema_version=data["schema_version"],
        )

    def payload_json(self) -> str:
        """Serialized results only; deterministic for a fixed (config, seed)."""
        return dumps(self.results)


def _timed(command: str, config, fn: Callable[[Any], dict]) -> RunReport:
    start = time.perf_counter()
    results = to_jsonable(fn(config))
    return RunReport(
        command=command,
        config=config.model_dump(mode="json"),
        results=results,
        seed=config.seed,
        duration_s=round(time.perf_counter() - start, 6),
    )


# -- search -------------------------------------------------------------------

def _search(cfg: SearchConfig) -> dict:
    bounds = SearchBounds(max_disc=cfg.max_disc, max_summands=cfg.max_summands)
    cert = structural_solutions(bounds, workers=cfg.workers)
    out: dict[str, Any] = {"certificate": cert.to_dict()}
    minimal = cert.minimal_solution
    if minimal is not None:
        p = minimal.profile
        acc = accessibility(p)
        out["minimal_profile"] = {"K": p.K, "R": p.R, "G": p.G, "A": p.A,
                                  "disc": acc.disc, "sym": str(acc.sym)}
        sols = representational_solutions(acc.disc, cfg.gen_size, cfg.n_min, cfg.n_max)
    else:
        out["minimal_profile"] = None
        sols = []
    out["representational_solutions"] = [s.to_dict() for s in sols]
    out["anomaly_rule"] = {"excluded_from_n": 6, "quartic_yq_squared": str(ANOMALY_QUARTIC_YQ_SQUARED)}
    return out


def run_search(config: SearchConfig) -> RunReport:
    return _timed("search", config, _search)


# -- boundary -----------------------------------------------------------------

def _noncentral_rank_one(space: SectoredHilbertSpace, index: int, seed: int) -> Projection:
    """Even index: random vector inside a rank >= 2 sector; odd: random vector on the whole space."""
    rng = derive_rng(seed, "noncentral", index)
    n = space.total_dim
    if index % 2 == 0:
        wide = [a for a, r in enumerate(space.sector_dims) if r >= 2]
        if wide:
            a = wide[int(rng.integers(len(wide)))]
            v = np.zeros(n, dtype=complex)
            v[space.sector_slice(a)] = random_pure_vector(space.sector_dims[a], rng)
            return Projection(np.outer(v, v.conj()))
    v = random_pure_vector(n, rng)
    return Projection(np.outer(v, v.conj()))


def _boundary(cfg: BoundaryConfig) -> dict:
    algebra = CandidateAlgebra.parse(cfg.algebra)
    bulk = algebra.profile
    env = complex_envelope(algebra)
    cen = center(env)
    H_bulk = cfg.H_bulk
    if H_bulk is None:
        allowed = [s for s in representational_solutions(bulk.K * bulk.R) if not s.excluded_by_anomaly]
        if not allowed:
            raise ValueError("no unexcluded representational solution; pass H_bulk explicitly")
        H_bulk = allowed[0].H
    profile = boundary_profile(cen.K_b, cen.R_b, cfg.n_b, H_bulk, bulk=bulk)

    space = cen.space
    central = []
    for sectors in cfg.central_sets:
        v = verify_context_free(space.record_projection(sectors), space, cfg.invariance_trials, cfg.seed, cfg.tol)
        central.append({"sectors": sorted(set(sectors)), "invariant": v.invariant,
                        "trials": v.trials, "max_deviation": v.max_deviation})
    noncentral = []
    for i in range(cfg.noncentral_projections):
        q = _noncentral_rank_one(space, i, cfg.seed)
        v = verify_context_free(q, space, cfg.counterexample_trials, cfg.seed, cfg.tol)
        noncentral.append({"index": i, "invariant": v.invariant, "trials_used": v.trials,
                           "deviation": v.max_deviation})
    return {
        "algebra": algebra.label,
        "bulk_profile": {"K": bulk.K, "R": bulk.R, "G": bulk.G, "A": bulk.A},
        "envelope_blocks": list(env.summands),
        "envelope": env.label,
        "central_projections": cen.num_projections,
        "boundary_profile": profile.to_dict(),
        "H_bulk": H_bulk,
        "context_free_central": central,
        "context_free_noncentral": noncentral,
    }


def run_boundary(config: BoundaryConfig) -> RunReport:
    return _timed("boundary", config, _boundary)


# -- record -------------------------------------------------------------------

def _build_unitary(spec: UnitarySpec, space: SectoredHilbertSpace, step: int, seed: int) -> UnitaryMap:
    if spec.kind == "identity":
        return identity_unitary(space)
    if spec.kind == "sector_swap":
        a, b = spec.sectors
        return sector_swap_unitary(space, a, b)
    if spec.kind == "seeded_haar":
        return seeded_haar_unitary(space, spec.seed if spec.seed is not None else seed, spec.sectors, stream=(step,))
    m = matrix_from_json(spec.matrix.model_dump())
    return UnitaryMap(m)


def _build_state(spec: StateSpec, space: SectoredHilbertSpace) -> DensityOperator:
    n = space.total_dim
    if spec.kind == "maximally_mixed":
        return DensityOperator.maximally_mixed(n)
    if spec.kind == "matrix":
        return DensityOperator(matrix_from_json(spec.matrix.model_dump()))
    if spec.sector is None:
        raise ValueError(f"state kind {spec.kind!r} requires a sector")
    s = space.sector_slice(spec.sector)
    if spec.kind == "pure_sector":
        v = np.zeros(n, dtype=complex)
        v[s.start] = 1
        return DensityOperator.pure(v)
    return DensityOperator(space.projection_matrix(spec.sector) / space.sector_dims[spec.sector])


def build_instrument(cfg: RecordConfig) -> InstrumentConfig:
    space = SectoredHilbertSpace(tuple(cfg.sector_dims))
    specs = cfg.unitaries if len(cfg.unitaries) == cfg.steps else cfg.unitaries * cfg.steps
    us = tuple(_build_unitary(spec, space, k, cfg.seed) for k, spec in enumerate(specs))
    return InstrumentConfig(space, us, _build_state(cfg.initial_state, space))


def _hist(h) -> str:
    return "".join(str(a) for a in h)


def _record(cfg: RecordConfig) -> dict:
    inst = build_instrument(cfg)
    space = inst.space
    out: dict[str, Any] = {"sector_dims": list(space.sector_dims), "steps": inst.steps, "mode": cfg.mode}

    effects = []
    for k, u in enumerate(inst.unitaries):
        for a in range(space.num_sectors):
            reset = scalar_reset_check(u, a, space)
            for e in transition_effects(u, a, space):
                effects.append({"step": k + 1, "alpha": a, "beta": e.beta, "spectrum": e.spectrum.tolist(),
                                "mixing": is_mixing(e), "sector_rank": e.sector_rank})
            effects.append({"step": k + 1, "alpha": a, "scalar_reset": reset.markovian_exit,
                            "constants": list(reset.constants)})
    out["transition_effects"] = effects

    exact_ok = space.num_sectors**inst.steps <= EXACT_MODE_CAP
    dist = joint_distribution(inst) if exact_ok else None
    if cfg.mode == "exact":
        if dist is None:
            raise ValueError("history space exceeds the exact-mode cap; use mode 'sample'")
        out["distribution"] = [{"history": _hist(h), "probability": p} for h, p in dist.table()]
        out["total_mass"] = dist.total_mass
        out["pruned_mass"] = dist.pruned_mass
    else:
        samples = sample_records(inst, cfg.num_samples, cfg.seed)
        freq = empirical_distribution(samples)
        rows = []
        worst_z = 0.0
        keys = [h for h, _ in dist.table()] if dist is not None else sorted(freq)
        for h in keys:
            row = {"history": _hist(h), "frequency": freq.get(h, 0.0)}
            if dist is not None:
                p = dist.prob(h)
                sigma = sqrt(p * (1 - p) / cfg.num_samples)
                dev = abs(row["frequency"] - p)
                z = dev / sigma if sigma > 0 else (0.0 if dev == 0 else float("inf"))
                row.update({"probability": p, "z": z})
                worst_z = max(worst_z, z)
            rows.append(row)
        out["frequencies"] = rows
        out["num_samples"] = cfg.num_samples
        out["max_z"] = worst_z if dist is not None else None

    if dist is not None and inst.steps >= 3:
        mv = markov_check(dist, cfg.witness_tol)
        out["markov"] = {
            "markovian": mv.markovian,
            "pairs_compared": mv.pairs_compared,
            "worst_violation": None if mv.worst_violation is None else {
                "history": _hist(mv.worst_violation[0]), "other_history": _hist(mv.worst_violation[1]),
                "beta": mv.worst_violation[2], "delta": mv.worst_violation[3]},
        }
    if inst.steps >= 2:
        depth = cfg.depth or inst.steps
        w = witness_search(inst, depth, cfg.witness_tol)
        out["witness"] = None if w is None else w.to_dict()
        out["witness_depth"] = depth
    return out


def run_record(config: RecordConfig) -> RunReport:
    return _timed("record", config, _record)


# -- bell ---------------------------------------------------------------------

def _bell(cfg: BellConfig) -> dict:
    P = MeasurementSetting.planar
    table = []
    for theta in np.linspace(0.0, np.pi, cfg.correlation_angles):
        c = correlation(P(0.0), P(float(theta)))
        table.append({"theta": float(theta), "correlation": c, "closed_form": -float(np.cos(theta))})
    scan = chsh_scan(cfg.scan_configs, cfg.seed, cfg.scan_grid)

    ns = 0.0
    for c in range(cfg.channels):
        chan = random_kraus_channel(derive_rng(cfg.seed, "channel", c), num_ops=1 + c % 4)
        for s in range(cfg.states_per_channel):
            rho = random_density(4, derive_rng(cfg.seed, "state", c, s))
            ns = max(ns, no_signaling_check(rho, chan))

    d = cfg.interference_dim
    rng = derive_rng(cfg.seed, "interference")
    diag1 = np.diag(np.exp(2j * np.pi * rng.random(d)))
    diag2 = np.diag(np.exp(2j * np.pi * rng.random(d)))
    diag_dev = max(interference_deviation(diag1, diag2, i, j) for i in range(d) for j in range(d))
    balanced = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    q, cl = interference_probabilities(balanced, balanced, 0, 0)
    u1 = haar_unitary(d, derive_rng(cfg.seed, "interference-u1"))
    u2 = haar_unitary(d, derive_rng(cfg.seed, "interference-u2"))
    generic = [[interference_deviation(u1, u2, i, j) for j in range(d)] for i in range(d)]

    return {
        "correlation_table": table,
        "correlation_max_error": max(abs(r["correlation"] - r["closed_form"]) for r in table),
        "chsh_canonical": chsh_value(canonical_chsh_config()),
        "tsirelson_bound": float(TSIRELSON_BOUND),
        "chsh_scan": {"configs": int(len(scan)), "max": float(scan[:, 4].max()), "min": float(scan[:, 4].min())},
        "no_signaling": {"channels": cfg.channels, "states_per_channel": cfg.states_per_channel,
                         "max_deviation": ns},
        "interference": {"diagonal_max_deviation": diag_dev,
                         "balanced": {"quantum": q, "classical": cl, "deviation": abs(q - cl)},
                         "generic_max_deviation": float(np.max(generic))},
    }


def run_bell(config: BellConfig) -> RunReport:
    return _timed("bell", config, _bell)


# -- trace --------------------------------------------------------------------

def _trace(cfg: TraceConfig) -> dict:
    from .trace import traceability_table

    rows = traceability_table(cfg.tests_dir, cfg.junit_path)
    return {"rows": rows, "missing": [r["claim"] for r in rows if r["status"] == "missing"]}


def run_trace(config: TraceConfig) -> RunReport:
    return _timed("trace", config, _trace)


RUNNERS = {"search": run_search, "boundary": run_boundary, "record": run_record,
           "bell": run_bell, "trace": run_trace}


# -- acceptance checks -----------------------------------------------------------

def _search_checks(r: dict) -> list[tuple[str, bool, str]]:
    cert = r["certificate"]
    at144 = [s for s in cert["solutions"] if s["disc"] == 144]
    below = [s for s in cert["solutions"] if s["disc"] < 144]
    mp = r["minimal_profile"] or {}
    reps = {(s["n"], s["N_gen"], s["H"], s["excluded_by_anomaly"]) for s in r["representational_solutions"]}
    target = CandidateAlgebra.parse("M1(C) + M1(H) + M3(C)").label
    return [
        ("unique solution at disc 144",
         len(at144) == 1 and at144[0]["factors"] == target, f"{[s['factors'] for s in at144]}"),
        ("no solution below 144", not below, f"{len(below)} found"),
        ("candidate count >= 1e6", cert["candidates_enumerated"] >= 10**6, str(cert["candidates_enumerated"])),
        ("profile (24, 6, 11, 2)", (mp.get("K"), mp.get("R"), mp.get("G"), mp.get("A")) == (24, 6, 11, 2), str(mp)),
        ("(G + A/2)^2 == 144", mp.get("sym") == "144" and mp.get("disc") == 144, str(mp.get("sym"))),
        ("n=4 N_gen=3 H=48 allowed", (4, 3, 48, False) in reps, ""),
        ("n=6 N_gen=6 H=96 excluded", (6, 6, 96, True) in reps, ""),
        ("no odd n", all(s["n"] % 2 == 0 for s in r["representational_solutions"]), ""),
    ]


def _boundary_checks(r: dict) -> list[tuple[str, bool, str]]:
    bp = r["boundary_profile"]
    central = r["context_free_central"]
    nonc = r["context_free_noncentral"]
    return [
        ("envelope blocks (1, 2, 3)", r["envelope_blocks"] == [1, 2, 3], str(r["envelope_blocks"])),
        ("3 central projections", r["central_projections"] == 3, str(r["central_projections"])),
        ("K_b = 6, R_b = 3", (bp["K_b"], bp["R_b"]) == (6, 3), ""),
        ("H_b = 12", bp["H_b"] == 12, str(bp["H_b"])),
        ("xi = 1/4", Fraction(bp["xi"]) == Fraction(1, 4), bp["xi"]),
        ("central records invariant", all(c["invariant"] and c["max_deviation"] <= 1e-12 for c in central),
         str(max((c["max_deviation"] for c in central), default=0.0))),
        ("non-central records refuted", all(not c["invariant"] for c in nonc),
         str(max((c["trials_used"] for c in nonc), default=0))),
    ]


def _record_checks(r: dict) -> list[tuple[str, bool, str]]:
    checks = []
    if "total_mass" in r:
        err = abs(r["total_mass"] + r["pruned_mass"] - 1)
        checks.append(("probability conservation", err <= 1e-9, f"{err:.2e}"))
    if r.get("max_z") is not None:
        checks.append(("sampled within 3 sigma", r["max_z"] <= 3.0, f"{r['max_z']:.3f}"))
    rank1 = [e for e in r["transition_effects"] if e.get("sector_rank") == 1]
    checks.append(("rank-1 exits not mixing", not any(e["mixing"] for e in rank1), f"{len(rank1)} effects"))
    w = r.get("witness")
    if w is not None:
        checks.append(("witness trace identity", w["trace_identity_error"] <= 1e-10, f"{w['trace_identity_error']:.2e}"))
    if "markov" in r and r.get("witness_depth") == r["steps"]:
        consistent = r["markov"]["markovian"] == (w is None)
        checks.append(("markov verdict matches witness", consistent, ""))
    return checks


def _bell_checks(r: dict) -> list[tuple[str, bool, str]]:
    t = r["tsirelson_bound"]
    inter = r["interference"]
    return [
        ("canonical CHSH = 2 sqrt2", abs(r["chsh_canonical"] - t) <= 1e-12, f"{r['chsh_canonical']!r}"),
        ("scan below Tsirelson", r["chsh_scan"]["max"] <= t + 1e-9, f"{r['chsh_scan']['max']!r}"),
        ("scan reaches Tsirelson", r["chsh_scan"]["max"] >= t - 1e-9, ""),
        ("correlation closed form", r["correlation_max_error"] <= 1e-12, f"{r['correlation_max_error']:.2e}"),
        ("no-signaling", r["no_signaling"]["max_deviation"] < 1e-12, f"{r['no_signaling']['max_deviation']:.2e}"),
        ("diagonal interference 0", inter["diagonal_max_deviation"] <= 1e-15, f"{inter['diagonal_max_deviation']:.2e}"),
        ("balanced interference 1/2", abs(inter["balanced"]["deviation"] - 0.5) <= 1e-12, ""),
        ("generic interference > 1e-3", inter["generic_max_deviation"] > 1e-3, f"{inter['generic_max_deviation']:.3e}"),
    ]


def _trace_checks(r: dict) -> list[tuple[str, bool, str]]:
    return [("all claims traced", not r["missing"], ", ".join(r["missing"]))]


def checks_for(report: RunReport) -> list[tuple[str, bool, str]]:
    return {
        "search": _search_checks, "boundary": _boundary_checks, "record": _record_checks,
        "bell": _bell_checks, "trace": _trace_checks,
    }[report.command](report.results)


def csv_table(report: RunReport) -> tuple[list[dict], list[str]]:
    r = report.results
    if report.command == "search":
        return r["certificate"]["solutions"], ["factors", "K", "R", "G", "A", "disc"]
    if report.command == "boundary":
        rows = [{"kind": "central", "id": "+".join(map(str, c["sectors"])), "invariant": c["invariant"],
                 "trials": c["trials"], "max_deviation": c["max_deviation"]} for c in r["context_free_central"]]
        rows += [{"kind": "rank1", "id": c["index"], "invariant": c["invariant"], "trials": c["trials_used"],
                  "max_deviation": c["deviation"]} for c in r["context_free_noncentral"]]
        return rows, ["kind", "id", "invariant", "trials", "max_deviation"]
    if report.command == "record":
        if "distribution" in r:
            return r["distribution"], ["history", "probability"]
        return r["frequencies"], ["history", "frequency", "probability", "z"]
    if report.command == "bell":
        return r["correlation_table"], ["theta", "correlation", "closed_form"]
    rows = [dict(row, tests=" ".join(row["tests"])) for row in r["rows"]]
    return rows, ["claim", "operation", "tests", "status"]
