"""Claim-to-test traceability table.

Each row names a verified claim, the operation that computes it and the
tests that exercise it.  A row is ``missing`` when any listed test function
cannot be found under the tests directory; with a JUnit XML file its status
becomes ``passed`` or ``failed``.
"""

from __future__ import annotations

import ast
import xml.etree.ElementTree as ET
from pathlib import Path

CLAIMS: list[tuple[str, str, list[str]]] = [
    ("foundational accessibility K*R", "algebra.disc_accessibility",
     ["test_algebra.py::test_disc_accessibility"]),
    ("symmetry accessibility (G + A/2)^2", "algebra.sym_accessibility",
     ["test_algebra.py::test_sym_accessibility"]),
    ("continuous accessibility H^2 / 2^n", "algebra.cont_accessibility",
     ["test_algebra.py::test_cont_accessibility"]),
    ("(K, R, G, A) additive over direct sums", "algebra.sum_profiles",
     ["test_algebra.py::test_sum_profiles_examples", "test_algebra.py::test_factor_profile_examples"]),
    ("search bounds K*R <= 144 and at most 12 summands", "search.enumerate_candidates",
     ["test_search.py::test_enumeration_matches_brute_force", "test_search.py::test_combination_count_matches_binomial"]),
    ("structural balance has no solution below 144", "search.structural_solutions",
     ["test_search.py::test_small_bounds_have_no_solutions", "test_search.py::test_default_search_unique_minimal"]),
    ("unique minimal balanced algebra M1(C) + M1(H) + M3(C)", "search.structural_solutions",
     ["test_search.py::test_default_search_unique_minimal"]),
    ("representational balance n=4, N_gen=3, H=48", "search.representational_solutions",
     ["test_search.py::test_representational_examples"]),
    ("complex envelope C + M2(C) + M3(C)", "boundary.complex_envelope",
     ["test_boundary.py::test_envelope_examples"]),
    ("center of the envelope has three minimal projections", "boundary.center",
     ["test_boundary.py::test_center_examples"]),
    ("boundary balance H_b = 12, trace reduction ratio 1/4", "boundary.boundary_profile",
     ["test_boundary.py::test_boundary_profile_examples"]),
    ("resolution ratio equals R", "boundary.resolution_ratio",
     ["test_boundary.py::test_resolution_ratio_is_R"]),
    ("context-free records are sums of central projections", "boundary.verify_context_free",
     ["test_boundary.py::test_central_projections_invariant", "test_boundary.py::test_rank_one_inside_sector_refuted"]),
    ("coherent valuation is an expectation under a unique probability vector", "quantum.valuation_to_probabilities",
     ["test_quantum.py::test_valuation_examples"]),
    ("Born rule p(P) = Tr(rho P)", "quantum.born_probability",
     ["test_quantum.py::test_born_examples", "test_quantum.py::test_finite_additivity"]),
    ("trace-form representation is unique (tomographic check)", "tomography.reconstruct_state",
     ["test_tomography.py::test_round_trip_d6"]),
    ("effect extension is additive", "quantum.effect_probability",
     ["test_quantum.py::test_effect_additivity"]),
    ("Lüders conditioning satisfies (L1), (L2) and is unique", "quantum.luders_update",
     ["test_quantum.py::test_luders_properties", "test_quantum.py::test_luders_uniqueness_perturbation"]),
    ("epistemic evolution rho -> U rho U^dag", "quantum.evolve",
     ["test_quantum.py::test_evolution_consistency"]),
    ("interference breaks Chapman-Kolmogorov composition", "bell.interference_deviation",
     ["test_bell.py::test_balanced_interference"]),
    ("record process joint distribution", "records.joint_distribution",
     ["test_records.py::test_joint_uniform_one_step"]),
    ("transition effect trace identity and mixing criterion", "records.transition_effect",
     ["test_records.py::test_transition_trace_identity", "test_records.py::test_is_mixing_examples"]),
    ("reset sufficiency implies Markovian records", "records.markov_check",
     ["test_records.py::test_block_diagonal_is_markovian"]),
    ("non-Markovianity witness", "records.witness_search",
     ["test_records.py::test_witness_found_dim6"]),
    ("rank-1 sectors are automatically Markovian", "records.is_mixing",
     ["test_records.py::test_rank_one_sector_never_mixing"]),
    ("singlet correlation -n_A . n_B", "bell.correlation",
     ["test_bell.py::test_correlation_closed_form"]),
    ("CHSH value reaches 2 sqrt2 and never exceeds it", "bell.chsh_value",
     ["test_bell.py::test_canonical_chsh", "test_bell.py::test_scan_respects_tsirelson"]),
    ("no-signaling under local channels", "bell.no_signaling_check",
     ["test_bell.py::test_no_signaling_sweep"]),
]


def default_tests_dir() -> Path:
    cwd = Path.cwd() / "tests"
    if cwd.is_dir():
        return cwd
    return Path(__file__).resolve().parents[2] / "tests"


def discover_tests(tests_dir: Path) -> set[str]:
    found = set()
    for path in sorted(tests_dir.glob("test_*.py")):
        tree = ast.parse(path.read_text(encoding="utf-8"))
        for node in tree.body:
            if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)) and node.name.startswith("test"):
                found.add(f"{path.name}::{node.name}")
    return found


def junit_outcomes(path: Path) -> dict[str, str]:
    out = {}
    for case in ET.parse(path).getroot().iter("testcase"):
        module = case.get("classname", "").split(".")[-1]
        name = case.get("name", "").split("[")[0]
        failed = case.find("failure") is not None or case.find("error") is not None
        key = f"{module}.py::{name}"
        if failed or key not in out:
            out[key] = "failed" if failed else "passed"
    return out


def traceability_table(tests_dir: str | None = None, junit_path: str | None = None) -> list[dict]:
    tdir = Path(tests_dir) if tests_dir else default_tests_dir()
    present = discover_tests(tdir) if tdir.is_dir() else set()
    outcomes = junit_outcomes(Path(junit_path)) if junit_path else {}
    rows = []
    for claim, op, tests in CLAIMS:
        if any(t not in present for t in tests):
            status = "missing"
        elif outcomes and any(outcomes.get(t) == "failed" for t in tests):
            status = "failed"
        elif outcomes and all(outcomes.get(t) == "passed" for t in tests):
            status = "passed"
        else:
            status = "present"
        rows.append({"claim": claim, "operation": op, "tests": tests, "status": status})
    return rows
