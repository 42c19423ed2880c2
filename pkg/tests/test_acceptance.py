"""Acceptance gate: one test per criterion clause, each logging a PASS/FAIL line."""

import csv
import math
import time
from pathlib import Path

import numpy as np
import pytest

import qsrc
from oracles import dense_block_distortion, kron_all
from qsrc import cli, compression, properties
from qsrc.functionals import (
    fidelity,
    holevo_information,
    holevo_via_relative_entropy,
    relative_entropy,
    smin_binary,
    trace_distance,
    von_neumann_entropy,
)
from qsrc.states import (
    Ensemble,
    optimal_purification_pair,
    projector,
    random_density_matrix,
    random_ensemble,
    random_pure_state,
)
from qsrc.typical import captured_weight, product_spectrum_topk

FIXTURES = Path(qsrc.__file__).parent / "fixtures"
KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)


def _eig_oracle_entropy():
    lam = [(1 + 1 / math.sqrt(2)) / 2, (1 - 1 / math.sqrt(2)) / 2]
    return -sum(x * math.log2(x) for x in lam)


def test_criterion_1_functional_golden_values(verdict):
    start = time.perf_counter()
    oracle = _eig_oracle_entropy()
    chi = holevo_information(Ensemble([0.5, 0.5], [KET0, PLUS]))
    rng = np.random.default_rng(1)
    rho = random_density_matrix(3, rng)
    pure_pairs = [(random_pure_state(3, rng), random_pure_state(3, rng)) for _ in range(100)]
    checks = {
        "S(I/2)=1": abs(von_neumann_entropy(np.eye(2) / 2) - 1.0) <= 1e-12,
        "chi(0,+) vs eigenvalue oracle": abs(chi - oracle) <= 1e-6,
        "F(rho,rho)=1": abs(fidelity(rho, rho) - 1.0) <= 1e-9,
        "F disjoint=0": fidelity(np.diag([1.0, 0, 0]), np.diag([0, 0.5, 0.5])) <= 1e-12,
        "F pure=overlap^2": all(
            abs(fidelity(projector(a), projector(b)) - abs(np.vdot(a, b)) ** 2) <= 1e-9 for a, b in pure_pairs
        ),
        "D(rho,rho)=0": trace_distance(rho, rho) <= 1e-12,
        "D orthogonal=2": abs(trace_distance(projector(KET0), projector(KET1)) - 2.0) <= 1e-12,
        "D(0,+)=sqrt2": abs(trace_distance(projector(KET0), projector(PLUS)) - math.sqrt(2)) <= 1e-12,
        "S(rho|rho)=0": abs(relative_entropy(rho, rho)) <= 1e-9,
        "S(0|1)=inf": relative_entropy(projector(KET0), projector(KET1)) == math.inf,
        "S(0|I/2)=1": abs(relative_entropy(projector(KET0), np.eye(2) / 2) - 1.0) <= 1e-12,
    }
    elapsed = time.perf_counter() - start
    failed = [k for k, ok in checks.items() if not ok]
    verdict("1", not failed and elapsed < 1.0,
            f"chi={chi:.10f} oracle={oracle:.10f} |diff|={abs(chi - oracle):.1e}; "
            f"{len(checks) - len(failed)}/{len(checks)} examples; {elapsed:.2f}s < 1s"
            + (f"; failed: {failed}" if failed else ""))


def test_criterion_2_dual_formula_holevo(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(500):
        ens = random_ensemble(int(rng.integers(2, 5)), int(rng.integers(2, 5)), rng)
        worst = max(worst, abs(holevo_information(ens) - holevo_via_relative_entropy(ens)))
    elapsed = time.perf_counter() - start
    verdict("2", worst <= 1e-8 and elapsed < 30.0,
            f"max |chi - chi_rel| = {worst:.2e} <= 1e-8 over 500 ensembles; {elapsed:.1f}s < 30s")


def _disjoint_pair(rng):
    d = int(rng.integers(2, 4))
    u = np.linalg.qr(rng.standard_normal((2 * d, 2 * d)) + 1j * rng.standard_normal((2 * d, 2 * d)))[0]
    a, b = (random_density_matrix(d, rng) for _ in range(2))
    r1 = u[:, :d] @ a @ u[:, :d].conj().T
    r2 = u[:, d:] @ b @ u[:, d:].conj().T
    return r1, r2


def test_criterion_3_construction_oracle(verdict):
    rng = np.random.default_rng(3)
    worst = 0.0
    for i in range(100):
        d = 2 + i % 2
        r1 = random_density_matrix(d, rng, int(rng.integers(1, d + 1)))
        r2 = random_density_matrix(d, rng, int(rng.integers(1, d + 1)))
        p1 = float(rng.uniform(0.05, 0.95))
        psi1, psi2 = optimal_purification_pair(r1, r2)
        built = von_neumann_entropy(p1 * projector(psi1) + (1 - p1) * projector(psi2))
        worst = max(worst, abs(smin_binary(p1, 1 - p1, r1, r2) - built))
    worst_disjoint = 0.0
    for _ in range(100):
        r1, r2 = _disjoint_pair(rng)
        p1 = float(rng.uniform(0.05, 0.95))
        chi = holevo_information(Ensemble([p1, 1 - p1], [r1, r2]))
        worst_disjoint = max(worst_disjoint, abs(smin_binary(p1, 1 - p1, r1, r2) - chi))
    verdict("3", worst <= 1e-7 and worst_disjoint <= 1e-9,
            f"formula vs construction max {worst:.1e} <= 1e-7; disjoint S_min vs chi max {worst_disjoint:.1e} <= 1e-9")


def test_criterion_4_inequality_suites(verdict):
    start = time.perf_counter()
    counts = {"contractivity": 500, "monotonicity": 500, "fannes": 1000, "lemma": 200}
    results = [properties.run_suite(name, seed=20240611, samples=n) for name, n in counts.items()]
    elapsed = time.perf_counter() - start
    ok = all(r.passed and r.checked == counts[r.suite] for r in results) and elapsed < 120.0
    summary = ", ".join(f"{r.suite} {len(r.counterexamples)}/{r.checked}" for r in results)
    verdict("4", ok, f"violations {summary}; {elapsed:.1f}s < 120s")


@pytest.fixture(scope="module")
def standard_sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    paths = [str(out / "run1.csv"), str(out / "run2.csv")]
    codes = [cli.main(["rd-sweep", "--config", str(FIXTURES / "rd_sweep_standard.json"), "--out", paths[0]])]
    return codes, paths


def test_criterion_5_theorem_harness_on_standard_sweep(verdict, standard_sweep):
    codes, paths = standard_sweep
    lines = Path(paths[0]).read_text().splitlines()
    rows = list(csv.DictReader(ln for ln in lines[1:] if not ln.startswith("#")))
    produced = [r for r in rows if not r["estimation"].startswith("skipped")]
    gated = [r for r in produced if float(r["avg_distortion"]) <= 0.5]
    bad = [r for r in gated
           if r["bound_ok"] != "true" or float(r["bound_rhs"]) - float(r["bound_lhs"]) < -1e-9]
    worst = min(float(r["bound_rhs"]) - float(r["bound_lhs"]) for r in gated)
    verdict("5", codes[0] == 0 and gated and not bad and len(produced) == len(rows),
            f"{len(gated)}/{len(produced)} records with D<=1/2, {len(bad)} violations, "
            f"min slack {worst:.4f} >= -1e-9, exit code {codes[0]}")


@pytest.fixture(scope="module")
def trends():
    start = time.perf_counter()
    pure = Ensemble([0.5, 0.5], [KET0, PLUS])
    blind = {
        (rate, n): compression.run_blind_sj(pure, n, rate, exact_budget=1 << 14).avg_distortion
        for rate in (0.8, 0.4) for n in (4, 14)
    }
    disjoint = Ensemble([0.75, 0.25], [np.diag([0.7, 0.3, 0, 0]), np.diag([0, 0, 0.4, 0.6])])
    rate = holevo_information(disjoint) + 0.15
    composed = [compression.run_composed(disjoint, k, rate) for k in (2, 4, 6, 8)]
    return blind, composed, time.perf_counter() - start


def test_criterion_6a_high_rate_improves_from_4_to_14(verdict, trends):
    blind, _, _ = trends
    d4, d14 = blind[(0.8, 4)], blind[(0.8, 14)]
    verdict("6a", d14 < d4, f"rate 0.80: D(14)={d14:.6f} < D(4)={d4:.6f}")


def test_criterion_6b_high_rate_halves_from_4_to_14(verdict, trends):
    blind, _, _ = trends
    d4, d14 = blind[(0.8, 4)], blind[(0.8, 14)]
    verdict("6b", d14 < 0.5 * d4, f"rate 0.80: D(14)={d14:.6f} < D(4)/2={0.5 * d4:.6f}")


def test_criterion_6c_low_rate_degrades(verdict, trends):
    blind, _, _ = trends
    d4, d14 = blind[(0.4, 4)], blind[(0.4, 14)]
    verdict("6c", d14 > d4 and d14 > 1.0, f"rate 0.40: D(14)={d14:.6f} > D(4)={d4:.6f} and > 1.0")


def test_criterion_6d_composed_disjoint_decreasing(verdict, trends):
    _, composed, elapsed = trends
    d = [r.avg_distortion for r in composed]
    strictly = all(b < a for a, b in zip(d, d[1:]))
    violations = sum(r.contractivity_violations for r in composed)
    verdict("6d", strictly and violations == 0 and elapsed < 300.0,
            f"k=2,4,6,8: D={[round(x, 8) for x in d]}; contractivity violations {violations}; "
            f"criterion 6 runtime {elapsed:.1f}s < 300s")


def test_criterion_7_cross_path_exactness(verdict):
    rng = np.random.default_rng(7)
    worst_pure, worst_weight = 0.0, 0.0
    for _ in range(50):
        d = int(rng.integers(2, 4))
        n = int(rng.integers(1, 5 if d == 2 else 4))
        ts = product_spectrum_topk(random_density_matrix(d, rng), n, int(rng.integers(1, d ** n + 1)))
        kets = [random_pure_state(d, rng) for _ in range(n)]
        psi = kron_all(kets)
        dense = dense_block_distortion(ts, np.outer(psi, psi.conj()))
        worst_pure = max(worst_pure, abs(compression.pure_block_distortion(ts, kets) - dense))
        factors = [random_density_matrix(d, rng) for _ in range(n)]
        basis = ts.basis_vectors(1 << 12)
        dense_w = np.trace(basis.conj().T @ kron_all(factors) @ basis).real
        worst_weight = max(worst_weight, abs(captured_weight(ts, factors) - dense_w))
    verdict("7", worst_pure <= 1e-8 and worst_weight <= 1e-9,
            f"Gram vs dense distortion max {worst_pure:.1e} <= 1e-8; captured weight max {worst_weight:.1e} <= 1e-9")


def test_criterion_8_determinism(verdict, standard_sweep):
    codes, paths = standard_sweep
    codes.append(cli.main(["rd-sweep", "--config", str(FIXTURES / "rd_sweep_standard.json"), "--out", paths[1]]))
    a, b = Path(paths[0]).read_bytes(), Path(paths[1]).read_bytes()
    mc_rows = a.decode().count(",monte_carlo,")
    verdict("8", a == b and codes == [0, 0],
            f"two runs of the standard sweep byte-identical: {a == b} ({len(a)} bytes, {mc_rows} Monte Carlo rows)")
