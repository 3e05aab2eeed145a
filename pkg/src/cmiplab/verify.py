"""Self-contained invariant checks runnable from the CLI.

Each check returns pass/fail plus a short detail line; `run_all` accepts an
alternative gamma1 solver so intentional faults (mutation testing) can
demonstrate that the physics contracts actually bite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import entanglement_lab as elab
from . import interferometer as ifo
from . import qkd42, tomography
from .qcore import (DensityMatrix, StateVector, concurrence, ensure_normalized,
                    polarization_basis, postselect)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_pure(gen, dim):
    v = gen.normal(size=dim) + 1j * gen.normal(size=dim)
    return v / np.linalg.norm(v)


def _random_mixed(gen, dim):
    g = gen.normal(size=(dim, dim)) + 1j * gen.normal(size=(dim, dim))
    m = g @ g.conj().T
    return m / np.trace(m).real


def _random_unitary(gen, dim):
    q, r = np.linalg.qr(gen.normal(size=(dim, dim)) + 1j * gen.normal(size=(dim, dim)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _check_unitarity(gen):
    worst = 0.0
    for _ in range(100):
        a = gen.uniform(0, math.pi)
        b = gen.uniform(0, math.pi)
        plan = ifo.plan_for(a, b, phi=gen.uniform(0, 2 * math.pi),
                            phi_prime=gen.uniform(0, 2 * math.pi))
        U = ifo.build_unitary(plan)
        s = StateVector(ifo.BASIS, _random_pure(gen, 4))
        worst = max(worst, abs(np.linalg.norm(U.matrix @ s.amps) - 1.0))
        G = elab.general_unitary(gen.uniform(0, math.pi / 4), gen.uniform(0, math.pi / 4))
        worst = max(worst, np.max(np.abs(G.matrix.conj().T @ G.matrix - np.eye(4))))
    return worst <= 1e-12, f"worst unitarity deviation {worst:.2e}"


def _check_normalization(gen):
    s = StateVector(polarization_basis(), [1.0 + 3e-10, 0.0])
    repaired = ensure_normalized(s)
    ok = abs(repaired.norm - 1.0) < 1e-15
    try:
        ensure_normalized(StateVector(polarization_basis(), [1.01, 0.0]))
        ok = False
    except ValueError:
        pass
    return ok, "repairs 1e-9 deviations, rejects 1e-2"


def _check_postselect_completeness(gen):
    worst = 0.0
    basis = elab.FULL_BASIS
    for _ in range(50):
        s = StateVector(basis, _random_pure(gen, basis.dim))
        for factor in basis.labels:
            total = sum(postselect(s, factor, sym)[1]
                        for sym in basis.symbols_of(factor))
            worst = max(worst, abs(total - 1.0))
    return worst <= 1e-12, f"worst probability-sum deviation {worst:.2e}"


def _check_concurrence_pure(gen):
    worst = 0.0
    basis = tomography._basis_for(2)
    for _ in range(1000):
        v = _random_pure(gen, 4)
        c = concurrence(DensityMatrix.from_state(StateVector(basis, v)))
        worst = max(worst, abs(c - 2 * abs(v[0] * v[3] - v[1] * v[2])))
    return worst <= 1e-9, f"worst |Wootters − 2|ad−bc|| = {worst:.2e}"


def _check_concurrence_local_unitary(gen):
    worst = 0.0
    basis = tomography._basis_for(2)
    for _ in range(200):
        rho = _random_mixed(gen, 4)
        UV = np.kron(_random_unitary(gen, 2), _random_unitary(gen, 2))
        c0 = concurrence(DensityMatrix(basis, rho))
        c1 = concurrence(DensityMatrix(basis, UV @ rho @ UV.conj().T))
        worst = max(worst, abs(c0 - c1))
    return worst <= 1e-9, f"worst local-unitary deviation {worst:.2e}"


def _check_delta_independence(gen):
    worst = 0.0
    for alpha in np.linspace(0.1, 3.0, 7):
        ref = None
        for delta in np.linspace(0.0, 2 * math.pi, 9):
            cfg = elab.TwoPhotonConfig(float(alpha), float(delta))
            c = concurrence(DensityMatrix.from_state(elab.polarization_pair_state(cfg)))
            br = elab.apply_cmip_signal(elab.prepare_two_photon(cfg), 0.3, 0.2)
            vals = (c, br.n1, br.e1, br.e2)
            if ref is None:
                ref = vals
            else:
                worst = max(worst, max(abs(x - y) for x, y in zip(vals, ref)))
    return worst <= 1e-12, f"worst delta dependence {worst:.2e}"


def _branch_states(alpha, beta, gamma1_solver):
    """Success states for both signs, bypassing run_cmip's plan validation."""
    if alpha <= beta:
        g1 = gamma1_solver(alpha, beta)
        plan = ifo.CmipPlan(alpha, beta, ifo.EXPAND, g1, 0.0)
    else:
        plan = ifo.CmipPlan(alpha, beta, ifo.CONTRACT, 0.0,
                            ifo.solve_gamma2(alpha, beta))
    U = ifo.build_unitary(plan)
    out = {}
    for sign in (+1, -1):
        evolved = StateVector(ifo.BASIS, U.matrix @ ifo.input_state(alpha, sign).amps)
        out[sign] = (postselect(evolved, "signal_path", "1"),
                     postselect(evolved, "signal_path", "2"))
    return out


def _ab_grid():
    for alpha in np.arange(0.1, 3.05, 0.1):
        for beta in np.linspace(0.05, math.pi - 0.05, 30):
            yield float(alpha), float(beta)


def _check_inner_product(gen, gamma1_solver):
    worst = 0.0
    for alpha, beta in _ab_grid():
        states = _branch_states(alpha, beta, gamma1_solver)
        (sp, _), _ = states[+1]
        (sm, _), _ = states[-1]
        ip = complex(np.vdot(sp.amps, sm.amps))
        worst = max(worst, abs(ip.real - math.cos(beta)), abs(ip.imag))
    return worst <= 1e-9, f"worst ⟨φ+|φ−⟩ − cos β deviation {worst:.2e}"


def _check_probability_equivalence(gen, gamma1_solver):
    worst = 0.0
    for alpha, beta in _ab_grid():
        states = _branch_states(alpha, beta, gamma1_solver)
        for sign in (+1, -1):
            (_, p1), _ = states[sign]
            worst = max(worst, abs(p1 - ifo.closed_form_probability(alpha, beta)))
    return worst <= 1e-12, f"worst amplitude-vs-closed-form gap {worst:.2e}"


def _check_usd_point(gen):
    worst = max(abs(ifo.closed_form_probability(a, math.pi / 2) - (1 - math.cos(a)))
                for a in np.arange(0.1, 1.55, 0.1))
    return worst <= 1e-12, f"worst |P(α,π/2) − (1−cos α)| = {worst:.2e}"


def _check_monotonicity(gen):
    ok = True
    for alpha in np.arange(0.2, 3.0, 0.2):
        up = [ifo.closed_form_probability(alpha, b)
              for b in np.linspace(alpha, math.pi, 40)]
        down = [ifo.closed_form_probability(alpha, b)
                for b in np.linspace(alpha, 0.0, 40)]
        ok &= all(x >= y - 1e-12 for x, y in zip(up, up[1:]))
        ok &= all(x >= y - 1e-12 for x, y in zip(down, down[1:]))
    return ok, "P never increases as β moves away from α on either side"


def _check_failure_purity(gen):
    worst = 0.0
    for alpha, beta in _ab_grid():
        states = _branch_states(alpha, beta, ifo.solve_gamma1)
        for sign in (+1, -1):
            _, (fail, p2) = states[sign]
            if fail is None:
                continue
            # all amplitude off the expected single mode
            idx = 1 if alpha <= beta else 0  # V for expansion, H for contraction
            worst = max(worst, float(np.abs(np.delete(fail.amps, idx)).max()))
    return worst <= 1e-9, f"worst stray failure amplitude {worst:.2e}"


def _check_entanglement_brute_force(gen):
    worst = 0.0
    for alpha in np.linspace(0.15, math.pi - 0.15, 10):
        state = elab.prepare_two_photon(elab.TwoPhotonConfig(float(alpha), 0.4))
        e_in = abs(math.sin(alpha))
        for g1 in np.linspace(0.0, math.pi / 4, 10):
            for g2 in np.linspace(0.0, math.pi / 4, 10):
                br = elab.apply_cmip_signal(state, float(g1), float(g2))
                n1, n2 = elab.branch_probabilities(alpha, g1, g2)
                e1, e2 = elab.output_entanglement(e_in, g1, g2, alpha)
                worst = max(worst, abs(br.n1 - n1), abs(br.n2 - n2))
                for closed, brute in ((e1, br.e1), (e2, br.e2)):
                    if closed is not None and brute is not None:
                        worst = max(worst, abs(closed - brute))
    return worst <= 1e-9, f"worst closed-form-vs-state gap {worst:.2e}"


def _check_predicate_equivalence(gen):
    mismatches = 0
    for alpha in np.linspace(0.15, math.pi - 0.15, 10):
        e_in = abs(math.sin(alpha))
        for g1 in np.linspace(0.0, math.pi / 4, 10):
            for g2 in np.linspace(0.0, math.pi / 4, 10):
                pred = elab.concentration_predicate(float(alpha), float(g1), float(g2))
                e1, _ = elab.output_entanglement(e_in, g1, g2, alpha)
                if e1 is None:
                    continue  # empty branch: nothing to compare
                if pred and e1 < e_in - 1e-12:
                    mismatches += 1
                elif not pred and e1 > e_in + 1e-12:
                    mismatches += 1
    return mismatches == 0, f"{mismatches} predicate mismatches"


def _check_tomography_round_trip(gen):
    worst = 0.0
    for _ in range(10):
        for n, dim in ((1, 2), (2, 4)):
            basis = tomography._basis_for(n)
            rho = DensityMatrix(basis, _random_mixed(gen, dim))
            table = tomography.simulate_counts(rho, None, 0)
            report = tomography.reconstruct(table)
            worst = max(worst, float(np.max(np.abs(report.rho_hat.matrix - rho.matrix))))
    return worst <= 1e-8, f"worst exact-mode reconstruction error {worst:.2e}"


def _check_qkd_no_eve(gen):
    for theta in (math.pi / 3, math.pi / 2):
        cfg = qkd42.config_for_theta(theta, n_pulses=20_000, seed=7)
        stats = qkd42.run_session(cfg)
        if stats.qber not in (None, 0.0):
            return False, f"no-Eve qber = {stats.qber} at theta = {theta}"
    return True, "qber exactly 0 without an eavesdropper"


def _check_determinism(gen):
    plan = ifo.plan_for(0.7, 1.9)
    a = ifo.sample_runs(+1, plan, 5000, 42)
    b = ifo.sample_runs(+1, plan, 5000, 42)
    cfg = qkd42.QkdConfig(n_pulses=5000, seed=42)
    s1 = qkd42.run_session(cfg)
    s2 = qkd42.run_session(cfg)
    ok = a == b and s1 == s2
    return ok, "identical seeds give identical counts and session stats"


def run_all(gamma1_solver=None, seed: int = 20260824) -> list[CheckResult]:
    """Run every invariant check; `gamma1_solver` overrides the device solver
    inside the interferometer contracts (mutation-testing hook)."""
    solver = gamma1_solver or ifo.solve_gamma1
    checks = [
        ("unitarity_preservation", _check_unitarity, ()),
        ("normalization_repair", _check_normalization, ()),
        ("postselect_completeness", _check_postselect_completeness, ()),
        ("concurrence_pure_equivalence", _check_concurrence_pure, ()),
        ("concurrence_local_unitary_invariance", _check_concurrence_local_unitary, ()),
        ("delta_independence", _check_delta_independence, ()),
        ("inner_product_contract", _check_inner_product, (solver,)),
        ("probability_equivalence", _check_probability_equivalence, (solver,)),
        ("usd_idp_point", _check_usd_point, ()),
        ("probability_monotonicity", _check_monotonicity, ()),
        ("failure_state_purity", _check_failure_purity, ()),
        ("entanglement_closed_vs_brute", _check_entanglement_brute_force, ()),
        ("concentration_predicate_equivalence", _check_predicate_equivalence, ()),
        ("tomography_round_trip", _check_tomography_round_trip, ()),
        ("qkd_no_eve_errorfree", _check_qkd_no_eve, ()),
        ("seeded_determinism", _check_determinism, ()),
    ]
    results = []
    for name, fn, extra in checks:
        gen = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
        try:
            passed, detail = fn(gen, *extra)
        except Exception as exc:  # a crash is a failure, not an abort
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(passed), detail))
    return results
