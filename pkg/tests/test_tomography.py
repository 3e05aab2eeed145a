import math

import numpy as np
import pytest

from cmiplab import tomography
from cmiplab.qcore import DensityMatrix, StateVector, polarization_basis


def random_pure(gen, dim):
    v = gen.normal(size=dim) + 1j * gen.normal(size=dim)
    return v / np.linalg.norm(v)


def test_catalog_sizes_and_projector_shape():
    one = tomography.projector_catalog(1)
    two = tomography.projector_catalog(2)
    assert len(one) == 6 and len(two) == 36
    for s in one:
        P = s.projector.matrix
        assert np.allclose(P, P.conj().T)
        assert np.allclose(P @ P, P)          # rank-1 projector
        assert abs(np.trace(P).real - 1.0) < 1e-12
    assert two[0].labels == ("H", "H") and len(two[0].labels) == 2


def test_circular_kets_convention():
    # R = (H - iV)/sqrt2, L = (H + iV)/sqrt2
    r = next(s for s in tomography.projector_catalog(1) if s.labels == ("R",))
    want = np.outer([1, -1j], [1, 1j]) / 2.0
    assert np.max(np.abs(r.projector.matrix - want)) < 1e-15
    # H/V projectors resolve the identity
    h = next(s for s in tomography.projector_catalog(1) if s.labels == ("H",))
    v = next(s for s in tomography.projector_catalog(1) if s.labels == ("V",))
    assert np.allclose(h.projector.matrix + v.projector.matrix, np.eye(2))


def test_design_matrix_is_informationally_complete():
    assert np.linalg.matrix_rank(tomography.design_matrix(1), tol=1e-10) == 4
    assert np.linalg.matrix_rank(tomography.design_matrix(2), tol=1e-10) == 16


def test_exact_counts_are_born_probabilities():
    s = StateVector(polarization_basis(), [1.0, 0.0])
    table = tomography.simulate_counts(DensityMatrix.from_state(s), None, 0)
    assert table.shots_per_setting is None
    assert abs(table.counts[("H",)] - 1.0) < 1e-15
    assert abs(table.counts[("V",)]) < 1e-15
    assert abs(table.counts[("D",)] - 0.5) < 1e-15
    assert abs(table.counts[("R",)] - 0.5) < 1e-15


def test_counts_are_seeded_and_bounded():
    gen = np.random.default_rng(2)
    rho = DensityMatrix.from_state(
        StateVector(polarization_basis(), random_pure(gen, 2)))
    t1 = tomography.simulate_counts(rho, 500, 9)
    t2 = tomography.simulate_counts(rho, 500, 9)
    t3 = tomography.simulate_counts(rho, 500, 10)
    assert t1.counts == t2.counts
    assert t1.counts != t3.counts
    assert all(0 <= c <= 500 for c in t1.counts.values())


def test_counts_csv_round_trip():
    gen = np.random.default_rng(4)
    basis = tomography._basis_for(2)
    rho = DensityMatrix.from_state(StateVector(basis, random_pure(gen, 4)))
    for shots in (None, 777):
        table = tomography.simulate_counts(rho, shots, 31)
        text = table.to_csv()
        assert text.startswith("# seed=31\n")
        assert text.splitlines()[1] == "setting,count,shots,seed"
        back = tomography.CountsTable.from_csv(text)
        assert back.shots_per_setting == shots
        assert back.seed == 31
        if shots is None:
            assert all(abs(back.counts[k] - table.counts[k]) == 0.0
                       for k in table.counts)
        else:
            assert back.counts == table.counts


def test_exact_reconstruction_of_random_states():
    gen = np.random.default_rng(6)
    worst = 0.0
    for _ in range(20):
        for n, dim in ((1, 2), (2, 4)):
            basis = tomography._basis_for(n)
            rho = DensityMatrix.from_state(StateVector(basis, random_pure(gen, dim)))
            report = tomography.reconstruct(
                tomography.simulate_counts(rho, None, 0))
            worst = max(worst, float(np.max(np.abs(report.rho_hat.matrix - rho.matrix))))
            assert report.residual < 1e-10
    assert worst < 1e-8, worst


def test_reconstruction_reports_fidelity_and_concurrence():
    basis = tomography._basis_for(2)
    triplet = StateVector(basis, np.array([1, 0, 0, 1]) / math.sqrt(2))
    report = tomography.reconstruct(
        tomography.simulate_counts(DensityMatrix.from_state(triplet), None, 0),
        target=triplet)
    assert abs(report.fidelity_vs_target - 1.0) < 1e-10
    assert abs(report.concurrence - 1.0) < 1e-8
    single = StateVector(polarization_basis(), [math.cos(0.4), math.sin(0.4)])
    report1 = tomography.reconstruct(
        tomography.simulate_counts(DensityMatrix.from_state(single), None, 0))
    assert report1.concurrence is None and report1.fidelity_vs_target is None


def test_finite_shot_fidelity_is_high():
    target = StateVector(polarization_basis(),
                         [math.cos(0.22 * math.pi), math.sin(0.22 * math.pi)])
    table = tomography.simulate_counts(DensityMatrix.from_state(target), 10_000, 7)
    report = tomography.reconstruct(table, target=target)
    assert report.fidelity_vs_target > 0.99
    assert report.residual < 0.05


def test_repair_keeps_reconstruction_physical():
    # heavy shot noise forces the raw inversion outside the state set; the
    # repaired estimate must still be a density matrix with a real residual
    gen = np.random.default_rng(12)
    basis = tomography._basis_for(2)
    rho = DensityMatrix.from_state(StateVector(basis, random_pure(gen, 4)))
    for seed in range(5):
        report = tomography.reconstruct(tomography.simulate_counts(rho, 40, seed))
        w = np.linalg.eigvalsh(report.rho_hat.matrix)
        assert w[0] > -1e-12
        assert abs(np.trace(report.rho_hat.matrix).real - 1.0) < 1e-10
        assert report.residual >= 0.0


def test_incomplete_table_is_rejected():
    table = tomography.CountsTable({("H",): 1.0, ("V",): 0.0}, None, 0)
    with pytest.raises(KeyError):
        tomography.reconstruct(table)


def test_simulate_counts_input_validation():
    basis = tomography._basis_for(1)
    rho = DensityMatrix(basis, np.eye(2) / 2)
    with pytest.raises(ValueError):
        tomography.simulate_counts(rho, 0, 1)
    eight = polarization_basis("a").combine(polarization_basis("b")).combine(
        polarization_basis("c"))
    big = DensityMatrix(eight, np.eye(8) / 8)
    with pytest.raises(ValueError):
        tomography.simulate_counts(big, 100, 1)


def test_report_json_fields():
    s = StateVector(polarization_basis(), [1.0, 0.0])
    report = tomography.reconstruct(
        tomography.simulate_counts(DensityMatrix.from_state(s), None, 0), target=s)
    import json
    doc = json.loads(report.to_json())
    assert set(doc) == {"basis", "rho_hat", "fidelity_vs_target", "concurrence",
                        "residual"}
    assert doc["basis"] == ["signal_pol"]
    assert doc["rho_hat"][0][0][0] == pytest.approx(1.0, abs=1e-10)
    assert doc["concurrence"] is None
