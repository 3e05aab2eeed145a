"""Simulated polarization-state tomography with finite counts.

Measurement model: the overcomplete six-projector catalog {H, V, D, A, R, L}
per qubit (36 product settings for a pair), binomial counting statistics per
setting, linear inversion over the Pauli operator basis, and eigenvalue
clipping as positivity repair.  shots_per_setting=None is the exact-Born-rule
sentinel used as the noiseless oracle.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .qcore import (IDLER_POL, DensityMatrix, Operator, StateVector,
                    concurrence, fidelity, polarization_basis)

_SQ = 1.0 / math.sqrt(2.0)
_KETS = {
    "H": np.array([1.0, 0.0], dtype=complex),
    "V": np.array([0.0, 1.0], dtype=complex),
    "D": np.array([_SQ, _SQ], dtype=complex),
    "A": np.array([_SQ, -_SQ], dtype=complex),
    "R": np.array([_SQ, -1j * _SQ], dtype=complex),
    "L": np.array([_SQ, 1j * _SQ], dtype=complex),
}
LABELS = ("H", "V", "D", "A", "R", "L")

_PAULIS = [np.eye(2, dtype=complex),
           np.array([[0, 1], [1, 0]], dtype=complex),
           np.array([[0, -1j], [1j, 0]], dtype=complex),
           np.array([[1, 0], [0, -1]], dtype=complex)]


def _basis_for(n_qubits: int):
    if n_qubits == 1:
        return polarization_basis()
    if n_qubits == 2:
        return polarization_basis().combine(polarization_basis(IDLER_POL))
    raise ValueError(f"n_qubits must be 1 or 2, got {n_qubits}")


@dataclass(frozen=True)
class MeasurementSetting:
    labels: tuple[str, ...]
    projector: Operator


def projector_catalog(n_qubits: int) -> list[MeasurementSetting]:
    """Rank-1 product projectors, 6 per qubit (informationally complete)."""
    basis = _basis_for(n_qubits)
    settings = []
    if n_qubits == 1:
        combos = [(lab,) for lab in LABELS]
    else:
        combos = [(a, b) for a in LABELS for b in LABELS]
    for labs in combos:
        ket = _KETS[labs[0]]
        for lab in labs[1:]:
            ket = np.kron(ket, _KETS[lab])
        settings.append(MeasurementSetting(labs, Operator(basis, np.outer(ket, ket.conj()))))
    return settings


def pauli_products(n_qubits: int) -> list[np.ndarray]:
    if n_qubits == 1:
        return list(_PAULIS)
    return [np.kron(a, b) for a in _PAULIS for b in _PAULIS]


def design_matrix(n_qubits: int) -> np.ndarray:
    """Map from Pauli coefficients to setting probabilities, tr(Π_i P_k)."""
    catalog = projector_catalog(n_qubits)
    paulis = pauli_products(n_qubits)
    A = np.empty((len(catalog), len(paulis)))
    for i, setting in enumerate(catalog):
        for k, P in enumerate(paulis):
            A[i, k] = np.trace(setting.projector.matrix @ P).real
    return A


@dataclass(frozen=True)
class CountsTable:
    """Per-setting click counts; in exact mode the counts are Born probabilities."""

    counts: dict
    shots_per_setting: int | None
    seed: int

    @property
    def n_qubits(self) -> int:
        return len(next(iter(self.counts)))

    def frequencies(self) -> np.ndarray:
        catalog = projector_catalog(self.n_qubits)
        f = np.array([self.counts[s.labels] for s in catalog], dtype=float)
        if self.shots_per_setting is not None:
            f = f / self.shots_per_setting
        return f

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# seed={self.seed}\n")
        buf.write("setting,count,shots,seed\n")
        shots = "exact" if self.shots_per_setting is None else self.shots_per_setting
        for labs in sorted(self.counts):
            count = self.counts[labs]
            count_txt = repr(float(count)) if self.shots_per_setting is None else int(count)
            buf.write(f"{''.join(labs)},{count_txt},{shots},{self.seed}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CountsTable":
        counts, shots, seed = {}, None, 0
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("setting,"):
                continue
            setting, count, shots_txt, seed_txt = line.split(",")
            shots = None if shots_txt == "exact" else int(shots_txt)
            counts[tuple(setting)] = float(count) if shots is None else int(count)
            seed = int(seed_txt)
        return cls(counts, shots, seed)


def simulate_counts(rho: DensityMatrix, shots_per_setting: int | None,
                    seed: int) -> CountsTable:
    """Binomial counts per setting; exact Born probabilities when shots is None.

    Setting i draws from the derived stream (seed, 'tomo', i), so settings are
    independent and the table is reproducible per seed.
    """
    n_qubits = {2: 1, 4: 2}.get(rho.basis.dim)
    if n_qubits is None:
        raise ValueError(f"tomography handles 1 or 2 qubits, got dim {rho.basis.dim}")
    if shots_per_setting is not None and shots_per_setting < 1:
        raise ValueError(f"shots_per_setting must be >= 1, got {shots_per_setting}")
    counts = {}
    for i, setting in enumerate(projector_catalog(n_qubits)):
        p = float(np.trace(rho.matrix @ setting.projector.matrix).real)
        p = min(1.0, max(0.0, p))
        if shots_per_setting is None:
            counts[setting.labels] = p
        else:
            counts[setting.labels] = int(
                rng.stream(seed, "tomo", i).binomial(shots_per_setting, p))
    return CountsTable(counts, shots_per_setting, seed)


@dataclass(frozen=True)
class TomoReport:
    rho_hat: DensityMatrix
    fidelity_vs_target: float | None
    concurrence: float | None
    residual: float

    def to_json(self) -> str:
        m = self.rho_hat.matrix
        doc = {
            "basis": list(self.rho_hat.basis.labels),
            "rho_hat": [[[float(z.real), float(z.imag)] for z in row] for row in m],
            "fidelity_vs_target": self.fidelity_vs_target,
            "concurrence": self.concurrence,
            "residual": self.residual,
        }
        return json.dumps(doc, indent=2)


def reconstruct(counts: CountsTable, target: StateVector | None = None) -> TomoReport:
    """Least-squares linear inversion with positivity repair.

    The Pauli-coefficient system tr(Π_i P_k) c_k = f_i is solved by lstsq;
    the Hermitian estimate is clipped to nonnegative eigenvalues and
    renormalized to unit trace.  The reported residual is the RMS mismatch
    between the repaired state's Born probabilities and the observed
    frequencies, which is how users can see when repair mattered.
    """
    n_qubits = counts.n_qubits
    basis = _basis_for(n_qubits)
    f = counts.frequencies()
    A = design_matrix(n_qubits)
    rank = np.linalg.matrix_rank(A, tol=1e-10)
    if rank < 4 ** n_qubits:
        raise ValueError(f"design matrix rank {rank} < {4 ** n_qubits}: catalog incomplete")
    c, *_ = np.linalg.lstsq(A, f, rcond=None)
    paulis = pauli_products(n_qubits)
    raw = sum(ck * P for ck, P in zip(c, paulis))
    raw = 0.5 * (raw + raw.conj().T)
    w, V = np.linalg.eigh(raw)
    w = np.clip(w, 0.0, None)
    total = float(w.sum())
    if total < 1e-300:
        raise ValueError("reconstruction collapsed to the zero matrix")
    rho_hat = DensityMatrix(basis, (V * (w / total)) @ V.conj().T)
    predicted = np.array([np.trace(rho_hat.matrix @ s.projector.matrix).real
                          for s in projector_catalog(n_qubits)])
    residual = float(np.sqrt(np.mean((predicted - f) ** 2)))
    fid = None
    if target is not None:
        fid = fidelity(rho_hat, StateVector(basis, target.amps))
    conc = concurrence(rho_hat) if basis.dim == 4 else None
    return TomoReport(rho_hat, fid, conc, residual)
