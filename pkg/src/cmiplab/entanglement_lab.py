"""Two-photon layer: partially entangled pairs filtered through the device.

The signal photon of cos(a/2)|HH⟩ + e^{iδ} sin(a/2)|VV⟩ passes the
interferometer with both plates rotated; conditioning on its exit path
splits the pair into two branches whose entanglement can exceed (path 1)
or fall below the input value, with closed forms for both probability and
concurrence checked against explicit state evolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .interferometer import BASIS as DEVICE_BASIS
from .qcore import (IDLER_POL, DensityMatrix, Operator, StateVector, apply,
                    concurrence, polarization_basis, postselect)

#: signal polarization (x) signal path (x) idler polarization
FULL_BASIS = DEVICE_BASIS.combine(polarization_basis(IDLER_POL))

#: branches with less probability than this carry no usable state
EMPTY_BRANCH_TOL = 1e-12


@dataclass(frozen=True)
class TwoPhotonConfig:
    """Schmidt angle alpha and relative phase delta of the pair source."""

    alpha: float
    delta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= math.pi:
            raise ValueError(f"alpha = {self.alpha} outside [0, pi]")

    @property
    def entanglement(self) -> float:
        return abs(math.sin(self.alpha))


def prepare_two_photon(cfg: TwoPhotonConfig) -> StateVector:
    """cos(a/2)|H,1,H⟩ + e^{iδ} sin(a/2)|V,1,V⟩, signal in path 1."""
    amps = np.zeros(8, dtype=complex)
    amps[FULL_BASIS.index("H", "1", "H")] = math.cos(cfg.alpha / 2)
    amps[FULL_BASIS.index("V", "1", "V")] = (
        np.exp(1j * cfg.delta) * math.sin(cfg.alpha / 2))
    return StateVector(FULL_BASIS, amps)


def polarization_pair_state(cfg: TwoPhotonConfig) -> StateVector:
    """The pair as a plain two-qubit polarization state (path projected out)."""
    state, _ = postselect(prepare_two_photon(cfg), "signal_path", "1")
    return state


def general_unitary(gamma1: float, gamma2: float) -> Operator:
    """Both-plates device unitary on the signal polarization (x) path basis.

    |H,1⟩ → cos2γ1|H,1⟩ − i sin2γ1|V,2⟩ and
    |V,1⟩ → cos2γ2|V,1⟩ − i sin2γ2|H,2⟩, completed unitarily on the path-2
    inputs.  The −i on the path-changing amplitudes is the convention of the
    two-photon branch decomposition; it is a global phase of the path-2
    branch and unobservable after filtering.
    """
    c1, s1 = math.cos(2 * gamma1), math.sin(2 * gamma1)
    c2, s2 = math.cos(2 * gamma2), math.sin(2 * gamma2)
    m = np.zeros((4, 4), dtype=complex)
    h1 = DEVICE_BASIS.index("H", "1")
    h2 = DEVICE_BASIS.index("H", "2")
    v1 = DEVICE_BASIS.index("V", "1")
    v2 = DEVICE_BASIS.index("V", "2")
    m[h1, h1], m[v2, h1] = c1, -1j * s1
    m[h1, v2], m[v2, v2] = -1j * s1, c1
    m[v1, v1], m[h2, v1] = c2, -1j * s2
    m[v1, h2], m[h2, h2] = -1j * s2, c2
    return Operator(DEVICE_BASIS, m, unitary=True)


def evolve_signal(state: StateVector, gamma1: float, gamma2: float) -> StateVector:
    """Apply the both-plates unitary to the signal factors of the pair state."""
    if state.basis != FULL_BASIS:
        raise ValueError("expected a two-photon state on the standard basis")
    U = general_unitary(gamma1, gamma2)
    # signal factors are the leading axes, so lifting is a plain Kronecker
    full = Operator(FULL_BASIS, np.kron(U.matrix, np.eye(2)), unitary=True)
    return apply(full, state)


@dataclass(frozen=True)
class EntangledBranches:
    """Path-filtered branches of the evolved pair.

    phi1/phi2 are two-qubit polarization states (signal, idler); a branch
    with probability below EMPTY_BRANCH_TOL has None for its state and
    entanglement.
    """

    phi1: StateVector | None
    n1: float
    e1: float | None
    phi2: StateVector | None
    n2: float
    e2: float | None


def branch_probabilities(alpha: float, gamma1: float, gamma2: float):
    """Closed-form path probabilities (n1, n2)."""
    c1 = math.cos(2 * gamma1) ** 2
    c2 = math.cos(2 * gamma2) ** 2
    n1 = math.cos(alpha / 2) ** 2 * c1 + math.sin(alpha / 2) ** 2 * c2
    return n1, 1.0 - n1


def apply_cmip_signal(state: StateVector, gamma1: float, gamma2: float) -> EntangledBranches:
    """Evolve the signal photon and split the pair by its exit path."""
    evolved = evolve_signal(state, gamma1, gamma2)
    out = []
    for port in ("1", "2"):
        phi, n = postselect(evolved, "signal_path", port)
        if n < EMPTY_BRANCH_TOL:
            out.append((None, n, None))
        else:
            out.append((phi, n, concurrence(DensityMatrix.from_state(phi))))
    (phi1, n1, e1), (phi2, n2, e2) = out
    return EntangledBranches(phi1, n1, e1, phi2, n2, e2)


def output_entanglement(E_in: float, gamma1: float, gamma2: float, alpha: float):
    """Closed-form branch concurrences (e1, e2).

    E_in and alpha parameterize the same input state and must agree:
    |E_in − |sin alpha|| ≤ 1e-9, otherwise the pair is rejected.  A branch
    with vanishing probability has undefined entanglement (None).
    """
    if not 0.0 <= E_in <= 1.0:
        raise ValueError(f"E_in = {E_in} outside [0, 1]")
    if abs(E_in - abs(math.sin(alpha))) > 1e-9:
        raise ValueError(
            f"inconsistent parameterization: E_in = {E_in} but |sin(alpha)| = "
            f"{abs(math.sin(alpha))}")
    n1, n2 = branch_probabilities(alpha, gamma1, gamma2)
    c1, c2 = math.cos(2 * gamma1), math.cos(2 * gamma2)
    s1, s2 = math.sin(2 * gamma1), math.sin(2 * gamma2)
    e1 = E_in * abs(c1 * c2) / n1 if n1 >= EMPTY_BRANCH_TOL else None
    e2 = E_in * abs(s1 * s2) / n2 if n2 >= EMPTY_BRANCH_TOL else None
    return e1, e2


def concentration_predicate(alpha: float, gamma1: float, gamma2: float) -> bool:
    """True when the path-1 branch is at least as entangled as the input."""
    for name, g in (("gamma1", gamma1), ("gamma2", gamma2)):
        if not 0.0 <= g <= math.pi / 4:
            raise ValueError(f"{name} = {g} outside [0, pi/4]")
    c1, c2 = math.cos(2 * gamma1), math.cos(2 * gamma2)
    lhs = (c1 - c2) ** 2 - math.cos(alpha) * (c2 ** 2 - c1 ** 2)
    return lhs <= 0.0


def solve_max_entanglement(alpha: float, gamma2: float, branch: int):
    """Plate angle gamma1 driving one branch to concurrence 1.

    Branch 1 solves cos²(a/2)cos²2γ1 = sin²(a/2)cos²2γ2, branch 2 the same
    with sines of the plate angles.  Returns None when no root lies in
    [0, pi/4] (large alpha with a small gamma2).
    """
    if not 0.0 < alpha < math.pi:
        raise ValueError(f"alpha = {alpha} outside (0, pi)")
    if branch not in (1, 2):
        raise ValueError(f"branch must be 1 or 2, got {branch}")
    t2 = math.tan(alpha / 2) ** 2
    if branch == 1:
        rhs = t2 * math.cos(2 * gamma2) ** 2
        if rhs > 1.0:
            return None
        return 0.5 * math.acos(math.sqrt(rhs))
    rhs = t2 * math.sin(2 * gamma2) ** 2
    if rhs > 1.0:
        return None
    return 0.5 * math.asin(math.sqrt(rhs))


def concentration_sweep(alpha: float, gamma1_grid, gamma2: float, delta: float = 0.0):
    """Closed-form and state-derived n1/e1 over a gamma1 grid.

    Returns a dict of arrays keyed n1_closed, n1_state, e1_closed, e1_state;
    undefined entanglement (empty branch) is recorded as NaN.
    """
    gamma1_grid = np.asarray(gamma1_grid, dtype=float)
    state = prepare_two_photon(TwoPhotonConfig(alpha, delta))
    e_in = abs(math.sin(alpha))
    cols = {k: np.empty(gamma1_grid.size) for k in
            ("n1_closed", "n1_state", "e1_closed", "e1_state")}
    for i, g1 in enumerate(gamma1_grid):
        cols["n1_closed"][i] = branch_probabilities(alpha, g1, gamma2)[0]
        e1c, _ = output_entanglement(e_in, g1, gamma2, alpha)
        cols["e1_closed"][i] = np.nan if e1c is None else e1c
        branches = apply_cmip_signal(state, float(g1), gamma2)
        cols["n1_state"][i] = branches.n1
        cols["e1_state"][i] = np.nan if branches.e1 is None else branches.e1
    return cols
