"""Probabilistic N -> M universal cloning by projection onto the symmetric
subspace, its step-by-step chain form, and the count-ratio bookkeeping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .algebra import (
    ATOL_ALGEBRA,
    DensityMatrix,
    PureQubit,
    WeightedOperator,
    partial_trace,
    state_fidelity,
    symmetric_populations,
    symmetric_projector,
    tensor_all,
)

SCENARIOS = ("clone12", "clone13", "clone23")


@dataclass(frozen=True)
class CloningSpec:
    n_inputs: int
    m_outputs: int
    input_qubit: PureQubit = field(default_factory=lambda: PureQubit.named("H"))

    def __post_init__(self):
        if self.n_inputs < 1 or self.m_outputs < 1:
            raise ValueError("qubit counts must be positive")
        if self.n_inputs > self.m_outputs:
            raise ValueError(f"n_inputs={self.n_inputs} exceeds m_outputs={self.m_outputs}")


@dataclass(frozen=True, eq=False)
class CloningOutcome:
    output_state: DensityMatrix
    success_probability: float
    clone_state: DensityMatrix
    fidelity: float
    component_weights: list[tuple[int, float]]
    unnormalized: Optional[WeightedOperator] = None


@dataclass(frozen=True)
class EnhancementReport:
    """Enhancement ratios and the fidelity they imply.

    Fields that do not apply to a scenario are ``None``; ``stderr`` maps field
    names to Monte Carlo standard errors when the report came from counts.
    """

    scenario: str
    gamma: Optional[float] = None
    r1: Optional[float] = None
    r2: Optional[float] = None
    r_simple: Optional[float] = None
    fidelity_from_ratios: float = float("nan")
    stderr: dict = field(default_factory=dict)


def _check_nm(n: int, m: int) -> None:
    if not (isinstance(n, (int, np.integer)) and isinstance(m, (int, np.integer))):
        raise TypeError("n and m must be integers")
    if not 1 <= n <= m:
        raise ValueError(f"need 1 <= n <= m, got n={n}, m={m}")


def theoretical_fidelity(n: int, m: int) -> float:
    """Optimal universal cloning fidelity ``(n + 1 + n/m) / (n + 2)``."""
    _check_nm(n, m)
    return (n + 1 + n / m) / (n + 2)


def success_probability(n: int, m: int) -> float:
    """Heralding probability ``2^-(m-n) (1+m)/(1+n)`` with maximally mixed ancillas."""
    _check_nm(n, m)
    return (1 + m) / (1 + n) / 2 ** (m - n)


def _outcome(projected: np.ndarray, phi: PureQubit) -> CloningOutcome:
    op = WeightedOperator.of(projected)
    if op.weight <= ATOL_ALGEBRA:
        raise ZeroDivisionError("projection annihilates the input")
    rho = op.normalized()
    m = rho.n_qubits
    reduced = [partial_trace(rho, [s]) for s in range(m)]
    for r in reduced[1:]:
        if r.distance(reduced[0]) > 1e-10:
            raise AssertionError("single-slot clones differ")
    weights = list(enumerate(symmetric_populations(rho, phi)))
    return CloningOutcome(
        output_state=rho,
        success_probability=op.weight,
        clone_state=reduced[0],
        fidelity=state_fidelity(reduced[0], phi),
        component_weights=weights,
        unnormalized=op,
    )


def clone_map(spec: CloningSpec, ancilla: DensityMatrix | None = None) -> CloningOutcome:
    """Symmetrize ``|phi><phi|^n (x) ancilla`` and renormalize.

    ``ancilla`` defaults to the maximally mixed state on ``m - n`` qubits; for
    ``n == m`` no ancilla is used.
    """
    n, m = spec.n_inputs, spec.m_outputs
    k = m - n
    if ancilla is None:
        factors = [spec.input_qubit.projector()] * n
        if k:
            factors.append(DensityMatrix.maximally_mixed(k))
    else:
        if k == 0 or ancilla.n_qubits != k:
            raise ValueError(f"ancilla must act on {k} qubits")
        factors = [spec.input_qubit.projector()] * n + [ancilla]
    rho_in = tensor_all(factors)
    proj = symmetric_projector(m).matrix
    return _outcome(proj @ rho_in @ proj, spec.input_qubit)


def chain_clone(spec: CloningSpec) -> list[CloningOutcome]:
    """Grow ``n -> n+1 -> ... -> m`` one fresh maximally mixed qubit at a time.

    Entry ``i`` holds the normalized state after step ``i`` with its per-step
    success probability (trace ratio of consecutive unnormalized states).
    """
    n, m = spec.n_inputs, spec.m_outputs
    if m == n:
        raise ValueError("chain needs at least one cloning step")
    phi = spec.input_qubit
    rho = tensor_all([phi.projector()] * n)
    mixed = np.eye(2) / 2
    out = []
    for size in range(n + 1, m + 1):
        proj = symmetric_projector(size).matrix
        step = proj @ np.kron(rho, mixed) @ proj
        outcome = _outcome(step, phi)
        out.append(outcome)
        rho = outcome.output_state.entries
    return out


def fidelity_from_ratio_12(r: float) -> float:
    if r < 0:
        raise ValueError("ratio must be non-negative")
    return (2 * r + 1) / (2 * r + 2)


def fidelity_from_ratios_13(gamma: float, r1: float, r2: float) -> float:
    if min(gamma, r1, r2) < 0:
        raise ValueError("ratios must be non-negative")
    den = 3 * gamma * r1 + 6 * r2 + 3 * gamma
    if den == 0:
        raise ZeroDivisionError("all ratios vanish")
    return (3 * gamma * r1 + 4 * r2 + gamma) / den


def fidelity_from_ratio_23(r: float) -> float:
    if r < 0:
        raise ValueError("ratio must be non-negative")
    return (3 * r + 2) / (3 * r + 3)


def report_from_ratios(
    scenario: str,
    *,
    gamma: float | None = None,
    r1: float | None = None,
    r2: float | None = None,
    r_simple: float | None = None,
    stderr: dict | None = None,
) -> EnhancementReport:
    if scenario == "clone12":
        f = fidelity_from_ratio_12(r_simple)
    elif scenario == "clone23":
        f = fidelity_from_ratio_23(r_simple)
    elif scenario == "clone13":
        f = fidelity_from_ratios_13(gamma, r1, r2)
    else:
        raise ValueError(f"unknown scenario {scenario!r}")
    return EnhancementReport(scenario, gamma, r1, r2, r_simple, f, dict(stderr or {}))


# Ideal clone13 ratios: on/off populations of the 3:2:1 symmetrized state
# against the 1:2:1 distinguishable baseline give Gamma*r1 = 6, r2 = 2, Gamma = 2.
_IDEAL = {
    "clone12": dict(r_simple=2.0),
    "clone23": dict(r_simple=3.0),
    "clone13": dict(gamma=2.0, r1=3.0, r2=2.0),
}


def ideal_enhancements(scenario: str) -> EnhancementReport:
    if scenario not in _IDEAL:
        raise ValueError(f"unknown scenario {scenario!r}")
    return report_from_ratios(scenario, **_IDEAL[scenario])


def bosonic_multiplicity(n: int, m: int) -> int:
    """``m!/n!``: ratio between the all-in-one-arm probability of identical
    photons and ``success_probability * distinguishable transmission``."""
    _check_nm(n, m)
    return math.factorial(m) // math.factorial(n)
