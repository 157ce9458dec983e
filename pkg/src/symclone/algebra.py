"""Dense multi-qubit linear algebra: density matrices, partial traces and
symmetric-subspace projectors.

Qubit slot 0 is the leftmost tensor factor everywhere in this package, so a
computational basis index ``i`` of an ``n``-qubit register has slot ``s`` in
bit ``n - 1 - s``.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 8

ATOL_ALGEBRA = 1e-12
ATOL_RANK = 1e-9
ATOL_PSD = 1e-10


class SizeLimitError(ValueError):
    """Raised when a register would exceed :data:`MAX_QUBITS`."""


def _check_qubits(n: int) -> None:
    if not 1 <= n <= MAX_QUBITS:
        raise SizeLimitError(f"qubit count {n} outside 1..{MAX_QUBITS}")


def _n_qubits(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim < 2 or 1 << n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


@dataclass(frozen=True)
class PureQubit:
    """Polarization qubit ``amplitude_h |H> + amplitude_v |V>``."""

    amplitude_h: complex
    amplitude_v: complex

    def __post_init__(self):
        norm = abs(self.amplitude_h) ** 2 + abs(self.amplitude_v) ** 2
        if abs(norm - 1.0) > ATOL_ALGEBRA:
            raise ValueError(f"qubit norm {norm!r} differs from 1")

    @classmethod
    def from_bloch(cls, theta: float, phi: float) -> PureQubit:
        return cls(complex(math.cos(theta / 2)), complex(np.exp(1j * phi) * math.sin(theta / 2)))

    @classmethod
    def named(cls, label: str) -> PureQubit:
        """The test states ``H``, ``V``, ``H+V`` and ``H+iV``."""
        s = 1 / math.sqrt(2)
        table = {
            "H": (1, 0),
            "V": (0, 1),
            "H+V": (s, s),
            "H-V": (s, -s),
            "H+iV": (s, 1j * s),
        }
        try:
            h, v = table[label]
        except KeyError:
            raise ValueError(f"unknown qubit label {label!r}") from None
        return cls(complex(h), complex(v))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.amplitude_h, self.amplitude_v], dtype=complex)

    def orthogonal(self) -> PureQubit:
        """``|phi_perp> = -conj(v)|H> + conj(h)|V>``."""
        return PureQubit(-np.conj(self.amplitude_v), np.conj(self.amplitude_h))

    def projector(self) -> DensityMatrix:
        v = self.vector
        return DensityMatrix(np.outer(v, v.conj()))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite ``2^n x 2^n`` matrix."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        n = _n_qubits(m.shape[0])
        _check_qubits(n)
        if np.max(np.abs(m - m.conj().T)) > ATOL_ALGEBRA:
            raise ValueError("matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > ATOL_ALGEBRA:
            raise ValueError(f"trace {np.trace(m).real!r} differs from 1")
        if np.linalg.eigvalsh(m)[0] < -ATOL_PSD:
            raise ValueError("matrix is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def n_qubits(self) -> int:
        return _n_qubits(self.dim)

    @classmethod
    def maximally_mixed(cls, n: int) -> DensityMatrix:
        _check_qubits(n)
        return cls(np.eye(2**n) / 2**n)

    def expectation(self, op: np.ndarray) -> complex:
        return complex(np.trace(self.entries @ op))

    def distance(self, other: DensityMatrix | np.ndarray) -> float:
        """Max-abs entry difference."""
        b = other.entries if isinstance(other, DensityMatrix) else np.asarray(other)
        return float(np.max(np.abs(self.entries - b)))


@dataclass(frozen=True, eq=False)
class WeightedOperator:
    """Unnormalized positive operator; ``weight`` equals its trace.

    Carries the projected-but-not-renormalized states whose trace is a success
    probability.
    """

    entries: np.ndarray
    weight: float

    @classmethod
    def of(cls, entries: np.ndarray) -> WeightedOperator:
        m = np.array(entries, dtype=complex)
        m.setflags(write=False)
        return cls(m, float(np.trace(m).real))

    def normalized(self) -> DensityMatrix:
        if self.weight <= 0:
            raise ZeroDivisionError("operator has zero weight")
        return DensityMatrix(self.entries / self.weight)


def _as_array(rho) -> np.ndarray:
    if isinstance(rho, (DensityMatrix, WeightedOperator)):
        return rho.entries
    return np.asarray(rho)


def tensor(a, b):
    """Kronecker product; density matrices in, density matrix out."""
    ma, mb = _as_array(a), _as_array(b)
    n = _n_qubits(ma.shape[0]) + _n_qubits(mb.shape[0])
    if n > MAX_QUBITS:
        raise SizeLimitError(f"tensor product would have {n} qubits")
    out = np.kron(ma, mb)
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(out)
    return out


def tensor_all(factors: Iterable) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for f in factors:
        out = np.kron(out, _as_array(f))
    if out.shape[0] > 2**MAX_QUBITS:
        raise SizeLimitError("tensor product exceeds the qubit limit")
    return out


def partial_trace(rho, keep: Sequence[int]):
    """Reduce ``rho`` onto the qubit slots in ``keep`` (kept in ascending order).

    Density matrices return a :class:`DensityMatrix`; anything else returns a
    plain array (so unnormalized operators keep their weight).
    """
    m = _as_array(rho)
    n = _n_qubits(m.shape[0])
    keep = sorted(set(int(k) for k in keep))
    if not keep or keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"invalid slots {keep} for a {n}-qubit state")
    t = m.reshape((2,) * (2 * n))
    traced = [s for s in range(n) if s not in keep]
    # einsum letters: row indices a.., column indices A..
    rows = [chr(97 + s) for s in range(n)]
    cols = [chr(65 + s) for s in range(n)]
    for s in traced:
        cols[s] = rows[s]
    out_idx = "".join(rows[s] for s in keep) + "".join(cols[s] for s in keep)
    red = np.einsum("".join(rows) + "".join(cols) + "->" + out_idx, t)
    d = 2 ** len(keep)
    red = red.reshape(d, d)
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(red)
    return red


def state_fidelity(rho, phi: PureQubit) -> float:
    """``<phi|rho|phi>`` for a single-qubit state."""
    m = _as_array(rho)
    if m.shape != (2, 2):
        raise ValueError(f"expected a single-qubit state, got shape {m.shape}")
    v = phi.vector
    return float(np.real(v.conj() @ m @ v))


def permutation_indices(perm: Sequence[int]) -> np.ndarray:
    """Index map of the operator moving the qubit in slot ``s`` to slot ``perm[s]``.

    ``U |b_0 ... b_{n-1}> = |c>`` with ``c_{perm[s]} = b_s``; returned as the
    array ``idx`` such that ``U[idx[j], j] = 1``.
    """
    n = len(perm)
    basis = np.arange(2**n)
    bits = (basis[:, None] >> (n - 1 - np.arange(n))) & 1
    permuted = np.empty_like(bits)
    permuted[:, list(perm)] = bits
    return permuted @ (1 << (n - 1 - np.arange(n)))


def permutation_operator(perm: Sequence[int]) -> np.ndarray:
    idx = permutation_indices(perm)
    u = np.zeros((len(idx), len(idx)))
    u[idx, np.arange(len(idx))] = 1.0
    return u


@dataclass(frozen=True, eq=False)
class SymmetricProjector:
    m: int
    matrix: np.ndarray

    @property
    def rank(self) -> int:
        return self.m + 1


@functools.lru_cache(maxsize=None)
def _projector_matrix(m: int) -> np.ndarray:
    dim = 2**m
    acc = np.zeros((dim, dim))
    cols = np.arange(dim)
    for perm in itertools.permutations(range(m)):
        acc[permutation_indices(perm), cols] += 1.0
    acc /= math.factorial(m)
    acc.setflags(write=False)
    return acc


def symmetric_projector(m: int) -> SymmetricProjector:
    """Projector onto the symmetric subspace of ``m`` qubits, as the average
    of all ``m!`` slot-permutation operators."""
    _check_qubits(m)
    return SymmetricProjector(m, _projector_matrix(m))


def symmetric_basis_state(m: int, k: int, reference: PureQubit) -> np.ndarray:
    """Normalized uniform sum of the distinct orderings of
    ``|phi>^(m-k) |phi_perp>^k``."""
    _check_qubits(m)
    if not 0 <= k <= m:
        raise ValueError(f"k={k} outside 0..{m}")
    phi, perp = reference.vector, reference.orthogonal().vector
    out = np.zeros(2**m, dtype=complex)
    for slots in itertools.combinations(range(m), k):
        out += tensor_all(
            (perp if s in slots else phi)[:, None] for s in range(m)
        ).ravel()
    return out / math.sqrt(math.comb(m, k))


def symmetric_populations(rho, reference: PureQubit) -> list[float]:
    """Populations ``<{k}|rho|{k}>`` for ``k = 0..m`` in the ``reference`` basis."""
    mat = _as_array(rho)
    m = _n_qubits(mat.shape[0])
    out = []
    for k in range(m + 1):
        v = symmetric_basis_state(m, k, reference)
        out.append(float(np.real(v.conj() @ mat @ v)))
    return out


def is_density_matrix(m: np.ndarray) -> bool:
    try:
        DensityMatrix(m)
    except ValueError:
        return False
    return True
