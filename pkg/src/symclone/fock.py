"""Second-quantized photon states on labeled modes and the linear-optical
networks of the cloning experiment.

A :class:`FockVector` stores amplitudes on occupation-number basis states.
Each basis state is keyed by its *configuration*: the sorted tuple of mode
labels, one entry per photon, so ``(m, m, n)`` is ``|2_m, 1_n>``. Linear
optics acts on creation operators, so transformations go through the
monomial form ``prod a_dagger`` whose norm is ``sqrt(prod occupation!)``.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .algebra import PureQubit, WeightedOperator

SPEED_OF_LIGHT_UM_PER_FS = 0.299792458

K_S, K_A, K_B = "k_S", "k_A", "k_B"
K_1, K_2, K_3, K_4 = "k_1", "k_2", "k_3", "k_4"
K_PHI, K_PERP = "k_phi", "k_phi*"

CIRCUITS = ("clone12", "clone13", "clone23", "gamma_calibration")

_PRUNE = 1e-15


class ModeLabel(NamedTuple):
    spatial: str
    polarization: str  # "H" or "V"
    temporal: int = 0


Config = tuple  # sorted tuple[ModeLabel, ...]
LinearForm = Sequence[tuple[ModeLabel, complex]]


def _occupation_norm(config: Config) -> float:
    return math.sqrt(math.prod(math.factorial(c) for c in Counter(config).values()))


class FockVector:
    """Complex superposition of occupation configurations.

    The vector may be sub-normalized: a post-selected branch keeps the norm
    of the surviving part.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Config, complex] | None = None):
        self.terms: dict[Config, complex] = {}
        for k, v in (terms or {}).items():
            if abs(v) > _PRUNE:
                self.terms[tuple(sorted(k))] = complex(v)

    @classmethod
    def vacuum(cls) -> FockVector:
        return cls({(): 1.0})

    def __repr__(self):
        return f"FockVector({len(self.terms)} terms, norm2={self.norm2():.6g})"

    def norm2(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.terms.values()))

    def photon_numbers(self) -> set[int]:
        return {len(k) for k in self.terms}

    def _monomials(self) -> dict[Config, complex]:
        return {k: a / _occupation_norm(k) for k, a in self.terms.items()}

    @classmethod
    def _from_monomials(cls, mono: Mapping[Config, complex]) -> FockVector:
        return cls({k: c * _occupation_norm(k) for k, c in mono.items()})

    def create(self, form: LinearForm, count: int = 1) -> FockVector:
        """Apply ``(sum_j c_j a_j^dagger)^count / sqrt(count!)``.

        ``form`` must be a normalized mode, so the result keeps the norm.
        """
        mono = self._monomials()
        for _ in range(count):
            nxt: dict[Config, complex] = defaultdict(complex)
            for k, c in mono.items():
                for mode, w in form:
                    nxt[tuple(sorted(k + (mode,)))] += c * w
            mono = nxt
        scale = 1 / math.sqrt(math.factorial(count))
        return self._from_monomials({k: c * scale for k, c in mono.items()})

    def multiply(self, other: FockVector) -> FockVector:
        """Product of two states built on commuting creation operators."""
        out: dict[Config, complex] = defaultdict(complex)
        b = other._monomials()
        for ka, ca in self._monomials().items():
            for kb, cb in b.items():
                out[tuple(sorted(ka + kb))] += ca * cb
        return self._from_monomials(out)

    def transform(self, mode_map: Callable[[ModeLabel], LinearForm | None]) -> FockVector:
        """Substitute every creation operator by a linear combination.

        ``mode_map`` returns ``None`` for modes left untouched.
        """
        cache: dict[ModeLabel, LinearForm] = {}

        def image(mode):
            if mode not in cache:
                img = mode_map(mode)
                cache[mode] = ((mode, 1.0),) if img is None else tuple(img)
            return cache[mode]

        out: dict[Config, complex] = defaultdict(complex)
        for k, c in self._monomials().items():
            for choice in itertools.product(*(image(m) for m in k)):
                w = c
                for _, cw in choice:
                    w *= cw
                out[tuple(sorted(m for m, _ in choice))] += w
        return self._from_monomials(out)

    def filter(self, keep: Callable[[Config], bool]) -> FockVector:
        return FockVector({k: a for k, a in self.terms.items() if keep(k)})

    def scaled(self, s: complex) -> FockVector:
        return FockVector({k: a * s for k, a in self.terms.items()})


@dataclass
class MixedFockState:
    """Classical mixture ``sum_i p_i |v_i><v_i|`` of Fock vectors."""

    branches: list[tuple[float, FockVector]] = field(default_factory=list)

    @classmethod
    def pure(cls, vec: FockVector) -> MixedFockState:
        return cls([(1.0, vec)])

    @classmethod
    def vacuum(cls) -> MixedFockState:
        return cls.pure(FockVector.vacuum())

    def total_probability(self) -> float:
        return float(sum(p * v.norm2() for p, v in self.branches))

    def map(self, fn: Callable[[FockVector], FockVector]) -> MixedFockState:
        return MixedFockState([(p, fn(v)) for p, v in self.branches])

    def product(self, other: MixedFockState) -> MixedFockState:
        return MixedFockState(
            [(pa * pb, va.multiply(vb)) for pa, va in self.branches for pb, vb in other.branches]
        )

    def filter(self, keep: Callable[[Config], bool]) -> MixedFockState:
        out = [(p, v.filter(keep)) for p, v in self.branches]
        return MixedFockState([(p, v) for p, v in out if v.terms])

    def renormalized(self) -> MixedFockState:
        total = self.total_probability()
        if total <= 0:
            raise ZeroDivisionError("state has no weight")
        return MixedFockState([(p / total, v) for p, v in self.branches])

    @staticmethod
    def mix(parts: Iterable[tuple[float, MixedFockState]]) -> MixedFockState:
        return MixedFockState([(w * p, v) for w, s in parts if w > 0 for p, v in s.branches])

    def probabilities(self) -> dict[Config, float]:
        """Occupation-configuration probabilities, merged over branches and
        sorted by configuration key."""
        acc: dict[Config, float] = defaultdict(float)
        for p, v in self.branches:
            for k, a in v.terms.items():
                acc[k] += p * abs(a) ** 2
        return dict(sorted(acc.items()))

    def number_distribution(self, spatial: Sequence[str]) -> dict[tuple[int, ...], float]:
        """Joint photon-number distribution of the listed spatial modes,
        summed over polarization and temporal labels."""
        acc: dict[tuple[int, ...], float] = defaultdict(float)
        idx = {s: i for i, s in enumerate(spatial)}
        for k, p in self.probabilities().items():
            counts = [0] * len(spatial)
            for mode in k:
                i = idx.get(mode.spatial)
                if i is not None:
                    counts[i] += 1
            acc[tuple(counts)] += p
        return dict(sorted(acc.items()))


# -- coherence and sources ---------------------------------------------------


@dataclass(frozen=True)
class CoherenceModel:
    """Temporal wave-packet overlap model.

    ``spdc_visibility`` is the amplitude overlap between the two photons of
    one down-conversion pair at zero delay; ``cross_visibility`` the one
    between a down-conversion photon and a laser photon. A cross-source
    bunching ratio Gamma corresponds to ``cross_visibility = sqrt(Gamma - 1)``.
    """

    tau_coh_fs: float = 200.0
    wavelength_nm: float = 795.0
    overlap_shape: str = "gaussian"
    spdc_visibility: float = 1.0
    cross_visibility: float = 1.0

    def __post_init__(self):
        if self.overlap_shape != "gaussian":
            raise ValueError(f"unsupported overlap shape {self.overlap_shape!r}")
        if self.tau_coh_fs <= 0:
            raise ValueError("coherence time must be positive")
        for name in ("spdc_visibility", "cross_visibility"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")

    @property
    def length_scale_um(self) -> float:
        """``2 c tau_coh`` in micrometers."""
        return 2 * SPEED_OF_LIGHT_UM_PER_FS * self.tau_coh_fs

    def pair_visibility(self, origin_a: str, origin_b: str, same_pair: bool) -> float:
        if origin_a != origin_b:
            return self.cross_visibility
        return self.spdc_visibility if same_pair else 1.0


def temporal_overlap(model: CoherenceModel, z: float) -> float:
    """Overlap of two wave packets displaced by ``z`` micrometers."""
    return math.exp(-((z / model.length_scale_um) ** 2))


@dataclass(frozen=True)
class SourceSpec:
    """One input arm.

    ``origin`` groups sources by physical emitter (``"spdc"`` or
    ``"laser"``); it selects the visibility factor of the coherence model.
    """

    kind: str
    qubit: PureQubit | None = None
    delay_z: float = 0.0
    mean_photon_mu: float = 0.0
    origin: str = "spdc"
    depolarized: bool = True
    truncation_error: float = 1e-6

    KINDS = ("pure_single_photon", "depolarized_single_photon", "attenuated_coherent")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.kind == "pure_single_photon" and self.qubit is None:
            raise ValueError("pure source needs a qubit")
        if self.kind == "attenuated_coherent":
            if self.mean_photon_mu < 0:
                raise ValueError("mean photon number must be non-negative")
            if not self.depolarized and self.qubit is None:
                raise ValueError("polarized coherent source needs a qubit")

    @classmethod
    def pure(cls, qubit: PureQubit, delay_z: float = 0.0, origin: str = "spdc") -> SourceSpec:
        return cls("pure_single_photon", qubit, delay_z, origin=origin)

    @classmethod
    def depolarized_photon(cls, delay_z: float = 0.0, origin: str = "spdc") -> SourceSpec:
        return cls("depolarized_single_photon", None, delay_z, origin=origin)

    @classmethod
    def coherent(
        cls, mu: float, delay_z: float = 0.0, qubit: PureQubit | None = None
    ) -> SourceSpec:
        return cls(
            "attenuated_coherent", qubit, delay_z, mu, origin="laser", depolarized=qubit is None
        )

    def truncation(self) -> int:
        """Largest photon number kept: at least 3, raised until the Poisson
        tail beyond it drops below ``truncation_error``."""
        mu = self.mean_photon_mu
        n, cdf = 3, sum(poisson_weights(mu, 3))
        while 1 - cdf >= self.truncation_error:
            n += 1
            cdf += poisson_weights(mu, n)[-1]
        return n


def poisson_weights(mu: float, n_max: int) -> list[float]:
    return [math.exp(-mu) * mu**n / math.factorial(n) for n in range(n_max + 1)]


def _photon_form(spatial: str, pol: np.ndarray, temporal: Mapping[int, complex]) -> LinearForm:
    form = []
    for t, ta in sorted(temporal.items()):
        for label, pa in zip("HV", pol):
            if abs(pa * ta) > _PRUNE:
                form.append((ModeLabel(spatial, label, t), complex(pa * ta)))
    return form


_H = np.array([1, 0], dtype=complex)
_V = np.array([0, 1], dtype=complex)


def _depolarized_photons(spatial: str, temporal, n: int) -> MixedFockState:
    """``n`` photons with independent random H/V polarization, merged by the
    number of V photons (bosons in one wave packet are labelled only by it)."""
    branches = []
    for k in range(n + 1):
        vec = FockVector.vacuum()
        vec = vec.create(_photon_form(spatial, _H, temporal), n - k)
        vec = vec.create(_photon_form(spatial, _V, temporal), k)
        branches.append((math.comb(n, k) / 2**n, vec))
    return MixedFockState(branches)


def embed_photon(
    source: SourceSpec,
    model: CoherenceModel,
    spatial: str,
    fresh_temporal_slot: int,
    *,
    temporal: Mapping[int, complex] | None = None,
    n_photons: int = 1,
) -> MixedFockState:
    """Prepare one source on spatial mode ``spatial``.

    The wave packet is ``v|t0> + sqrt(1 - v^2)|t_slot>`` with
    ``v = temporal_overlap(model, source.delay_z)`` unless an explicit
    ``temporal`` amplitude map is supplied. ``n_photons`` > 1 places several
    photons of a single-photon kind in the same packet (multi-pair emission).
    """
    if temporal is None:
        if fresh_temporal_slot == 0:
            raise ValueError("temporal slot 0 is the shared reference packet")
        v = temporal_overlap(model, source.delay_z)
        temporal = {0: v, fresh_temporal_slot: math.sqrt(max(0.0, 1 - v * v))}
    if source.kind == "pure_single_photon":
        form = _photon_form(spatial, source.qubit.vector, temporal)
        return MixedFockState.pure(FockVector.vacuum().create(form, n_photons))
    if source.kind == "depolarized_single_photon":
        return _depolarized_photons(spatial, temporal, n_photons)
    weights = poisson_weights(source.mean_photon_mu, source.truncation())
    parts = []
    for n, w in enumerate(weights):
        if source.depolarized:
            part = _depolarized_photons(spatial, temporal, n)
        else:
            form = _photon_form(spatial, source.qubit.vector, temporal)
            part = MixedFockState.pure(FockVector.vacuum().create(form, n))
        parts.append((w, part))
    return MixedFockState.mix(parts)


def temporal_embedding(gram: np.ndarray, tol: float = 1e-12) -> list[dict[int, float]]:
    """Wave-packet amplitude maps reproducing a Gram matrix of overlaps.

    Incremental Cholesky in source order: source 0 is the reference packet
    ``t0`` and a new temporal index is opened only when a source has a
    component orthogonal to all earlier ones. With one delayed source this
    is exactly ``v|t0> + sqrt(1 - v^2)|t1>``.
    """
    g = np.asarray(gram, dtype=float)
    n = g.shape[0]
    rows = np.zeros((n, n))
    for i in range(n):
        for j in range(i):
            if rows[j, j] > tol:
                rows[i, j] = (g[i, j] - rows[i, :j] @ rows[j, :j]) / rows[j, j]
            elif abs(g[i, j] - rows[i, :j] @ rows[j, :j]) > 1e-9:
                raise ValueError("overlaps do not form a valid Gram matrix")
        rest = g[i, i] - rows[i, :i] @ rows[i, :i]
        if rest < -1e-9:
            raise ValueError("overlaps do not form a valid Gram matrix")
        rows[i, i] = math.sqrt(max(rest, 0.0))
    used = [j for j in range(n) if rows[j, j] > tol]
    slot = {j: t for t, j in enumerate(used)}
    return [
        {slot[j]: float(rows[i, j]) for j in used if abs(rows[i, j]) > tol} for i in range(n)
    ]


def overlap_gram(
    sources: Sequence[SourceSpec], model: CoherenceModel, pair: tuple[int, int] | None = (0, 1)
) -> np.ndarray:
    """Pairwise wave-packet overlaps; ``pair`` indexes the two photons of one
    down-conversion event."""
    n = len(sources)
    g = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            same = pair is not None and {i, j} == set(pair)
            vis = model.pair_visibility(sources[i].origin, sources[j].origin, same)
            g[i, j] = g[j, i] = vis * temporal_overlap(
                model, sources[i].delay_z - sources[j].delay_z
            )
    return g


# -- linear optics ---------------------------------------------------------


def beam_splitter(
    state: MixedFockState, in_a: str, in_b: str, out_c: str, out_d: str, sign: int = 1
) -> MixedFockState:
    """50/50 splitter: ``a -> (c + d)/sqrt2``, ``b -> (c - d)/sqrt2``.

    ``sign=-1`` swaps the phase convention (``a -> (c - d)``, ``b -> (c + d)``);
    post-selected populations do not depend on it.
    """
    ids = (in_a, in_b, out_c, out_d)
    if len(set(ids)) != 4:
        raise ValueError(f"beam splitter ports must be distinct, got {ids}")
    present = {m.spatial for _, v in state.branches for k in v.terms for m in k}
    if not present & {in_a, in_b}:
        raise KeyError(f"no photons on {in_a!r} or {in_b!r}")
    r = 1 / math.sqrt(2)
    sa, sb = (1, -1) if sign > 0 else (-1, 1)

    def mode_map(m: ModeLabel):
        if m.spatial == in_a:
            return ((m._replace(spatial=out_c), r), (m._replace(spatial=out_d), sa * r))
        if m.spatial == in_b:
            return ((m._replace(spatial=out_c), r), (m._replace(spatial=out_d), sb * r))
        return None

    return state.map(lambda v: v.transform(mode_map))


def polarization_rotation(
    state: MixedFockState, spatial: str, unitary: np.ndarray, targets: tuple[str, str] | None = None
) -> MixedFockState:
    """Act with a 2x2 polarization unitary on one spatial mode.

    With ``targets = (s_h, s_v)`` the rotated H and V components are routed
    to separate spatial modes, as a polarizing splitter would.
    """
    u = np.asarray(unitary, dtype=complex)
    s_h, s_v = targets or (spatial, spatial)

    def mode_map(m: ModeLabel):
        if m.spatial != spatial:
            return None
        col = u[:, 0 if m.polarization == "H" else 1]
        return tuple(
            (ModeLabel(s, p, m.temporal), col[i])
            for i, (s, p) in enumerate(((s_h, "H"), (s_v, "V")))
            if abs(col[i]) > _PRUNE
        )

    return state.map(lambda v: v.transform(mode_map))


def all_in(spatial: str, n: int) -> Callable[[Config], bool]:
    """Configuration predicate: exactly ``n`` photons on ``spatial``."""
    return lambda k: sum(1 for m in k if m.spatial == spatial) == n


_ARITY = {"clone12": 2, "clone13": 3, "clone23": 3, "gamma_calibration": 3}


def _pair_state(
    s: SourceSpec, a: SourceSpec, model: CoherenceModel, temporal, eps: float
) -> MixedFockState:
    single = embed_photon(s, model, K_S, 0, temporal=temporal[0]).product(
        embed_photon(a, model, K_A, 0, temporal=temporal[1])
    )
    if eps <= 0:
        return single
    double = embed_photon(s, model, K_S, 0, temporal=temporal[0], n_photons=2).product(
        embed_photon(a, model, K_A, 0, temporal=temporal[1], n_photons=2)
    )
    return MixedFockState.mix([(1 - eps, single), (eps, double)])


def run_circuit(
    sources: Sequence[SourceSpec],
    model: CoherenceModel,
    circuit: str,
    *,
    double_pair_eps: float = 0.0,
    bs_sign: int = 1,
) -> MixedFockState:
    """Propagate the sources through one of the experiment's topologies.

    Source order is ``(S, A)`` for ``clone12`` and ``(S, A, B)`` otherwise.
    ``clone12`` ends after BS_A (clones on ``k_2``); ``clone13`` and
    ``gamma_calibration`` run BS_A then BS_B (clones on ``k_3``);
    ``clone23`` conditions BS_A on both pair photons leaving on ``k_2`` and
    then runs BS_B. With ``double_pair_eps`` the S-A pair is emitted twice
    with that probability.
    """
    if circuit not in _ARITY:
        raise ValueError(f"unknown circuit {circuit!r}")
    if len(sources) != _ARITY[circuit]:
        raise ValueError(f"{circuit} takes {_ARITY[circuit]} sources, got {len(sources)}")
    if not 0 <= double_pair_eps <= 1:
        raise ValueError("double-pair probability must lie in [0, 1]")
    temporal = temporal_embedding(overlap_gram(sources, model))
    state = _pair_state(sources[0], sources[1], model, temporal, double_pair_eps)
    state = beam_splitter(state, K_S, K_A, K_1, K_2, bs_sign)
    if circuit == "clone12":
        return state
    if circuit == "clone23":
        state = state.filter(lambda k: all(m.spatial == K_2 for m in k)).renormalized()
    state = state.product(embed_photon(sources[2], model, K_B, 0, temporal=temporal[2]))
    return beam_splitter(state, K_2, K_B, K_3, K_4, bs_sign)


def polarization_state(state: MixedFockState, spatial: str, n: int) -> WeightedOperator:
    """First-quantized polarization operator of the ``n`` photons on ``spatial``.

    Keeps configurations with exactly ``n`` photons there, traces the other
    modes and the temporal labels; the weight is the post-selection
    probability.
    """
    pols = {"H": 0, "V": 1}
    times = sorted({m.temporal for _, v in state.branches for k in v.terms for m in k})
    tidx = {t: i for i, t in enumerate(times)}
    nt = len(times) or 1
    local = 2 * nt
    rho = np.zeros((2**n, 2**n), dtype=complex)
    for p, vec in state.branches:
        by_env: dict[Config, np.ndarray] = {}
        for k, amp in vec.terms.items():
            inside = [m for m in k if m.spatial == spatial]
            if len(inside) != n:
                continue
            env = tuple(m for m in k if m.spatial != spatial)
            psi = by_env.setdefault(env, np.zeros(local**n, dtype=complex))
            labels = [pols[m.polarization] * nt + tidx[m.temporal] for m in inside]
            mult = math.prod(math.factorial(c) for c in Counter(labels).values())
            coef = amp * math.sqrt(mult / math.factorial(n))
            for seq in set(itertools.permutations(labels)):
                idx = 0
                for x in seq:
                    idx = idx * local + x
                psi[idx] += coef
        for psi in by_env.values():
            t = psi.reshape((2, nt) * n)
            # trace temporal axes
            rows = "".join(chr(97 + 2 * i) for i in range(n))
            tl = "".join(chr(97 + 2 * i + 1) for i in range(n))
            subs = "".join(rows[i] + tl[i] for i in range(n))
            subs_c = "".join(rows[i].upper() + tl[i] for i in range(n))
            block = np.einsum(f"{subs},{subs_c}->{rows}{rows.upper()}", t, t.conj())
            rho += p * block.reshape(2**n, 2**n)
    return WeightedOperator.of(rho)
