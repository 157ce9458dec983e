"""Polarization analysis, the non-number-resolving detector tree, coincidence
classification and Monte Carlo counting."""

from __future__ import annotations

import functools
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .algebra import PureQubit
from .cloning import EnhancementReport, report_from_ratios
from .fock import K_PERP, K_PHI, MixedFockState, polarization_rotation

DETECTORS = ("D1", "D2", "D3", "D1*", "D2*")
PHI_SIDE = frozenset(DETECTORS[:3])
PERP_SIDE = frozenset(DETECTORS[3:])

THREE_FOLD = ("all_phi", "two_phi_one_perp", "one_phi_two_perp")
TWO_FOLD = ("phi_phi", "phi_perp")
REJECT = "reject"

CHUNK_SHOTS = 1 << 16
MAX_PHOTONS = 10


@dataclass(frozen=True)
class AnalyzerSetting:
    basis_qubit: PureQubit

    @property
    def unitary(self) -> np.ndarray:
        """Maps ``|phi> -> |H>`` and ``|phi_perp> -> |V>``."""
        phi = self.basis_qubit.vector
        perp = self.basis_qubit.orthogonal().vector
        return np.array([phi.conj(), perp.conj()])


@dataclass(frozen=True)
class DetectorTree:
    """BS1 sends half of k_phi to D1 and half to BS2 (D2, D3); BS3 splits
    k_phi* evenly onto D1*, D2*. ``efficiency`` is one value or five, in
    :data:`DETECTORS` order."""

    efficiency: float | tuple[float, ...] = 1.0
    max_photons: int = MAX_PHOTONS

    SPLIT = (0.5, 0.25, 0.25, 0.5, 0.5)

    @property
    def efficiencies(self) -> tuple[float, ...]:
        eta = self.efficiency
        eta = (eta,) * 5 if np.isscalar(eta) else tuple(eta)
        if len(eta) != 5 or not all(0 < e <= 1 for e in eta):
            raise ValueError(f"invalid detector efficiencies {self.efficiency!r}")
        return tuple(float(e) for e in eta)

    def routing(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-photon click probabilities ``(D1, D2, D3, lost)`` and
        ``(D1*, D2*, lost)``."""
        p = [s * e for s, e in zip(self.SPLIT, self.efficiencies)]
        phi = np.array(p[:3] + [1 - sum(p[:3])])
        perp = np.array(p[3:] + [1 - sum(p[3:])])
        return phi, perp


@dataclass(frozen=True)
class CoincidenceRecord:
    component: str
    pattern: frozenset
    count: int
    setting: tuple[float, float]
    shots: int


def analyze(state: MixedFockState, setting: AnalyzerSetting, spatial: str) -> MixedFockState:
    """Undo the phi encoding on ``spatial`` and split H onto ``k_phi`` and V
    onto ``k_phi*``."""
    present = {m.spatial for _, v in state.branches for k in v.terms for m in k}
    if spatial not in present:
        raise ValueError(f"no photons on mode {spatial!r}")
    return polarization_rotation(state, spatial, setting.unitary, (K_PHI, K_PERP))


def classify(pattern: Iterable[str], fold: int = 3) -> str:
    """Component heralded by a set of fired detectors, or ``"reject"``."""
    pattern = frozenset(pattern)
    if not pattern <= set(DETECTORS) or len(pattern) != fold:
        return REJECT
    n_phi = len(pattern & PHI_SIDE)
    n_perp = fold - n_phi
    if fold == 3:
        return {(3, 0): "all_phi", (2, 1): "two_phi_one_perp", (1, 2): "one_phi_two_perp"}.get(
            (n_phi, n_perp), REJECT
        )
    if fold == 2:
        return {(2, 0): "phi_phi", (1, 1): "phi_perp"}.get((n_phi, n_perp), REJECT)
    return REJECT


def mask_pattern(mask: int) -> frozenset:
    return frozenset(d for i, d in enumerate(DETECTORS) if mask >> i & 1)


@functools.lru_cache(maxsize=None)
def _mask_probabilities(n_phi: int, n_perp: int, phi: tuple, perp: tuple) -> dict[int, float]:
    """Click-mask distribution for fixed photon numbers on the two arms.

    Photons in a single spatial input of a passive splitter tree distribute
    multinomially whatever their internal state, so routing is done per
    detector-count vector.
    """
    def side(n, probs, offset):
        out: dict[int, float] = defaultdict(float)
        k = len(probs)
        for counts in _compositions(n, k):
            w = math.factorial(n)
            for c, p in zip(counts, probs):
                w *= p**c / math.factorial(c)
            mask = 0
            for i, c in enumerate(counts[:-1]):
                if c:
                    mask |= 1 << (offset + i)
            out[mask] += w
        return out

    a = side(n_phi, phi, 0)
    b = side(n_perp, perp, 3)
    return {ma | mb: pa * pb for ma, pa in a.items() for mb, pb in b.items()}


def _compositions(n: int, k: int):
    if k == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, k - 1):
            yield (first,) + rest


def arm_distribution(state: MixedFockState) -> dict[tuple[int, int], float]:
    return state.number_distribution([K_PHI, K_PERP])


def detection_probabilities(
    state: MixedFockState, tree: DetectorTree = DetectorTree(), fold: int = 3
) -> dict[str, float]:
    """Exact probability of every component class plus ``"reject"``.

    Sums to the total weight of ``state``.
    """
    phi, perp = (tuple(x) for x in tree.routing())
    classes = THREE_FOLD if fold == 3 else TWO_FOLD
    out = {c: 0.0 for c in classes}
    out[REJECT] = 0.0
    for (a, b), p in arm_distribution(state).items():
        if a + b > tree.max_photons:
            raise ValueError(f"{a + b} photons exceed the detector model limit {tree.max_photons}")
        for mask, q in _mask_probabilities(a, b, phi, perp).items():
            out[classify(mask_pattern(mask), fold)] += p * q
    return out


def acceptance_factor(n_phi: int, n_perp: int, tree: DetectorTree = DetectorTree()) -> float:
    """Probability that ``n_phi + n_perp`` photons fire as many distinct detectors."""
    phi, perp = (tuple(x) for x in tree.routing())
    fold = n_phi + n_perp
    return sum(
        q
        for mask, q in _mask_probabilities(n_phi, n_perp, phi, perp).items()
        if bin(mask).count("1") == fold
    )


# -- Monte Carlo -------------------------------------------------------------


def _outcome_table(state: MixedFockState, tree: DetectorTree):
    dist = arm_distribution(state)
    keys = list(dist)
    probs = np.array([dist[k] for k in keys], dtype=float)
    residual = 1.0 - probs.sum()
    if residual < -1e-9:
        raise ValueError("state weight exceeds one")
    keys.append((0, 0))
    probs = np.append(probs, max(residual, 0.0))
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    n_phi = np.array([k[0] for k in keys], dtype=np.int64)
    n_perp = np.array([k[1] for k in keys], dtype=np.int64)
    width = 1 + int((n_phi + n_perp).max())
    if width - 1 > tree.max_photons:
        raise ValueError("photon number exceeds the detector model limit")
    phi, perp = tree.routing()
    return cdf, n_phi, n_perp, np.cumsum(phi), np.cumsum(perp), width


def _chunk_rng(seed: int, stream: Sequence[int], chunk: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(stream) + (chunk,))
    return np.random.default_rng(ss)


def _run_chunk(args):
    table, seed, stream, chunk, n, backend = args
    cdf, n_phi, n_perp, phi_cdf, perp_cdf, width = table
    u = _chunk_rng(seed, stream, chunk).random((n, width))
    fn = kernels.backends()[backend] if backend else kernels.sample_masks
    return fn(cdf, n_phi, n_perp, phi_cdf, perp_cdf, u)


def sample_mask_histogram(
    state: MixedFockState,
    tree: DetectorTree,
    shots: int,
    seed: int,
    stream: Sequence[int] = (),
    workers: int = 1,
    backend: str | None = None,
) -> np.ndarray:
    """Click-mask counts over ``shots`` shots.

    Shots are cut into fixed chunks, each with its own seed-derived stream,
    so the result does not depend on ``workers``.
    """
    if shots < 1:
        raise ValueError("shots must be at least 1")
    table = _outcome_table(state, tree)
    jobs = []
    for chunk, start in enumerate(range(0, shots, CHUNK_SHOTS)):
        jobs.append((table, seed, tuple(stream), chunk, min(CHUNK_SHOTS, shots - start), backend))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    else:
        parts = [_run_chunk(j) for j in jobs]
    return np.sum(parts, axis=0)


def monte_carlo_counts(
    state: MixedFockState,
    tree: DetectorTree,
    shots: int,
    seed: int,
    *,
    fold: int = 3,
    setting: tuple[float, float] = (0.0, 0.0),
    stream: Sequence[int] = (),
    workers: int = 1,
) -> list[CoincidenceRecord]:
    """Seeded counting experiment; one record per accepted detector pattern."""
    hist = sample_mask_histogram(state, tree, shots, seed, stream, workers)
    records = []
    for mask in range(32):
        pattern = mask_pattern(mask)
        comp = classify(pattern, fold)
        if comp == REJECT:
            continue
        records.append(CoincidenceRecord(comp, pattern, int(hist[mask]), setting, shots))
    return records


def component_counts(records: Iterable[CoincidenceRecord]) -> tuple[dict[str, int], int]:
    counts: dict[str, int] = defaultdict(int)
    shots = None
    for r in records:
        counts[r.component] += r.count
        if shots is not None and r.shots != shots:
            raise ValueError("records mix different shot totals")
        shots = r.shots
    return dict(counts), shots or 0


class UndefinedRatioError(ZeroDivisionError):
    pass


def component_ratios(
    on: Iterable[CoincidenceRecord], off: Iterable[CoincidenceRecord]
) -> dict[str, tuple[float, float]]:
    """On/off rate ratio and its standard error for every component."""
    c_on, s_on = component_counts(on)
    c_off, s_off = component_counts(off)
    if set(c_on) != set(c_off):
        raise ValueError("on and off records cover different components")
    out = {}
    for comp in c_on:
        n_on, n_off = c_on[comp], c_off[comp]
        if n_off == 0:
            out[comp] = (math.nan, math.nan)
            continue
        p_on, p_off = n_on / s_on, n_off / s_off
        r = p_on / p_off
        rel = math.sqrt(
            ((1 - p_on) / (s_on * p_on) if n_on else 0.0) + (1 - p_off) / (s_off * p_off)
        )
        out[comp] = (r, r * rel)
    return out


def _need(ratios: Mapping[str, tuple[float, float]], comp: str) -> tuple[float, float]:
    r = ratios.get(comp)
    if r is None or math.isnan(r[0]):
        raise UndefinedRatioError(f"no off-resonance counts for {comp!r}")
    return r


def enhancement_from_counts(
    scenario: str,
    on_resonance: Iterable[CoincidenceRecord],
    off_resonance: Iterable[CoincidenceRecord],
    gamma_records: tuple[Iterable[CoincidenceRecord], Iterable[CoincidenceRecord]] | None = None,
) -> EnhancementReport:
    """Turn peak and baseline counts into enhancement ratios.

    ``clone13`` needs the calibration pair ``gamma_records = (on, off)`` for
    Gamma; its ``off_resonance`` set is the Z_B = 0, Z_A far-detuned run.
    """
    ratios = component_ratios(on_resonance, off_resonance)
    if scenario == "gamma_calibration":
        g, ge = _need(ratios, "two_phi_one_perp")
        return EnhancementReport(scenario, gamma=g, stderr={"gamma": ge})
    if scenario == "clone12":
        r, e = _need(ratios, "phi_phi")
        return report_from_ratios(scenario, r_simple=r, stderr={"r_simple": e})
    if scenario == "clone23":
        r, e = _need(ratios, "all_phi")
        return report_from_ratios(scenario, r_simple=r, stderr={"r_simple": e})
    if scenario == "clone13":
        if gamma_records is None:
            raise ValueError("clone13 needs the Gamma calibration records")
        g = enhancement_from_counts("gamma_calibration", *gamma_records)
        r1, e1 = _need(ratios, "all_phi")
        r2, e2 = _need(ratios, "two_phi_one_perp")
        return report_from_ratios(
            scenario, gamma=g.gamma, r1=r1, r2=r2,
            stderr={"gamma": g.stderr["gamma"], "r1": e1, "r2": e2},
        )
    raise ValueError(f"unknown scenario {scenario!r}")


def enhancement_from_probabilities(
    scenario: str,
    on: Mapping[str, float],
    off: Mapping[str, float],
    gamma: tuple[Mapping[str, float], Mapping[str, float]] | None = None,
) -> EnhancementReport:
    """Same bookkeeping as :func:`enhancement_from_counts` on exact class
    probabilities."""
    def ratio(a, b, comp):
        if b[comp] <= 0:
            raise UndefinedRatioError(f"zero baseline for {comp!r}")
        return a[comp] / b[comp]

    if scenario == "gamma_calibration":
        return EnhancementReport(scenario, gamma=ratio(on, off, "two_phi_one_perp"))
    if scenario == "clone12":
        return report_from_ratios(scenario, r_simple=ratio(on, off, "phi_phi"))
    if scenario == "clone23":
        return report_from_ratios(scenario, r_simple=ratio(on, off, "all_phi"))
    if scenario == "clone13":
        if gamma is None:
            raise ValueError("clone13 needs the Gamma calibration probabilities")
        return report_from_ratios(
            scenario,
            gamma=ratio(*gamma, "two_phi_one_perp"),
            r1=ratio(on, off, "all_phi"),
            r2=ratio(on, off, "two_phi_one_perp"),
        )
    raise ValueError(f"unknown scenario {scenario!r}")
