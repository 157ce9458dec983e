"""Scenario assembly, delay scans and result tables for the cloning setup."""

from __future__ import annotations

import configparser
import csv
import dataclasses
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import cloning
from .algebra import PureQubit
from .detection import (
    AnalyzerSetting,
    DetectorTree,
    analyze,
    detection_probabilities,
    enhancement_from_counts,
    enhancement_from_probabilities,
    monte_carlo_counts,
    REJECT,
)
from .fock import (
    K_2,
    K_3,
    CoherenceModel,
    MixedFockState,
    SourceSpec,
    polarization_state,
    run_circuit,
)

SCENARIOS = ("clone12", "clone13", "clone23", "gamma_calibration", "nm_analytic")
CSV_HEADER = (
    "z_a_um", "z_b_um", "component", "exact_probability",
    "mc_count", "mc_rate", "mc_stderr", "status",
)
# Detuning used for "far from the peak" reference runs: overlap exp(-100).
FAR_FACTOR = 10.0
ENGINE_TOL = 1e-9


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


Range = tuple  # (start, stop, steps)


@dataclass
class ExperimentConfig:
    scenario: str = "clone13"
    input_state: str = "H"
    n: int = 1
    m: int = 3
    tau_coh_fs: float = 200.0
    wavelength_nm: float = 795.0
    z_a_um: float | Range = 0.0
    z_b_um: float | Range = 0.0
    mu: float = 0.05
    double_pair_eps: float = 0.0
    shots: int = 1_000_000
    seed: int = 0
    cross_visibility: float = 1.0

    def validate(self) -> ExperimentConfig:
        if self.scenario not in SCENARIOS:
            raise ConfigError("scenario", f"must be one of {', '.join(SCENARIOS)}")
        try:
            input_qubit(self.input_state)
        except ValueError as e:
            raise ConfigError("input_state", str(e)) from None
        if self.scenario == "nm_analytic" and not 1 <= self.n <= self.m:
            raise ConfigError("n", "need 1 <= n <= m")
        if self.tau_coh_fs <= 0:
            raise ConfigError("tau_coh_fs", "must be positive")
        for key in ("z_a_um", "z_b_um"):
            v = getattr(self, key)
            if isinstance(v, tuple) and (len(v) != 3 or int(v[2]) < 2):
                raise ConfigError(key, "scan range needs start, stop and steps >= 2")
        if self.mu < 0:
            raise ConfigError("mu", "must be non-negative")
        if not 0 <= self.double_pair_eps <= 1:
            raise ConfigError("double_pair_eps", "must lie in [0, 1]")
        if self.shots < 1:
            raise ConfigError("shots", "must be at least 1")
        if not 0 <= self.cross_visibility <= 1:
            raise ConfigError("cross_visibility", "must lie in [0, 1]")
        return self

    def model(self) -> CoherenceModel:
        return CoherenceModel(self.tau_coh_fs, self.wavelength_nm, cross_visibility=self.cross_visibility)

    def grid(self) -> list[tuple[float, float]]:
        za, zb = _axis(self.z_a_um), _axis(self.z_b_um)
        return [(a, b) for a in za for b in zb]

    def dump(self) -> str:
        """Flat ``key = value`` text, readable by :func:`load_config`."""
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ", ".join(_fmt(x) for x in v)
            lines.append(f"{f.name} = {_fmt(v) if isinstance(v, float) else v}")
        return "\n".join(lines) + "\n"


def _fmt(x) -> str:
    return format(x, ".9g") if isinstance(x, float) else str(x)


def _axis(v) -> list[float]:
    if isinstance(v, tuple):
        start, stop, steps = float(v[0]), float(v[1]), int(v[2])
        return [float(x) for x in np.linspace(start, stop, steps)]
    return [float(v)]


def parse_length(text: str) -> float | Range:
    """``"12.5"`` or a scan range ``"start,stop,steps"``."""
    parts = [p.strip() for p in str(text).replace(":", ",").split(",") if p.strip()]
    if len(parts) == 1:
        return float(parts[0])
    if len(parts) == 3:
        return (float(parts[0]), float(parts[1]), int(parts[2]))
    raise ValueError(f"cannot parse {text!r} as a length or start,stop,steps")


_CASTS = {
    "scenario": str, "input_state": str, "n": int, "m": int, "tau_coh_fs": float,
    "wavelength_nm": float, "z_a_um": parse_length, "z_b_um": parse_length, "mu": float,
    "double_pair_eps": float, "shots": int, "seed": int, "cross_visibility": float,
}


def apply_overrides(cfg: ExperimentConfig, values: dict) -> ExperimentConfig:
    for key, raw in values.items():
        if key not in _CASTS:
            raise ConfigError(key, "unknown configuration key")
        try:
            setattr(cfg, key, _CASTS[key](raw) if isinstance(raw, str) else raw)
        except ValueError as e:
            raise ConfigError(key, str(e)) from None
    return cfg


def load_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse flat ``key = value`` text (``#`` comments allowed)."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        parser.read_string("[experiment]\n" + text)
    except configparser.Error as e:
        raise ConfigError("config", str(e).splitlines()[0]) from None
    return apply_overrides(base or ExperimentConfig(), dict(parser["experiment"]))


def input_qubit(label: str) -> PureQubit:
    if "," in label:
        theta, phi = (float(x) for x in label.split(","))
        return PureQubit.from_bloch(theta, phi)
    return PureQubit.named(label)


# -- scenarios -------------------------------------------------------------


@dataclass(frozen=True)
class Setup:
    """Everything needed to run one circuit at one delay setting."""

    scenario: str
    phi: PureQubit
    model: CoherenceModel
    mu: float = 0.0
    eps: float = 0.0
    tree: DetectorTree = DetectorTree()

    @property
    def fold(self) -> int:
        return 2 if self.scenario == "clone12" else 3

    @property
    def far(self) -> float:
        return FAR_FACTOR * self.model.length_scale_um

    def _b_source(self, z_b: float, qubit: PureQubit | None = None) -> SourceSpec:
        if self.mu > 0:
            return SourceSpec.coherent(self.mu, z_b, qubit)
        if qubit is not None:
            return SourceSpec.pure(qubit, z_b, origin="laser")
        return SourceSpec.depolarized_photon(z_b, origin="laser")

    def sources(self, z_a: float, z_b: float) -> list[SourceSpec]:
        s = self.scenario
        if s == "clone12":
            return [SourceSpec.pure(self.phi, z_a), SourceSpec.depolarized_photon()]
        if s == "clone13":
            return [SourceSpec.pure(self.phi, z_a), SourceSpec.depolarized_photon(), self._b_source(z_b)]
        if s == "clone23":
            return [SourceSpec.pure(self.phi, z_a), SourceSpec.pure(self.phi), self._b_source(z_b)]
        if s == "gamma_calibration":
            v, h = PureQubit.named("V"), PureQubit.named("H")
            return [SourceSpec.pure(v, z_a), SourceSpec.pure(h), self._b_source(z_b, v)]
        raise ValueError(f"no circuit for scenario {s!r}")

    @property
    def analyzer(self) -> AnalyzerSetting:
        # Calibration input |V>|H>|V> only populates {phi phi phi_perp} for phi = V.
        if self.scenario == "gamma_calibration":
            return AnalyzerSetting(PureQubit.named("V"))
        return AnalyzerSetting(self.phi)

    @property
    def output_mode(self) -> str:
        return K_2 if self.scenario == "clone12" else K_3

    def output_state(self, z_a: float, z_b: float) -> MixedFockState:
        return run_circuit(self.sources(z_a, z_b), self.model, self.scenario, double_pair_eps=self.eps)

    def analyzed_state(self, z_a: float, z_b: float) -> MixedFockState:
        return analyze(self.output_state(z_a, z_b), self.analyzer, self.output_mode)

    def probabilities(self, z_a: float, z_b: float) -> dict[str, float]:
        return detection_probabilities(self.analyzed_state(z_a, z_b), self.tree, self.fold)

    def counts(self, z_a: float, z_b: float, shots: int, seed: int, stream: Sequence[int], workers: int = 1):
        return monte_carlo_counts(
            self.analyzed_state(z_a, z_b), self.tree, shots, seed,
            fold=self.fold, setting=(z_a, z_b), stream=stream, workers=workers,
        )

    def on_setting(self) -> tuple[float, float]:
        return (0.0, 0.0)

    def off_setting(self) -> tuple[float, float]:
        """Baseline delays: BS_B detuned for clone23, Z_A detuned otherwise."""
        if self.scenario == "clone23":
            return (0.0, self.far)
        return (self.far, 0.0)

    def nm(self) -> tuple[int, int]:
        return {"clone12": (1, 2), "clone13": (1, 3), "clone23": (2, 3)}[self.scenario]


def setup_from_config(cfg: ExperimentConfig, scenario: str | None = None) -> Setup:
    return Setup(scenario or cfg.scenario, input_qubit(cfg.input_state), cfg.model(), cfg.mu, cfg.double_pair_eps)


_SCENARIO_ID = {s: i for i, s in enumerate(SCENARIOS)}


def stream_key(scenario: str, label: int, index: int = 0) -> tuple[int, int, int]:
    """Seed-sequence spawn key: scenario, run label (0 grid, 1 on, 2 off), point."""
    return (_SCENARIO_ID[scenario], label, index)


# -- tables ----------------------------------------------------------------


@dataclass(frozen=True)
class ResultRow:
    z_a_um: float
    z_b_um: float
    component: str
    exact_probability: float
    mc_count: int
    mc_rate: float
    mc_stderr: float
    status: str = "ok"

    def sort_key(self):
        return (self.z_a_um, self.z_b_um, self.component)


def rows_for(z_a: float, z_b: float, exact: dict[str, float], records, prefix: str = "") -> list[ResultRow]:
    counts: dict[str, int] = {c: 0 for c in exact if c != REJECT}
    shots = records[0].shots
    for r in records:
        counts[r.component] += r.count
    rows = []
    for comp, n in counts.items():
        rate = n / shots
        err = math.sqrt(rate * (1 - rate) / shots)
        dev = abs(rate - exact[comp])
        status = "ok" if dev < 5 * max(err, 1 / shots) else "flag"
        rows.append(ResultRow(z_a, z_b, prefix + comp, exact[comp], n, rate, err, status))
    return rows


def emit_csv(rows: Iterable[ResultRow], path) -> None:
    """Write rows sorted by (z_a, z_b, component); floats to 9 significant digits."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(rows))


def csv_text(rows: Iterable[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in sorted(rows, key=ResultRow.sort_key):
        w.writerow([
            _fmt(float(r.z_a_um)), _fmt(float(r.z_b_um)), r.component,
            _fmt(float(r.exact_probability)), r.mc_count, _fmt(float(r.mc_rate)),
            _fmt(float(r.mc_stderr)), r.status,
        ])
    return buf.getvalue()


def read_csv(path) -> list[ResultRow]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError("unexpected CSV header")
        return [
            ResultRow(
                float(d["z_a_um"]), float(d["z_b_um"]), d["component"],
                float(d["exact_probability"]), int(d["mc_count"]), float(d["mc_rate"]),
                float(d["mc_stderr"]), d["status"],
            )
            for d in reader
        ]


# -- runs ------------------------------------------------------------------


@dataclass
class RunResult:
    rows: list[ResultRow] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    ok: bool = True


def engine_check(setup: Setup) -> dict:
    """Fock-engine clones at full resonance against the projector engine."""
    n, m = setup.nm()
    out = polarization_state(setup.output_state(0.0, 0.0), setup.output_mode, m)
    exact = cloning.clone_map(cloning.CloningSpec(n, m, setup.phi))
    dist_model = dataclasses.replace(setup.model, spdc_visibility=0.0, cross_visibility=0.0)
    dist = dataclasses.replace(setup, model=dist_model)
    transmission = polarization_state(dist.output_state(0.0, 0.0), setup.output_mode, m).weight
    expected = cloning.bosonic_multiplicity(n, m) * exact.success_probability * transmission
    return {
        "state_distance": out.normalized().distance(exact.output_state),
        "branch_probability": out.weight,
        "transmission": transmission,
        "predicted_branch_probability": expected,
    }


def analytic_summary(n: int, m: int, phi: PureQubit) -> dict:
    out = {
        "n": n, "m": m,
        "success_probability": cloning.success_probability(n, m),
        "fidelity": cloning.theoretical_fidelity(n, m),
    }
    if m <= 8 and m > n:
        o = cloning.clone_map(cloning.CloningSpec(n, m, phi))
        out["exact_success_probability"] = o.success_probability
        out["exact_fidelity"] = o.fidelity
        out["component_weights"] = [w for _, w in o.component_weights]
    return out


def enhancement(setup: Setup, shots: int, seed: int, workers: int = 1) -> dict:
    """Peak/baseline ratios from exact probabilities and from counts."""
    sc = setup.scenario
    on, off = setup.on_setting(), setup.off_setting()
    p_on, p_off = setup.probabilities(*on), setup.probabilities(*off)
    c_on = setup.counts(*on, shots, seed, stream_key(sc, 1), workers)
    c_off = setup.counts(*off, shots, seed, stream_key(sc, 2), workers)
    gamma_p = gamma_c = None
    if sc == "clone13":
        g = dataclasses.replace(setup, scenario="gamma_calibration")
        gamma_p = (g.probabilities(*g.on_setting()), g.probabilities(*g.off_setting()))
        gamma_c = (
            g.counts(*g.on_setting(), shots, seed, stream_key("gamma_calibration", 1), workers),
            g.counts(*g.off_setting(), shots, seed, stream_key("gamma_calibration", 2), workers),
        )
    exact = enhancement_from_probabilities(sc, p_on, p_off, gamma_p)
    mc = enhancement_from_counts(sc, c_on, c_off, gamma_c)
    rows = rows_for(*on, p_on, c_on, "on:") + rows_for(*off, p_off, c_off, "off:")
    return {"exact": exact, "mc": mc, "rows": rows}


def report_dict(rep: cloning.EnhancementReport) -> dict:
    d = {k: v for k, v in dataclasses.asdict(rep).items() if v is not None}
    if isinstance(d.get("fidelity_from_ratios"), float) and math.isnan(d["fidelity_from_ratios"]):
        d.pop("fidelity_from_ratios")
    return d


def run(cfg: ExperimentConfig, *, workers: int = 1, with_reference: bool = True) -> RunResult:
    """Execute one configured scenario over its delay grid."""
    cfg.validate()
    phi = input_qubit(cfg.input_state)
    res = RunResult()
    if cfg.scenario == "nm_analytic":
        res.summary = analytic_summary(cfg.n, cfg.m, phi)
        return res
    setup = setup_from_config(cfg)
    for i, (za, zb) in enumerate(cfg.grid()):
        exact = setup.probabilities(za, zb)
        recs = setup.counts(za, zb, cfg.shots, cfg.seed, stream_key(cfg.scenario, 0, i), workers)
        res.rows.extend(rows_for(za, zb, exact, recs))
    summary: dict = {"scenario": cfg.scenario, "backend": _backend()}
    if cfg.scenario != "gamma_calibration":
        n, m = setup.nm()
        summary.update(
            theoretical_success_probability=cloning.success_probability(n, m),
            theoretical_fidelity=cloning.theoretical_fidelity(n, m),
            ideal_ratios=report_dict(cloning.ideal_enhancements(cfg.scenario)),
        )
        o = cloning.clone_map(cloning.CloningSpec(n, m, phi))
        summary.update(success_probability=o.success_probability, clone_fidelity=o.fidelity)
        if cfg.mu == 0 and cfg.double_pair_eps == 0 and cfg.cross_visibility == 1:
            chk = engine_check(setup)
            summary["engine_check"] = chk
            agree = chk["state_distance"] < 1e-10 and abs(
                chk["branch_probability"] - chk["predicted_branch_probability"]
            ) < ENGINE_TOL
            summary["engines_agree"] = agree
            res.ok = agree
    else:
        summary["ideal_gamma"] = 2.0
    if with_reference:
        enh = enhancement(setup, cfg.shots, cfg.seed, workers)
        summary["ratios_exact"] = report_dict(enh["exact"])
        summary["ratios_mc"] = report_dict(enh["mc"])
    if len(res.rows) and (isinstance(cfg.z_a_um, tuple) or isinstance(cfg.z_b_um, tuple)):
        summary["scan"] = scan_summary(res.rows)
    res.summary = summary
    return res


def scan_summary(rows: Sequence[ResultRow]) -> dict:
    """Peak-over-baseline rate per component: the point nearest zero delay
    against the mean of the two scan end points."""
    out = {}
    for comp in sorted({r.component for r in rows}):
        pts = sorted((r for r in rows if r.component == comp), key=lambda r: (r.z_a_um, r.z_b_um))
        peak = min(pts, key=lambda r: abs(r.z_a_um) + abs(r.z_b_um))
        base = 0.5 * (pts[0].mc_rate + pts[-1].mc_rate)
        base_exact = 0.5 * (pts[0].exact_probability + pts[-1].exact_probability)
        out[comp] = {
            "peak_z_a_um": peak.z_a_um,
            "peak_z_b_um": peak.z_b_um,
            "peak_over_baseline_mc": peak.mc_rate / base if base > 0 else math.nan,
            "peak_over_baseline_exact": peak.exact_probability / base_exact if base_exact > 0 else math.nan,
        }
    return out


def spurious_study(
    mus: Sequence[float] = (0.0, 0.05, 0.1, 0.15, 0.2),
    epss: Sequence[float] = (0.0, 0.01, 0.02, 0.05),
    phi: PureQubit | None = None,
    model: CoherenceModel | None = None,
) -> list[dict]:
    """Exact R_{2->3} and its reduction from the ideal 3 over a (mu, eps) grid.

    ``mu = 0`` stands for the ideal single-photon B arm.
    """
    phi = phi or PureQubit.named("H")
    model = model or CoherenceModel()
    out = []
    for eps in epss:
        for mu in mus:
            s = Setup("clone23", phi, model, mu=mu, eps=eps)
            r = enhancement_from_probabilities(
                "clone23", s.probabilities(*s.on_setting()), s.probabilities(*s.off_setting())
            ).r_simple
            out.append({"mu": mu, "eps": eps, "r23": r, "reduction": 1 - r / 3})
    return out


def _backend() -> str:
    from . import kernels

    return kernels.BACKEND
