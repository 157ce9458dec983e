"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Heavy Monte Carlo runs are shared through module-scoped fixtures.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from symclone import cloning
from symclone.algebra import PureQubit, symmetric_projector
from symclone.detection import acceptance_factor, component_counts
from symclone.experiment import Setup, csv_text, engine_check, read_csv, spurious_study, stream_key
from symclone.fock import K_1, K_2, CoherenceModel, SourceSpec, polarization_state, run_circuit
from symclone.reproduce import run_ratios

SHOTS = 1_000_000
SEED = 7
TEST_STATES = ("H", "H+V", "H+iV")
H = PureQubit.named("H")


def within_sigma(value, err, target, k=4.0):
    return abs(value - target) <= k * err


@pytest.fixture(scope="module")
def ideal_runs():
    t0 = time.perf_counter()
    res = run_ratios(CoherenceModel(), SHOTS, SEED, H)
    return res, time.perf_counter() - t0


def test_1_closed_form(criterion):
    t0 = time.perf_counter()
    pairs = [
        (cloning.success_probability(1, 3), 1 / 2),
        (cloning.success_probability(2, 3), 2 / 3),
        (cloning.success_probability(1, 2), 3 / 4),
        (cloning.theoretical_fidelity(1, 2), 5 / 6),
        (cloning.theoretical_fidelity(1, 3), 7 / 9),
        (cloning.theoretical_fidelity(2, 3), 11 / 12),
    ]
    err = max(abs(a - b) for a, b in pairs)
    dt = time.perf_counter() - t0
    ok = err < 1e-12 and dt < 1.0
    criterion(1, "closed-form success probabilities and fidelities", ok, f"max error {err:.1e}, {dt * 1e3:.1f} ms")
    assert ok


def test_2_state_fixtures(criterion):
    cases = {
        (1, 2): ([2 / 3, 1 / 3], 5 / 6),
        (1, 3): ([1 / 2, 1 / 3, 1 / 6], 7 / 9),
        (2, 3): ([3 / 4, 1 / 4], 11 / 12),
    }
    err = 0.0
    for label in TEST_STATES:
        phi = PureQubit.named(label)
        target_perp = phi.orthogonal().projector().entries
        for (n, m), (weights, f) in cases.items():
            o = cloning.clone_map(cloning.CloningSpec(n, m, phi))
            got = [w for _, w in o.component_weights]
            err = max(err, max(abs(a - b) for a, b in zip(got, weights + [0.0] * (len(got) - len(weights)))))
            target = f * phi.projector().entries + (1 - f) * target_perp
            err = max(err, o.clone_state.distance(target))
    ok = err < 1e-12
    criterion(2, "output-state and reduced-clone fixtures", ok, f"max error {err:.1e}")
    assert ok


def test_3_chain_identity(criterion):
    t0 = time.perf_counter()
    ident = 0.0
    for m in range(2, 6):
        p = symmetric_projector(m).matrix
        ident = max(ident, np.abs(p @ np.kron(symmetric_projector(m - 1).matrix, np.eye(2)) - p).max())
    state_err = prob_err = 0.0
    for m in range(2, 6):
        spec = cloning.CloningSpec(1, m, PureQubit.named("H+iV"))
        steps = cloning.chain_clone(spec)
        direct = cloning.clone_map(spec)
        state_err = max(state_err, steps[-1].output_state.distance(direct.output_state))
        prob_err = max(prob_err, abs(math.prod(s.success_probability for s in steps) - direct.success_probability))
    dt = time.perf_counter() - t0
    ok = ident < 1e-12 and state_err < 1e-10 and prob_err < 1e-10 and dt < 10
    criterion(3, "projector chain identity and sequential cloning", ok,
              f"identity {ident:.1e}, state {state_err:.1e}, probability {prob_err:.1e}, {dt:.2f} s")
    assert ok


def test_4_universality(criterion):
    rng = np.random.default_rng(2024)
    worst_std = worst_spread = 0.0
    for n, m in ((1, 2), (1, 3), (2, 3)):
        fids = []
        for _ in range(1000):
            v = rng.normal(size=2) + 1j * rng.normal(size=2)
            v /= np.linalg.norm(v)
            fids.append(cloning.clone_map(cloning.CloningSpec(n, m, PureQubit(v[0], v[1]))).fidelity)
        worst_std = max(worst_std, float(np.std(fids)))
        named = [cloning.clone_map(cloning.CloningSpec(n, m, PureQubit.named(s))).fidelity for s in TEST_STATES]
        worst_spread = max(worst_spread, max(named) - min(named))
    ok = worst_std < 1e-10 and worst_spread < 1e-12
    criterion(4, "universality over random inputs", ok, f"std {worst_std:.1e}, test-state spread {worst_spread:.1e}")
    assert ok


def test_5_engine_cross_validation(criterion):
    worst_state = worst_prob = 0.0
    for sc in ("clone12", "clone13", "clone23"):
        for label in TEST_STATES:
            chk = engine_check(Setup(sc, PureQubit.named(label), CoherenceModel()))
            worst_state = max(worst_state, chk["state_distance"])
            worst_prob = max(worst_prob, abs(chk["branch_probability"] - chk["predicted_branch_probability"]))
    ok = worst_state < 1e-10 and worst_prob < 1e-9
    criterion(5, "Fock engine against projector engine", ok,
              f"state {worst_state:.1e}, branch probability {worst_prob:.1e} (bosonic factor m!/n!)")
    assert ok


def test_6_monte_carlo_ratios(criterion, ideal_runs):
    res, elapsed = ideal_runs
    m12, m23, m13 = res["clone12"]["mc"], res["clone23"]["mc"], res["clone13"]["mc"]
    mg = res["gamma_calibration"]["mc"]
    checks = [
        ("R12", m12.r_simple, m12.stderr["r_simple"], 2.0),
        ("Gamma", mg.gamma, mg.stderr["gamma"], 2.0),
        ("R23", m23.r_simple, m23.stderr["r_simple"], 3.0),
        ("r1", m13.r1, m13.stderr["r1"], 3.0),
        ("r2", m13.r2, m13.stderr["r2"], 2.0),
    ]
    mc_ok = all(within_sigma(v, e, t) for _, v, e, t in checks)
    fids = [
        (res["clone12"]["exact"].fidelity_from_ratios, 5 / 6),
        (res["clone13"]["exact"].fidelity_from_ratios, 7 / 9),
        (res["clone23"]["exact"].fidelity_from_ratios, 11 / 12),
    ]
    f_ok = all(abs(a - b) <= 0.005 for a, b in fids)
    ok = mc_ok and f_ok and elapsed < 60
    detail = ", ".join(f"{k} {v:.3f}+-{e:.3f}" for k, v, e, _ in checks)
    criterion(6, f"enhancement ratios from {SHOTS} shots", ok,
              f"{detail}; exact F {', '.join(f'{a:.4f}' for a, _ in fids)}; {elapsed:.1f} s")
    assert ok


def test_7_distinguishable_baseline(criterion):
    model = CoherenceModel(spdc_visibility=0.0, cross_visibility=0.0)
    res = run_ratios(model, SHOTS, SEED, H)
    s = Setup("clone13", H, model)
    counts, _ = component_counts(s.counts(0.0, 0.0, SHOTS, SEED, stream_key("clone13", 3)))
    comps = ("all_phi", "two_phi_one_perp", "one_phi_two_perp")
    factors = (acceptance_factor(3, 0), acceptance_factor(2, 1), acceptance_factor(1, 2))
    pops = [counts[c] / f for c, f in zip(comps, factors)]
    ratios = [p / pops[0] for p in pops]
    errs = [r * math.sqrt(1 / counts[c] + 1 / counts["all_phi"]) for r, c in zip(ratios, comps)]
    pops_ok = all(within_sigma(r, e, t) for r, e, t in zip(ratios, errs, (1, 2, 1)))
    enh = [
        (res["clone12"]["mc"].r_simple, res["clone12"]["mc"].stderr["r_simple"]),
        (res["clone23"]["mc"].r_simple, res["clone23"]["mc"].stderr["r_simple"]),
        (res["gamma_calibration"]["mc"].gamma, res["gamma_calibration"]["mc"].stderr["gamma"]),
        (res["clone13"]["mc"].r1, res["clone13"]["mc"].stderr["r1"]),
        (res["clone13"]["mc"].r2, res["clone13"]["mc"].stderr["r2"]),
    ]
    enh_ok = all(within_sigma(v, e, 1.0) for v, e in enh)
    ok = pops_ok and enh_ok
    criterion(7, "distinguishable photons", ok,
              "populations " + ":".join(f"{r:.3f}" for r in ratios) + "; ratios " + ", ".join(f"{v:.3f}" for v, _ in enh))
    assert ok


def test_8_partial_overlap(criterion):
    vis = math.sqrt(0.66)
    model = CoherenceModel(cross_visibility=vis)
    # two-photon oracle: one down-conversion photon against one laser photon
    two = run_circuit(
        [SourceSpec.pure(H), SourceSpec.pure(H, origin="laser")], model, "clone12"
    )
    bunched = polarization_state(two, K_2, 2).weight
    oracle = bunched / 0.25
    res = run_ratios(model, SHOTS, SEED, H)
    g = res["gamma_calibration"]
    v, e = g["mc"].gamma, g["mc"].stderr["gamma"]
    ok = abs(oracle - 1.66) < 1e-12 and abs(g["exact"].gamma - 1.66) < 1e-9 and within_sigma(v, e, 1.66)
    criterion(8, "partial overlap gives Gamma 1.66", ok,
              f"two-photon oracle {oracle:.6f}, circuit exact {g['exact'].gamma:.6f}, MC {v:.4f}+-{e:.4f}")
    assert ok
    assert two.number_distribution([K_1, K_2])[(0, 2)] == pytest.approx(bunched)


def test_9_spurious_events(criterion):
    grid = spurious_study(mus=(0.0, 0.05, 0.1, 0.15, 0.2), epss=(0.0, 0.01, 0.02, 0.05))
    r = {(g["mu"], g["eps"]): g["r23"] for g in grid}
    mus = sorted({k[0] for k in r})
    epss = sorted({k[1] for k in r})
    mono_eps = all(r[(mu, a)] > r[(mu, b)] for mu in mus for a, b in zip(epss, epss[1:]))
    mono_mu = all(r[(a, 0.0)] > r[(b, 0.0)] for a, b in zip(mus, mus[1:]))
    ideal = abs(r[(0.0, 0.0)] - 3) < 1e-9
    hits = [(g["mu"], g["eps"], g["reduction"]) for g in grid if 0.10 <= g["reduction"] <= 0.20]
    ok = mono_eps and mono_mu and ideal and bool(hits)
    criterion(9, "spurious-event reduction of R23", ok,
              f"monotone in eps {mono_eps}, in mu {mono_mu}; {len(hits)} points in 10-20%, e.g. "
              + ", ".join(f"mu={a:g} eps={b:g}: {c:.1%}" for a, b, c in hits[:3]))
    assert ok


def test_10_determinism_and_csv(criterion, tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"run{i}.csv"
        proc = subprocess.run(
            [sys.executable, "-m", "symclone.cli", "reproduce", "--shots", str(SHOTS), "--seed", str(SEED),
             "--out", str(path)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr + proc.stdout
        outs.append(path.read_bytes())
    identical = outs[0] == outs[1] and len(outs[0]) > 0
    rows = read_csv(tmp_path / "run0.csv")
    round_trip = csv_text(rows).encode() == outs[0]
    ok = identical and round_trip
    criterion(10, "byte-identical reruns and CSV round trip", ok,
              f"identical {identical}, round trip {round_trip}, {len(rows)} rows")
    assert ok
