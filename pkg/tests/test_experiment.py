import math

import pytest

from symclone.algebra import PureQubit
from symclone.experiment import (
    CSV_HEADER,
    ConfigError,
    ExperimentConfig,
    ResultRow,
    Setup,
    apply_overrides,
    csv_text,
    emit_csv,
    load_config,
    parse_length,
    read_csv,
    run,
    rows_for,
    scan_summary,
)
from symclone.detection import CoincidenceRecord
from symclone.fock import CoherenceModel

H = PureQubit.named("H")


class TestConfig:
    def test_parse_length(self):
        assert parse_length("12.5") == 12.5
        assert parse_length("-300, 300, 31") == (-300.0, 300.0, 31)
        with pytest.raises(ValueError):
            parse_length("1,2")

    def test_load_with_comments(self):
        cfg = load_config("scenario = clone23  # two inputs\nshots = 5000\nz_b_um = -50,50,5\n")
        assert cfg.scenario == "clone23"
        assert cfg.shots == 5000
        assert cfg.z_b_um == (-50.0, 50.0, 5)
        assert cfg.mu == 0.05

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as e:
            load_config("temperature = 4\n")
        assert e.value.key == "temperature"

    def test_bad_value(self):
        with pytest.raises(ConfigError) as e:
            load_config("shots = many\n")
        assert e.value.key == "shots"

    def test_malformed(self):
        with pytest.raises(ConfigError):
            load_config("just words\n")

    @pytest.mark.parametrize(
        "key,value",
        [("scenario", "clone99"), ("input_state", "D"), ("mu", -1.0), ("double_pair_eps", 2.0),
         ("shots", 0), ("tau_coh_fs", 0.0), ("z_a_um", (0.0, 1.0, 1)), ("cross_visibility", 1.5)],
    )
    def test_validation(self, key, value):
        cfg = apply_overrides(ExperimentConfig(), {key: value})
        with pytest.raises(ConfigError) as e:
            cfg.validate()
        assert e.value.key == key

    def test_analytic_needs_n_le_m(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(scenario="nm_analytic", n=4, m=3).validate()

    def test_dump_round_trip(self):
        cfg = ExperimentConfig(scenario="clone12", z_a_um=(-100.0, 100.0, 11), seed=3, input_state="H+iV")
        back = load_config(cfg.dump())
        assert back == cfg

    def test_grid(self):
        cfg = ExperimentConfig(z_a_um=(-1.0, 1.0, 3), z_b_um=5.0)
        assert cfg.grid() == [(-1.0, 5.0), (0.0, 5.0), (1.0, 5.0)]

    def test_bloch_input(self):
        cfg = ExperimentConfig(input_state="1.0,0.5").validate()
        assert cfg.input_state == "1.0,0.5"


def row(za, comp, p=0.1, n=10):
    return ResultRow(za, 0.0, comp, p, n, n / 100, 0.03, "ok")


class TestCsv:
    def test_header_only(self, tmp_path):
        path = tmp_path / "e.csv"
        emit_csv([], path)
        assert path.read_text() == ",".join(CSV_HEADER) + "\n"
        assert read_csv(path) == []

    def test_single_row_formatting(self):
        text = csv_text([ResultRow(1 / 3, 0.0, "all_phi", 2 / 3, 7, 0.07, math.sqrt(2), "ok")])
        line = text.splitlines()[1]
        assert line == "0.333333333,0,all_phi,0.666666667,7,0.07,1.41421356,ok"

    def test_sorted(self):
        text = csv_text([row(5.0, "b"), row(-5.0, "z"), row(5.0, "a")])
        keys = [tuple(line.split(",")[:3]) for line in text.splitlines()[1:]]
        assert keys == [("-5", "0", "z"), ("5", "0", "a"), ("5", "0", "b")]

    def test_round_trip(self, tmp_path):
        rows = [row(float(i), c, p=0.1 * i) for i in range(3) for c in ("all_phi", "one_phi_two_perp")]
        path = tmp_path / "r.csv"
        emit_csv(rows, path)
        back = read_csv(path)
        assert csv_text(back) == path.read_text()

    def test_bad_header(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            read_csv(p)

    def test_rows_status(self):
        recs = [CoincidenceRecord("phi_phi", frozenset(), 250, (0.0, 0.0), 1000)]
        exact = {"phi_phi": 0.25, "phi_perp": 0.0, "reject": 0.75}
        rows = {r.component: r for r in rows_for(0.0, 0.0, exact, recs)}
        assert rows["phi_phi"].status == "ok"
        assert rows["phi_perp"].mc_count == 0
        bad = rows_for(0.0, 0.0, {"phi_phi": 0.05, "reject": 0.95}, recs)
        assert bad[0].status == "flag"


class TestScenarios:
    def test_scan_symmetric(self):
        s = Setup("clone13", H, CoherenceModel())
        for z in (30.0, 90.0, 200.0):
            a, b = s.probabilities(z, 0.0), s.probabilities(-z, 0.0)
            assert all(a[k] == pytest.approx(b[k], abs=1e-14) for k in a)

    def test_z_a_far_leaves_only_gamma(self):
        # S distinguishable: A and B still bunch, so phi-phi-pair components carry Gamma = 2
        model = CoherenceModel()
        s = Setup("clone13", H, model)
        dist = Setup("clone13", H, CoherenceModel(spdc_visibility=0.0, cross_visibility=0.0))
        off, ref = s.probabilities(*s.off_setting()), dist.probabilities(*s.off_setting())
        assert off["all_phi"] / ref["all_phi"] == pytest.approx(2)
        assert off["two_phi_one_perp"] / ref["two_phi_one_perp"] == pytest.approx(1)
        assert off["one_phi_two_perp"] / ref["one_phi_two_perp"] == pytest.approx(2)

    def test_clone13_scan_peak(self):
        cfg = ExperimentConfig(scenario="clone13", z_a_um=(-300.0, 300.0, 31), mu=0.0, shots=20_000, seed=1)
        res = run(cfg, with_reference=False)
        peak = res.summary["scan"]["all_phi"]
        assert peak["peak_z_a_um"] == 0.0
        assert peak["peak_over_baseline_exact"] == pytest.approx(3, rel=0.01)
        assert len(res.rows) == 31 * 3

    def test_ideal_exact_ratios(self):
        cfg = ExperimentConfig(scenario="clone23", mu=0.0, shots=50_000, seed=2)
        s = run(cfg).summary
        assert s["ratios_exact"]["r_simple"] == pytest.approx(3)
        assert s["ratios_exact"]["fidelity_from_ratios"] == pytest.approx(11 / 12)
        assert s["engines_agree"]

    def test_analytic(self):
        s = run(ExperimentConfig(scenario="nm_analytic", n=2, m=3)).summary
        assert s["fidelity"] == pytest.approx(11 / 12)
        assert s["success_probability"] == pytest.approx(2 / 3)
        assert s["exact_fidelity"] == pytest.approx(11 / 12)

    def test_gamma_calibration(self):
        s = run(ExperimentConfig(scenario="gamma_calibration", mu=0.0, shots=50_000)).summary
        assert s["ratios_exact"]["gamma"] == pytest.approx(2)

    def test_coherent_b_arm_lowers_r23(self):
        ideal = Setup("clone23", H, CoherenceModel())
        weak = Setup("clone23", H, CoherenceModel(), mu=0.1)
        r = []
        for s in (ideal, weak):
            on, off = s.probabilities(*s.on_setting()), s.probabilities(*s.off_setting())
            r.append(on["all_phi"] / off["all_phi"])
        assert r[0] == pytest.approx(3)
        assert r[1] < r[0]

    def test_scan_summary_constant(self):
        rows = [row(z, "all_phi", p=0.2, n=20) for z in (-1.0, 0.0, 1.0)]
        s = scan_summary(rows)["all_phi"]
        assert s["peak_over_baseline_exact"] == pytest.approx(1)
