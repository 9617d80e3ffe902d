import json

import numpy as np
import pytest

from phasetrng import pipeline
from phasetrng.battery import ideal_bits
from phasetrng.cli import main
from phasetrng.errors import ConfigError
from phasetrng.ingest import read_bits, write_bits
from phasetrng.phase_sim import SimConfig


def test_simulate_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.bin", tmp_path / "b.bin"
    assert main(["simulate", str(a), "--n-samples", "20000"]) == 0
    out = capsys.readouterr().out
    assert "coherence_time = 2.6526 ns" in out
    assert main(["simulate", str(b), "--n-samples", "20000"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_bytes()) == 20000


def test_simulate_rejects_zero_samples(tmp_path, capsys):
    assert main(["simulate", str(tmp_path / "x.bin"), "--n-samples", "0"]) == 2
    assert "n_samples" in capsys.readouterr().err


def test_simulate_from_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# reference setup, shorter\nn_samples = 1e4\nseed = 5  # fixed\n")
    assert main(["simulate", str(cfg), str(tmp_path / "s.bin")]) == 0
    assert (tmp_path / "s.bin").stat().st_size == 10_000


def test_config_errors():
    with pytest.raises(ConfigError, match="unknown key"):
        pipeline.parse_config("colour = 3")
    with pytest.raises(ConfigError, match=":2:"):
        pipeline.parse_config("seed = 1\nnot a pair")
    with pytest.raises(ConfigError):
        pipeline.parse_config("n_samples = 2.5")
    assert pipeline.parse_config("") == SimConfig()
    assert pipeline.parse_config(pipeline.format_config(SimConfig(seed=3))) == SimConfig(seed=3)


def test_condition_lengths_and_copy(tmp_path, rng):
    src = tmp_path / "s.bin"
    src.write_bytes(rng.integers(0, 256, size=100).astype(np.uint8).tobytes())
    assert main(["condition", str(src), str(tmp_path / "o.bin"), "--xor", "--lsb", "6"]) == 0
    assert (tmp_path / "o.bin").stat().st_size == 37
    assert read_bits(tmp_path / "o.bin").length_bits == 296
    assert main(["condition", str(src), str(tmp_path / "c.bin"), "--no-xor", "--lsb", "8"]) == 0
    assert (tmp_path / "c.bin").read_bytes() == src.read_bytes()


def test_missing_input_is_io_error(tmp_path):
    assert main(["condition", str(tmp_path / "nope.bin"), str(tmp_path / "o.bin")]) == 3
    assert main(["test", str(tmp_path / "nope.bin")]) == 3


def test_analyze_uniform_vector(tmp_path):
    src = tmp_path / "u.bin"
    src.write_bytes(bytes(range(256)) * 4)
    report = tmp_path / "r.json"
    assert main(["analyze", str(src), "--kind", "bits", "--entropy", "--block-entropy", "8",
                 "--report", str(report)]) == 0
    data = json.loads(report.read_text())
    assert data["entropy"]["shannon_bits_per_byte"] == 8.0
    assert data["entropy"]["min_entropy_bits_per_byte"] == 8.0
    assert data["block_entropy"][-1]["H_over_m"] == pytest.approx(1.0)
    assert data["schema_version"] == pipeline.REPORT_SCHEMA_VERSION


def test_analyze_simulated_run_writes_plot_data(tmp_path):
    samples = tmp_path / "s.bin"
    pipeline.simulate_to_file(SimConfig(n_samples=200_000), samples)
    plots = tmp_path / "plots"
    report = tmp_path / "r.json"
    assert main(["analyze", str(samples), "--autocorr", "100", "--psd", "256",
                 "--plot-dir", str(plots), "--report", str(report)]) == 0
    data = json.loads(report.read_text())
    assert abs(data["autocorr"]["values"][1]) < 0.02
    lag_s, r = np.loadtxt(plots / "autocorr.txt", unpack=True)
    assert lag_s[1] == pytest.approx(10e-9) and r[0] == 1.0
    assert (plots / "psd.txt").exists()


def test_test_exit_codes(tmp_path, capsys):
    good = tmp_path / "good.bin"
    write_bits(ideal_bits(1_000_000, seed=1), good)
    assert main(["test", str(good)]) == 0
    zero = tmp_path / "zero.bin"
    zero.write_bytes(bytes(10_000))
    capsys.readouterr()
    assert main(["test", str(zero)]) == 1
    assert "sts_monobit" in capsys.readouterr().out
    assert main(["test", str(good), "--mode", "multi", "--k", "100", "--L", "100000"]) == 2


def test_test_multi_mode_report(tmp_path):
    bits = tmp_path / "b.bin"
    write_bits(ideal_bits(100 * 20_000, seed=2), bits)
    report = tmp_path / "r.json"
    assert main(["test", str(bits), "--mode", "multi", "--k", "100", "--L", "20000",
                 "--report", str(report)]) == 0
    data = json.loads(report.read_text())
    assert data["mode"] == "multi"


def test_external_pvalues(tmp_path):
    ok = tmp_path / "ok.txt"
    ok.write_text("# diehard\nbirthday 0.5 0.4\nranks 0.7\n")
    assert main(["test", "--pvalues", str(ok)]) == 0
    bad = tmp_path / "bad.txt"
    bad.write_text("birthday 0.5\nranks 0.005\n")
    assert main(["test", "--pvalues", str(bad)]) == 1
    garbled = tmp_path / "g.txt"
    garbled.write_text("ranks x\n")
    assert main(["test", "--pvalues", str(garbled)]) == 2


def test_pipeline_equals_manual_composition(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["pipeline", "--out-dir", str(out), "--n-samples", "400000", "--seed", "3"])
    assert code in (0, 1)
    report = json.loads((out / "report.json").read_text())

    manual = tmp_path / "manual"
    manual.mkdir()
    assert main(["simulate", str(manual / "samples.bin"), "--n-samples", "400000", "--seed", "3"]) == 0
    assert main(["condition", str(manual / "samples.bin"), str(manual / "bits.bin")]) == 0
    test_code = main(["test", str(manual / "bits.bin"), "--report", str(manual / "t.json")])

    assert (out / "samples.bin").read_bytes() == (manual / "samples.bin").read_bytes()
    assert (out / "bits.bin").read_bytes() == (manual / "bits.bin").read_bytes()
    assert (out / "bits.bin.meta").read_text() == (manual / "bits.bin.meta").read_text()
    assert json.loads((manual / "t.json").read_text()) == report["battery"]
    assert test_code == code

    pre = report["entropy_comparison"]["pre"]
    post = report["entropy_comparison"]["post"]
    assert 7.0 < pre["shannon_bits_per_byte"] < 7.4
    assert post["shannon_bits_per_byte"] > 7.99
    for name in ("raw_autocorr.txt", "conditioned_psd.txt", "conditioned_block_entropy.txt"):
        assert (out / name).exists()
    assert "seconds" not in report["condition"]


def test_pipeline_seed_changes_data_not_verdict(tmp_path):
    verdicts, samples = [], []
    for seed in (11, 12):
        r = pipeline.run_pipeline(SimConfig(n_samples=1_000_000, seed=seed), tmp_path / str(seed),
                                  block_entropy_max=4)
        verdicts.append(r["pass"])
        samples.append((tmp_path / str(seed) / "samples.bin").read_bytes()[:1000])
    assert samples[0] != samples[1]
    assert verdicts == [True, True]
