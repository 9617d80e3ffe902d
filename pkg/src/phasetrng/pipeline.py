"""Stage functions shared by the command line and the acceptance suite.

Every stage works on files in the interchange formats of :mod:`phasetrng.ingest`
and streams its input, so runs of 1e8+ samples fit in a few hundred MB.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
from pathlib import Path
from typing import Optional

import numpy as np

from . import spectral
from .battery import Criteria, run_battery
from .conditioning import DEFAULT_LSB, StreamConditioner
from .entropy import block_entropy, entropy_report, histogram
from .errors import ConfigError, TrngError
from .ingest import BitStream, iter_samples, meta_path, read_bits
from .phase_sim import SimConfig, iter_sample_blocks

REPORT_SCHEMA_VERSION = 1

# Required conditioning rate in MB/s of input bytes (300 Mbit/s written in bytes).
TARGET_CONDITIONING_MBPS = 37.5
# Output bits per input byte with XOR pairing and 6-LSB extraction: 6 of 16.
OUTPUT_BITS_PER_INPUT_BYTE = 6 / 2

# Longest prefix used for FFT-based analyses (autocorrelation, PSD).
DEFAULT_ANALYSIS_WINDOW = 1 << 20

_INT_FIELDS = {"n_samples", "oversample_factor", "seed"}


def _parse_int(text: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        number = float(text)  # accepts 1e6-style counts
        if not number.is_integer():
            raise
        return int(number)


def parse_config(text: str, source: str = "<config>") -> SimConfig:
    """Parse flat ``key = value`` text (``#`` comments) into a :class:`SimConfig`.

    Keys are the ``SimConfig`` field names; omitted keys keep their defaults.
    """
    fields = {f.name for f in dataclasses.fields(SimConfig)}
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        if key not in fields:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            if key in _INT_FIELDS:
                values[key] = _parse_int(value)
            else:
                values[key] = float(value)
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: {key}: cannot parse {value!r}") from None
    try:
        return SimConfig(**values)
    except TrngError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> SimConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(exc.errno, f"cannot read {path}: {exc.strerror}") from exc
    return parse_config(text, str(path))


def format_config(config: SimConfig) -> str:
    lines = [f"{f.name} = {getattr(config, f.name)!r}" for f in dataclasses.fields(SimConfig)]
    return "\n".join(lines) + "\n"


def config_summary(config: SimConfig) -> dict:
    out = dataclasses.asdict(config)
    out["coherence_time_ns"] = config.coherence_time_s * 1e9
    out["internal_step_ns"] = config.step_s * 1e9
    out["delay_steps"] = config.delay_steps
    out["phase_step_variance_rad2"] = config.phase_step_variance
    return out


def simulate_to_file(config: SimConfig, path) -> dict:
    """Stream the simulated ADC samples of ``config`` into a headerless file."""
    written = 0
    try:
        with open(path, "wb") as fh:
            for block in iter_sample_blocks(config):
                fh.write(block.samples.tobytes())
                written += len(block)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc
    return {"path": str(path), "n_samples": written, **config_summary(config)}


def condition_file(src, dst, m: int = DEFAULT_LSB, xor: bool = True) -> dict:
    """XOR (optional), m-LSB extraction and repacking of a sample file into a bitstream file."""
    conditioner = StreamConditioner(m, xor)
    busy = 0.0
    try:
        out = open(dst, "wb")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {dst}: {exc.strerror}") from exc
    with out:
        for block in iter_samples(src):
            t0 = time.perf_counter()
            chunk = conditioner.feed(block)
            busy += time.perf_counter() - t0
            out.write(chunk.tobytes())
        out.write(conditioner.finish().tobytes())
    if conditioner.bytes_in == 0:
        raise TrngError(f"{src}: no samples to condition")
    meta_path(dst).write_text(f"length_bits={8 * conditioner.bytes_out}\n")
    return {
        "input": str(src),
        "output": str(dst),
        "xor": xor,
        "lsb": m,
        "bytes_in": conditioner.bytes_in,
        "bytes_out": conditioner.bytes_out,
        "length_bits": 8 * conditioner.bytes_out,
        "seconds": busy,
    }


def throughput(bytes_in: int, seconds: float) -> dict:
    """Conditioning rate; ``output_Mbps`` assumes XOR pairing with 6-LSB extraction."""
    rate = bytes_in / seconds / 1e6 if seconds > 0 else math.inf
    return {
        "conditioning_MBps": rate,
        "output_Mbps": rate * OUTPUT_BITS_PER_INPUT_BYTE,
        "target_MBps": TARGET_CONDITIONING_MBPS,
        "meets_target": rate >= TARGET_CONDITIONING_MBPS,
    }


def _section(fn):
    try:
        return fn()
    except TrngError as exc:
        return {"error": str(exc)}


def analyze(
    data: np.ndarray,
    signed: bool,
    entropy: bool = True,
    autocorr_lag: Optional[int] = None,
    psd_segment: Optional[int] = None,
    block_entropy_max: Optional[int] = None,
    length_bits: Optional[int] = None,
    window: int = DEFAULT_ANALYSIS_WINDOW,
    sample_rate_hz: float = 1.0,
    plot_dir=None,
    prefix: str = "",
) -> dict:
    """Requested analyses of a byte buffer; failures are reported per section.

    ``length_bits`` restricts the bit-level analyses to a stream whose last
    byte is only partly used.  FFT-based sections look at the first
    ``window`` values only.
    """
    raw = np.asarray(data).reshape(-1).view(np.uint8)
    values = raw.view(np.int8) if signed else raw
    report: dict = {"n_bytes": int(len(raw)), "signed": signed}
    plot_dir = Path(plot_dir) if plot_dir is not None else None

    if entropy:
        def entropy_section():
            h = histogram(values, signed=signed)
            return {**entropy_report(h).to_dict(), "histogram": h.to_dict()}

        report["entropy"] = _section(entropy_section)

    if autocorr_lag is not None:
        def autocorr_section():
            ac = spectral.autocorr_wk(values[:window], autocorr_lag)
            if plot_dir is not None:
                lags_s = ac.lags / sample_rate_hz
                spectral.write_columns(plot_dir / f"{prefix}autocorr.txt", lags_s, ac.values)
            tail = np.abs(ac.values[1:])
            return {
                "max_lag": autocorr_lag,
                "samples_used": int(min(window, len(values))),
                "values": ac.values.tolist(),
                "max_abs_nonzero_lag": float(tail.max()) if len(tail) else 0.0,
            }

        report["autocorr"] = _section(autocorr_section)

    if psd_segment is not None:
        def psd_section():
            p = spectral.psd_welch(values[:window], psd_segment, "hann", sample_rate_hz)
            if plot_dir is not None:
                spectral.write_columns(plot_dir / f"{prefix}psd.txt", p.frequencies, p.power)
            return {
                "segment_length": p.segment_length,
                "segments": p.n_segments,
                "window": p.window,
                "total_power": p.total_power(),
            }

        report["psd"] = _section(psd_section)

    if block_entropy_max is not None:
        def block_section():
            nbits = 8 * len(raw) if length_bits is None else length_bits
            bits = BitStream(raw[: -(-nbits // 8)], nbits)
            curve = []
            for m in range(1, block_entropy_max + 1):
                h, ratio = block_entropy(bits, m)
                curve.append({"m": m, "H": h, "H_over_m": ratio})
            if plot_dir is not None:
                spectral.write_columns(
                    plot_dir / f"{prefix}block_entropy.txt",
                    [c["m"] for c in curve],
                    [c["H_over_m"] for c in curve],
                )
            return curve

        report["block_entropy"] = _section(block_section)
    return report


def entropy_digest(section: dict) -> dict:
    ent = section.get("entropy", {})
    keys = ("shannon_bits_per_byte", "min_entropy_bits_per_byte", "gaussian_fit_sigma", "gaussian_fit_entropy")
    return {k: ent.get(k) for k in keys}


def run_pipeline(
    config: SimConfig,
    out_dir,
    m: int = DEFAULT_LSB,
    xor: bool = True,
    autocorr_lag: int = 100,
    psd_segment: int = 1024,
    block_entropy_max: int = 16,
    mode: str = "single",
    k: Optional[int] = None,
    L: Optional[int] = None,
    criteria: Optional[Criteria] = None,
) -> dict:
    """simulate -> condition -> analyze (raw and conditioned) -> test, writing all artifacts."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    samples_path = out_dir / "samples.bin"
    bits_path = out_dir / "bits.bin"

    sim = simulate_to_file(config, samples_path)
    cond = condition_file(samples_path, bits_path, m, xor)

    raw = np.fromfile(samples_path, dtype=np.uint8)
    pre = analyze(
        raw, True, autocorr_lag=autocorr_lag, psd_segment=psd_segment,
        block_entropy_max=block_entropy_max, sample_rate_hz=config.sample_rate_hz,
        plot_dir=out_dir, prefix="raw_",
    )
    del raw
    stream = read_bits(bits_path)
    post = analyze(
        stream.packed, False, autocorr_lag=autocorr_lag, psd_segment=psd_segment,
        block_entropy_max=block_entropy_max, length_bits=stream.length_bits,
        plot_dir=out_dir, prefix="conditioned_",
    )
    battery = run_battery(stream, mode=mode, criteria=criteria, k=k, L=L)

    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "command": "pipeline",
        "simulate": sim,
        "condition": {key: v for key, v in cond.items() if key != "seconds"},
        "pre_extraction": pre,
        "post_extraction": post,
        "entropy_comparison": {"pre": entropy_digest(pre), "post": entropy_digest(post)},
        "battery": battery.to_dict(),
        "throughput": throughput(cond["bytes_in"], cond["seconds"]),
        "pass": battery.passed,
    }
    write_json(out_dir / "report.json", report)
    return report


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _finite(obj):
    # Strict JSON has no NaN/Infinity.
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def to_json(obj) -> str:
    return json.dumps(_finite(obj), indent=2, default=_json_default, allow_nan=False)


def write_json(path, obj) -> None:
    try:
        Path(path).write_text(to_json(obj) + "\n")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc
