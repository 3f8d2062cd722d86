"""Command-line interface.

Subcommands: simulate, sweep, g2map, calibrate, uniformity, report.
Exit codes: 0 success, 1 usage or configuration error, 2 data error.

Run configs are INI files (sections [geometry], [source], [detector],
[noise], [filters], [analysis]); every key has a default, unknown keys are
rejected, and the fully resolved config is echoed next to each command's
output so any result can be reproduced byte-for-byte.  All randomness comes
from the config seed: rerunning a command reproduces its outputs exactly,
for any worker count.

Floating-point values in CSV outputs are formatted with %.6g; undefined
values print as nan, infinite ratios as inf.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import calib, pipeline
from .core import (
    CameraGeometry,
    OpticalChannel,
    Region,
    WavelengthBand,
    conjugate_wavelength,
)
from .sim import SimConfig, shutter_variant
from .threshold import BaselineMap
from .framefile import FrameFile

__all__ = ["main"]


class UsageError(Exception):
    """Bad arguments or configuration: exit code 1."""


class DataError(Exception):
    """Bad or insufficient input data: exit code 2."""


# --------------------------------------------------------------------------
# run configuration
# --------------------------------------------------------------------------

_DEFAULTS: dict[str, dict[str, str]] = {
    "geometry": {
        "width": "64",
        "height": "64",
        "binning": "8",
        "beam_center_x": "",     # empty: width / 2
        "beam_center_y": "",     # empty: height / 2
    },
    "source": {
        "pump": "on",
        "pair_rate": "3.0",
        "lambda_pump_nm": "405.0",
        "spdc_center_nm": "810.0",
        "spdc_fwhm_nm": "100.0",
        "beam_sigma_px": "10.0",
        "jitter_sigma_px": "1.0",
    },
    "detector": {
        "qe_table": "700:0.2, 900:0.2",
        "signal_amp_mean_adu": "180.0",
        "splat_sigma_px": "0.8",
        "mcp_gain": "100",
        "qe_defects": "",
    },
    "noise": {
        "dark_event_rate": "0.003",
        "stray_event_rate": "5e-05",
        "noise_amp_mean_adu": "20.0",
        "baseline_min_adu": "600.0",
        "baseline_max_adu": "650.0",
        "readout_noise_sigma_adu": "2.0",
    },
    "filters": {
        "channel": "optics:0.88",
        "filter_1": "0,0,32x64 @ 830/10/0.95",
        "filter_2": "32,0,32x64 @ 800/40/0.95",
    },
    "analysis": {
        "seed": "12345",
        "frames": "100000",
        "noise_frames": "",      # empty: same as frames
        "thresholds": "45:125:5",
        "ref_region": "",
        "dut_region": "auto",
        "anchor_threshold": "100",
        "lag": "1",
        "bootstrap_blocks": "100",
        "bootstrap_resamples": "200",
        "g2_min": "2.0",
        "g2_threshold": "80",
        "halo_px": "6",
        "margin_px": "4",
        "workers": "1",
        "batch_frames": "1024",
    },
}


def parse_thresholds(text: str) -> tuple[int, ...]:
    """'a:b:step' (a inclusive, b exclusive), 'a,b,c', or a single integer."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            a, b, step = parts
            if step < 1 or b <= a:
                raise ValueError
            return tuple(range(a, b, step))
        if "," in text:
            return tuple(int(p) for p in text.split(","))
        return (int(text),)
    except ValueError:
        raise UsageError(f"malformed threshold spec {text!r}, expected 'a:b:step'") from None


def _parse_pairs(text: str, what: str) -> list[tuple[str, str]]:
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" not in item:
            raise UsageError(f"malformed {what} entry {item!r}, expected 'key:value'")
        k, v = item.split(":", 1)
        out.append((k.strip(), v.strip()))
    return out


def _parse_filter(text: str) -> tuple[Region, WavelengthBand]:
    try:
        region_part, band_part = text.split("@")
        region = Region.parse(region_part)
        center, fwhm, trans = (float(p) for p in band_part.strip().split("/"))
        return region, WavelengthBand(center=center, fwhm=fwhm, transmission=trans)
    except (ValueError, IndexError) as exc:
        raise UsageError(
            f"malformed filter {text!r}, expected 'x0,y0,WxH @ center/fwhm/transmission'") from exc


def _parse_defects(text: str) -> tuple[tuple[int, int, float], ...]:
    out = []
    for item in text.split(";"):
        item = item.strip()
        if not item:
            continue
        try:
            pos, scale = item.split(":")
            x, y = (int(p) for p in pos.split(","))
            out.append((x, y, float(scale)))
        except ValueError as exc:
            raise UsageError(f"malformed qe defect {item!r}, expected 'x,y:scale'") from exc
    return tuple(out)


@dataclass
class RunSettings:
    """Everything an analysis run needs, resolved from INI plus overrides."""

    width: int
    height: int
    binning: int
    beam_center: tuple[float, float]
    pump: bool
    pair_rate: float
    lambda_pump: float
    spdc_center: float
    spdc_fwhm: float
    beam_sigma: float
    jitter_sigma: float
    qe_table: tuple[tuple[float, float], ...]
    signal_amp_mean: float
    splat_sigma: float
    mcp_gain: int
    qe_defects: tuple[tuple[int, int, float], ...]
    dark_event_rate: float
    stray_event_rate: float
    noise_amp_mean: float
    baseline_range: tuple[float, float]
    readout_noise_sigma: float
    channel: tuple[tuple[str, float], ...]
    filters: tuple[tuple[Region, WavelengthBand], ...]
    seed: int
    frames: int
    noise_frames: int
    thresholds: tuple[int, ...]
    ref_region: Region | None
    dut_region: str
    anchor_threshold: int
    lag: int
    bootstrap_blocks: int
    bootstrap_resamples: int
    g2_min: float
    g2_threshold: int
    halo: int
    margin: int
    workers: int
    batch_frames: int

    def geometry(self) -> CameraGeometry:
        return CameraGeometry(width=self.width, height=self.height,
                              binning=self.binning, beam_center=self.beam_center)

    def optical_channel(self) -> OpticalChannel:
        return OpticalChannel(elements=self.channel)

    def sim_config(self) -> SimConfig:
        return SimConfig(
            geometry=self.geometry(),
            pair_rate=self.pair_rate,
            pump_on=self.pump,
            lambda_pump=self.lambda_pump,
            spdc_band=WavelengthBand(center=self.spdc_center, fwhm=self.spdc_fwhm),
            true_qe=self.qe_table,
            channel=self.optical_channel(),
            filters=self.filters,
            corr_jitter_sigma=self.jitter_sigma,
            beam_profile_sigma=self.beam_sigma,
            signal_amp_mean=self.signal_amp_mean,
            noise_amp_mean=self.noise_amp_mean,
            dark_event_rate=self.dark_event_rate,
            splat_sigma=self.splat_sigma,
            baseline_range=self.baseline_range,
            readout_noise_sigma=self.readout_noise_sigma,
            mcp_gain_setting=self.mcp_gain,
            seed=self.seed,
            stray_event_rate=self.stray_event_rate,
            qe_defects=self.qe_defects,
        )


def load_settings(config_path: str | None) -> RunSettings:
    """Parse an INI run config (or pure defaults when no path is given)."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.read_dict(_DEFAULTS)
    if config_path is not None:
        ondisk = configparser.ConfigParser(interpolation=None)
        try:
            with open(config_path) as fh:
                ondisk.read_file(fh)
        except OSError as exc:
            raise UsageError(f"cannot read config {config_path}: {exc}") from exc
        except configparser.Error as exc:
            raise UsageError(f"malformed config {config_path}: {exc}") from exc
        for section in ondisk.sections():
            if section not in _DEFAULTS:
                raise UsageError(f"unknown config section [{section}]")
            for key, value in ondisk.items(section):
                if key not in _DEFAULTS[section] and not (section == "filters" and key.startswith("filter_")):
                    raise UsageError(f"unknown config key {key!r} in section [{section}]")
                parser.set(section, key, value)

    try:
        return _settings_from_parser(parser)
    except UsageError:
        raise
    except ValueError as exc:
        raise UsageError(f"invalid config value: {exc}") from exc


def _settings_from_parser(p: configparser.ConfigParser) -> RunSettings:
    g = p["geometry"]
    width, height = g.getint("width"), g.getint("height")
    bcx = float(g["beam_center_x"]) if g["beam_center_x"].strip() else width / 2.0
    bcy = float(g["beam_center_y"]) if g["beam_center_y"].strip() else height / 2.0

    s = p["source"]
    pump_text = s["pump"].strip().lower()
    if pump_text not in ("on", "off", "true", "false", "1", "0"):
        raise UsageError(f"pump must be on or off, got {s['pump']!r}")

    d = p["detector"]
    qe_table = tuple((float(k), float(v)) for k, v in _parse_pairs(d["qe_table"], "qe_table"))
    if not qe_table:
        raise UsageError("qe_table must not be empty")

    n = p["noise"]
    f = p["filters"]
    channel = tuple((k, float(v)) for k, v in _parse_pairs(f["channel"], "channel"))
    filter_keys = sorted(k for k in f.keys() if k.startswith("filter_"))
    filters = tuple(_parse_filter(f[k]) for k in filter_keys if f[k].strip())

    a = p["analysis"]
    ref_text = a["ref_region"].strip()
    try:
        ref_region = Region.parse(ref_text, label="ref") if ref_text else None
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    dut_text = a["dut_region"].strip() or "auto"
    if dut_text != "auto":
        Region.parse(dut_text)  # validate syntax now
    noise_frames_text = a["noise_frames"].strip()

    return RunSettings(
        width=width, height=height, binning=g.getint("binning"), beam_center=(bcx, bcy),
        pump=pump_text in ("on", "true", "1"),
        pair_rate=s.getfloat("pair_rate"),
        lambda_pump=s.getfloat("lambda_pump_nm"),
        spdc_center=s.getfloat("spdc_center_nm"),
        spdc_fwhm=s.getfloat("spdc_fwhm_nm"),
        beam_sigma=s.getfloat("beam_sigma_px"),
        jitter_sigma=s.getfloat("jitter_sigma_px"),
        qe_table=qe_table,
        signal_amp_mean=d.getfloat("signal_amp_mean_adu"),
        splat_sigma=d.getfloat("splat_sigma_px"),
        mcp_gain=d.getint("mcp_gain"),
        qe_defects=_parse_defects(d["qe_defects"]),
        dark_event_rate=n.getfloat("dark_event_rate"),
        stray_event_rate=n.getfloat("stray_event_rate"),
        noise_amp_mean=n.getfloat("noise_amp_mean_adu"),
        baseline_range=(n.getfloat("baseline_min_adu"), n.getfloat("baseline_max_adu")),
        readout_noise_sigma=n.getfloat("readout_noise_sigma_adu"),
        channel=channel,
        filters=filters,
        seed=a.getint("seed"),
        frames=a.getint("frames"),
        noise_frames=int(noise_frames_text) if noise_frames_text else a.getint("frames"),
        thresholds=parse_thresholds(a["thresholds"]),
        ref_region=ref_region,
        dut_region=dut_text,
        anchor_threshold=a.getint("anchor_threshold"),
        lag=a.getint("lag"),
        bootstrap_blocks=a.getint("bootstrap_blocks"),
        bootstrap_resamples=a.getint("bootstrap_resamples"),
        g2_min=a.getfloat("g2_min"),
        g2_threshold=a.getint("g2_threshold"),
        halo=a.getint("halo_px"),
        margin=a.getint("margin_px"),
        workers=a.getint("workers"),
        batch_frames=a.getint("batch_frames"),
    )


def settings_to_ini(st: RunSettings) -> str:
    """Resolved settings as INI text; load_settings on it reproduces st."""
    def fmt(v: float) -> str:
        return repr(float(v))

    lines = ["[geometry]",
             f"width = {st.width}", f"height = {st.height}", f"binning = {st.binning}",
             f"beam_center_x = {fmt(st.beam_center[0])}",
             f"beam_center_y = {fmt(st.beam_center[1])}",
             "", "[source]",
             f"pump = {'on' if st.pump else 'off'}",
             f"pair_rate = {fmt(st.pair_rate)}",
             f"lambda_pump_nm = {fmt(st.lambda_pump)}",
             f"spdc_center_nm = {fmt(st.spdc_center)}",
             f"spdc_fwhm_nm = {fmt(st.spdc_fwhm)}",
             f"beam_sigma_px = {fmt(st.beam_sigma)}",
             f"jitter_sigma_px = {fmt(st.jitter_sigma)}",
             "", "[detector]",
             "qe_table = " + ", ".join(f"{fmt(w)}:{fmt(q)}" for w, q in st.qe_table),
             f"signal_amp_mean_adu = {fmt(st.signal_amp_mean)}",
             f"splat_sigma_px = {fmt(st.splat_sigma)}",
             f"mcp_gain = {st.mcp_gain}",
             "qe_defects = " + "; ".join(f"{x},{y}:{fmt(s)}" for x, y, s in st.qe_defects),
             "", "[noise]",
             f"dark_event_rate = {fmt(st.dark_event_rate)}",
             f"stray_event_rate = {fmt(st.stray_event_rate)}",
             f"noise_amp_mean_adu = {fmt(st.noise_amp_mean)}",
             f"baseline_min_adu = {fmt(st.baseline_range[0])}",
             f"baseline_max_adu = {fmt(st.baseline_range[1])}",
             f"readout_noise_sigma_adu = {fmt(st.readout_noise_sigma)}",
             "", "[filters]",
             "channel = " + ", ".join(f"{name}:{fmt(t)}" for name, t in st.channel)]
    for i, (region, band) in enumerate(st.filters, start=1):
        lines.append(f"filter_{i} = {region} @ {fmt(band.center)}/{fmt(band.fwhm)}/{fmt(band.transmission)}")
    lines += ["", "[analysis]",
              f"seed = {st.seed}", f"frames = {st.frames}", f"noise_frames = {st.noise_frames}",
              "thresholds = " + ",".join(str(t) for t in st.thresholds),
              f"ref_region = {st.ref_region if st.ref_region else ''}",
              f"dut_region = {st.dut_region}",
              f"anchor_threshold = {st.anchor_threshold}",
              f"lag = {st.lag}",
              f"bootstrap_blocks = {st.bootstrap_blocks}",
              f"bootstrap_resamples = {st.bootstrap_resamples}",
              f"g2_min = {fmt(st.g2_min)}",
              f"g2_threshold = {st.g2_threshold}",
              f"halo_px = {st.halo}",
              f"margin_px = {st.margin}",
              f"workers = {st.workers}",
              f"batch_frames = {st.batch_frames}",
              ""]
    return "\n".join(lines)


def _echo_settings(st: RunSettings, out_path: Path, stem: str | None = None) -> None:
    """Write the resolved config next to a command's output."""
    if out_path.suffix:
        target = out_path.with_name(out_path.stem + ".resolved.ini")
    elif stem:
        target = out_path / (stem + ".resolved.ini")
    else:
        target = out_path / "resolved.ini"
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(settings_to_ini(st))


# --------------------------------------------------------------------------
# shared helpers
# --------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.6g}"


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _read_csv(path: Path) -> tuple[list[str], list[list[float]]]:
    lines = path.read_text().strip().splitlines()
    if not lines:
        raise DataError(f"{path} is empty")
    header = lines[0].split(",")
    rows = [[float(v) for v in line.split(",")] for line in lines[1:]]
    return header, rows


def _open_source(path: str, st: RunSettings, need_geometry_match: bool = True) -> pipeline.FileSource:
    try:
        src = pipeline.FileSource(path, batch_frames=st.batch_frames, beam_center=st.beam_center)
    except (OSError, ValueError) as exc:
        raise DataError(str(exc)) from exc
    if need_geometry_match and (src.file.width, src.file.height) != (st.width, st.height):
        raise DataError(f"{path} holds {src.file.width}x{src.file.height} frames but the "
                        f"config geometry is {st.width}x{st.height}")
    return src


def _baseline_for(args, st: RunSettings, fallback_path: str | None) -> BaselineMap:
    path = args.baseline or fallback_path
    if path is None:
        raise UsageError("a --baseline file is required here")
    return pipeline.baseline_from_source(_open_source(path, st))


def _region_arg(text: str, label: str) -> Region:
    try:
        return Region.parse(text, label=label)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _auto_dut(signal_source, baseline: BaselineMap, ref: Region, st: RunSettings) -> Region:
    cmap = calib.g2_map_source(signal_source, baseline, st.g2_threshold, ref)
    return calib.find_conjugate_region(cmap, g2_min=st.g2_min, margin=st.margin, halo=st.halo)


def _lambda_for_ref(st: RunSettings, ref: Region) -> float:
    """Wavelength at the test side: conjugate of the filter band covering ref."""
    for region, band in st.filters:
        if region.contains(ref.x0, ref.y0) and region.contains(ref.x1 - 1, ref.y1 - 1):
            return conjugate_wavelength(band.center, st.lambda_pump)
    return float("nan")


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    st = load_settings(args.config)
    if args.frames is not None:
        st.frames = args.frames
    if args.seed is not None:
        st.seed = args.seed
    if args.pump is not None:
        st.pump = args.pump == "on"
    if args.workers is not None:
        st.workers = args.workers
    cfg = st.sim_config()
    if args.shutter:
        cfg = shutter_variant(cfg)
        st.pump = False
        st.dark_event_rate = 0.0
        st.stray_event_rate = 0.0
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    source = pipeline.SimSource(cfg, st.frames, workers=st.workers, batch_frames=st.batch_frames)
    n = pipeline.write_source(source, out, seed=cfg.seed)
    _echo_settings(st, out)
    print(f"wrote {n} frames ({cfg.geometry.width}x{cfg.geometry.height}, "
          f"pump {'on' if cfg.pump_on else 'off'}) to {out}")
    return 0


def cmd_sweep(args) -> int:
    st = load_settings(args.config)
    region = _region_arg(args.region, "sweep")
    thresholds = parse_thresholds(args.thresholds) if args.thresholds else st.thresholds
    signal = _open_source(args.signal, st)
    noise = _open_source(args.noise, st)
    baseline = _baseline_for(args, st, fallback_path=args.noise)
    sig_curve, noi_curve, snr_curve = pipeline.sweep_curves_source(
        signal, noise, baseline, region, thresholds)
    if args.ref:
        ref = _region_arg(args.ref, "ref")
        rel = pipeline.relative_curve_source(signal, baseline, ref, region, thresholds)
        rel_vals = rel.values
    else:
        rel_vals = np.full(len(thresholds), np.nan)
    rows = [[t, sig_curve.values[i], noi_curve.values[i], snr_curve.values[i], rel_vals[i]]
            for i, t in enumerate(thresholds)]
    out = Path(args.out)
    _write_csv(out, ["threshold", "signal_rate", "noise_rate", "snr", "qe_relative_unnormalized"], rows)
    _echo_settings(st, out)
    print(f"wrote sweep over {len(thresholds)} thresholds to {out}")
    return 0


def cmd_g2map(args) -> int:
    st = load_settings(args.config)
    ref = _region_arg(args.ref, "ref")
    source = _open_source(args.infile, st)
    baseline = _baseline_for(args, st, fallback_path=None)
    cmap = calib.g2_map_source(source, baseline, args.threshold, ref)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        for row in cmap.values:
            fh.write(",".join(f"{v:.6g}" for v in row) + "\n")
    _echo_settings(st, out)
    defined = int(np.isfinite(cmap.values).sum())
    print(f"wrote {cmap.geometry.width}x{cmap.geometry.height} correlation grid to {out} "
          f"({defined} defined pixels, reference rate {cmap.ref_rate:.6g})")
    return 0


def cmd_calibrate(args) -> int:
    st = load_settings(args.config)
    ref = _region_arg(args.ref, "ref") if args.ref else st.ref_region
    if ref is None:
        raise UsageError("a reference region is required (--ref or config ref_region)")
    thresholds = parse_thresholds(args.thresholds) if args.thresholds else st.thresholds
    signal = _open_source(args.signal, st)
    noise = _open_source(args.noise, st)
    baseline = _baseline_for(args, st, fallback_path=args.noise)

    dut_text = args.dut or st.dut_region
    if dut_text == "auto":
        dut = _auto_dut(signal, baseline, ref, st)
    else:
        dut = _region_arg(dut_text, "dut")
    channel = OpticalChannel.of_total(args.channel) if args.channel is not None else st.optical_channel()
    lambda_dut = args.lambda_nm if args.lambda_nm is not None else _lambda_for_ref(st, ref)

    results = calib.calibrate_sources(
        signal, noise, baseline, ref, dut, thresholds, channel, lambda_dut,
        lag=st.lag, n_blocks=st.bootstrap_blocks, n_resamples=st.bootstrap_resamples,
        boot_seed=st.seed)

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = [[r.threshold, r.inputs.n_frames, r.inputs.n_ref, r.inputs.dn_noise,
             r.inputs.n_cc, r.inputs.n_acc, r.eta_raw, r.eta_corrected,
             r.sigma_eta, r.sigma_eta_analytic, r.lambda_dut, r.low_signal]
            for r in results]
    _write_csv(outdir / "calibration.csv",
               ["threshold", "n_frames", "n_ref", "dn_noise", "n_cc", "n_acc",
                "eta_raw", "eta_corrected", "sigma_eta", "sigma_eta_analytic",
                "lambda_nm", "low_signal"], rows)

    lines = ["absolute efficiency calibration",
             f"  signal: {args.signal} ({signal.n_frames} frames)",
             f"  noise:  {args.noise} ({noise.n_frames} frames)",
             f"  reference region: {ref}",
             f"  test region:      {dut}" + ("  (located automatically)" if dut_text == "auto" else ""),
             f"  channel transmission: {channel.total_transmission:.6g}",
             ""]
    for r in results:
        flag = "  LOW SIGNAL" if r.low_signal else ""
        lines.append(f"  s_th {r.threshold:4d}: eta = {r.eta_corrected:.6g} "
                     f"+/- {r.sigma_eta:.6g} (raw {r.eta_raw:.6g}){flag}")
    (outdir / "calibration.txt").write_text("\n".join(lines) + "\n")
    _echo_settings(st, outdir, stem="calibrate")
    print("\n".join(lines))
    return 0


def cmd_uniformity(args) -> int:
    st = load_settings(args.config)
    ref = _region_arg(args.ref, "ref")
    signal = _open_source(args.signal, st)
    baseline = _baseline_for(args, st, fallback_path=args.noise)
    noise = _open_source(args.noise, st) if args.noise else None

    spec = args.pixels.strip()
    if spec.startswith("auto"):
        count = int(spec.split(":")[1]) if ":" in spec else 43
        patch = _auto_dut(signal, baseline, ref, st)
        pixel_list = patch.pixels()[:count]
        if len(pixel_list) < count:
            raise DataError(f"located region {patch} holds only {len(pixel_list)} pixels, "
                            f"need {count}")
    else:
        try:
            pixel_list = [tuple(int(v) for v in item.split(",")) for item in spec.split(";") if item.strip()]
        except ValueError as exc:
            raise UsageError(f"malformed pixel list {spec!r}") from exc
        if not pixel_list:
            raise UsageError("empty pixel list")

    results = calib.uniformity_scan(
        signal, baseline, args.threshold, ref, pixel_list,
        noise_frames=noise, lag=st.lag, n_blocks=st.bootstrap_blocks,
        n_resamples=st.bootstrap_resamples, boot_seed=st.seed)
    rows = [[r.x, r.y, r.eta_raw, r.sigma_eta, r.relative_sensitivity,
             r.relative_sigma, r.is_outlier] for r in results]
    out = Path(args.out)
    _write_csv(out, ["x", "y", "eta_raw", "sigma_eta", "relative_sensitivity",
                     "relative_sigma", "is_outlier"], rows)
    _echo_settings(st, out)
    n_out = sum(r.is_outlier for r in results)
    print(f"wrote {len(results)}-pixel uniformity scan to {out} ({n_out} outliers)")
    return 0


def cmd_report(args) -> int:
    rundir = Path(args.dir)
    if not rundir.is_dir():
        raise DataError(f"{rundir} is not a directory")
    sweeps = sorted(rundir.glob("sweep*.csv"))
    sweeps = [p for p in sweeps if not p.name.startswith("report_")]
    calibs = sorted(p for p in rundir.glob("calibration*.csv"))
    unis = sorted(p for p in rundir.glob("uniformity*.csv"))
    missing = [name for name, found in
               (("sweep", sweeps), ("calibration", calibs), ("uniformity", unis)) if not found]
    if len(missing) == 3:
        raise DataError("no analysis products found: missing " + ", ".join(missing))

    sections: list[str] = ["calibration run report", f"  directory: {rundir}", ""]

    cal_rows_all: list[tuple[Path, dict[str, float]]] = []
    for path in calibs:
        header, rows = _read_csv(path)
        for row in rows:
            cal_rows_all.append((path, dict(zip(header, row))))

    if calibs:
        by_threshold = [(path, r) for path, r in cal_rows_all if path == calibs[0]]
        rel_scaled = {}
        anchor = None
        if sweeps:
            sheader, srows = _read_csv(sweeps[0])
            scol = dict(zip(sheader, zip(*srows))) if srows else {}
            rel = dict(zip((int(t) for t in scol.get("threshold", ())),
                           scol.get("qe_relative_unnormalized", ())))
            abs_eta = {int(r["threshold"]): r["eta_corrected"] for _, r in by_threshold}
            common = [t for t in sorted(set(rel) & set(abs_eta))
                      if math.isfinite(rel[t]) and rel[t] > 0 and math.isfinite(abs_eta[t])]
            if common:
                anchor = common[-1]
                scale = abs_eta[anchor] / rel[anchor]
                rel_scaled = {t: v * scale for t, v in rel.items() if math.isfinite(v)}
        rows = [[int(r["threshold"]), r["eta_corrected"], r["sigma_eta"],
                 rel_scaled.get(int(r["threshold"]), float("nan"))]
                for _, r in by_threshold]
        _write_csv(rundir / "report_qe_vs_threshold.csv",
                   ["threshold", "eta_corrected", "sigma_eta", "qe_relative_rescaled"], rows)
        sections.append(f"efficiency vs threshold: {len(rows)} thresholds from {calibs[0].name}")
        if anchor is not None:
            sections.append(f"  relative curve rescaled at threshold {anchor}")
        lo = min(r["eta_corrected"] for _, r in by_threshold)
        hi = max(r["eta_corrected"] for _, r in by_threshold)
        sections.append(f"  eta_corrected spans {lo:.6g} .. {hi:.6g}")
    else:
        sections.append("efficiency vs threshold: MISSING (no calibration*.csv)")
    sections.append("")

    if calibs:
        wave_rows = sorted(
            ([r["lambda_nm"], int(r["threshold"]), r["eta_corrected"], r["sigma_eta"]]
             for _, r in cal_rows_all),
            key=lambda row: (row[0], row[1]))
        _write_csv(rundir / "report_qe_vs_wavelength.csv",
                   ["lambda_nm", "threshold", "eta_corrected", "sigma_eta"], wave_rows)
        lams = sorted({row[0] for row in wave_rows})
        sections.append(f"efficiency vs wavelength: {len(wave_rows)} rows, "
                        f"{len(lams)} wavelength(s) from {len(calibs)} calibration file(s)")
    else:
        sections.append("efficiency vs wavelength: MISSING (no calibration*.csv)")
    sections.append("")

    if unis:
        uni_rows = []
        for path in unis:
            header, rows = _read_csv(path)
            uni_rows.extend(rows)
        _write_csv(rundir / "report_uniformity.csv",
                   ["x", "y", "eta_raw", "sigma_eta", "relative_sensitivity",
                    "relative_sigma", "is_outlier"],
                   uni_rows)
        n_out = sum(int(r[6]) for r in uni_rows)
        sections.append(f"uniformity: {len(uni_rows)} pixels, {n_out} outlier(s)")
    else:
        sections.append("uniformity: MISSING (no uniformity*.csv)")
    sections.append("")

    if missing:
        sections.append("gaps: missing " + ", ".join(missing))
    out = Path(args.out) if args.out else rundir / "report.txt"
    out.write_text("\n".join(sections) + "\n")
    print("\n".join(sections))
    return 0


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="iccdcal",
                     description="Simulate a photon-counting ICCD watching photon pairs "
                                 "and calibrate its absolute efficiency from coincidences.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[], help="render frames to a frame file")
    p.add_argument("--config", help="run config INI")
    p.add_argument("--out", required=True, help="output frame file")
    p.add_argument("--frames", type=int, help="frame count (overrides config)")
    p.add_argument("--pump", choices=["on", "off"], help="pump state (overrides config)")
    p.add_argument("--seed", type=int, help="seed (overrides config)")
    p.add_argument("--shutter", action="store_true",
                   help="baseline frames: pump off, no spurious events")
    p.add_argument("--workers", type=int, help="render processes (overrides config)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="per-pixel click rates and SNR vs threshold")
    p.add_argument("--config", help="run config INI")
    p.add_argument("--signal", required=True, help="pump-on frame file")
    p.add_argument("--noise", required=True, help="pump-off frame file")
    p.add_argument("--region", required=True, help="analysis region 'x0,y0,WxH'")
    p.add_argument("--ref", help="reference region for the relative-qe column")
    p.add_argument("--thresholds", help="threshold spec 'a:b:step' (overrides config)")
    p.add_argument("--baseline", help="dark frame file (default: estimate from --noise)")
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("g2map", help="per-pixel correlation with a reference region")
    p.add_argument("--config", help="run config INI")
    p.add_argument("--in", dest="infile", required=True, help="pump-on frame file")
    p.add_argument("--baseline", required=True, help="dark frame file")
    p.add_argument("--ref", required=True, help="reference region 'x0,y0,WxH'")
    p.add_argument("--threshold", type=int, required=True, help="click threshold (ADU)")
    p.add_argument("--out", required=True, help="output CSV grid (nan = undefined)")
    p.set_defaults(func=cmd_g2map)

    p = sub.add_parser("calibrate", help="absolute efficiency from coincidences")
    p.add_argument("--config", help="run config INI")
    p.add_argument("--signal", required=True, help="pump-on frame file")
    p.add_argument("--noise", required=True, help="pump-off frame file")
    p.add_argument("--ref", help="reference region 'x0,y0,WxH'")
    p.add_argument("--dut", help="test region 'x0,y0,WxH' or 'auto' (default: config)")
    p.add_argument("--thresholds", help="threshold spec (overrides config)")
    p.add_argument("--baseline", help="dark frame file (default: estimate from --noise)")
    p.add_argument("--channel", type=float, help="channel transmission override")
    p.add_argument("--lambda", dest="lambda_nm", type=float,
                   help="wavelength tag for the result (nm)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("uniformity", help="pixel-to-pixel sensitivity scan")
    p.add_argument("--config", help="run config INI")
    p.add_argument("--signal", required=True, help="pump-on frame file")
    p.add_argument("--noise", help="pump-off frame file (optional)")
    p.add_argument("--baseline", help="dark frame file (default: estimate from --noise)")
    p.add_argument("--ref", required=True, help="reference region 'x0,y0,WxH'")
    p.add_argument("--threshold", type=int, required=True, help="click threshold (ADU)")
    p.add_argument("--pixels", default="auto:43",
                   help="'x,y;x,y;...' or 'auto:N' (default auto:43)")
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_uniformity)

    p = sub.add_parser("report", help="assemble analysis products into one report")
    p.add_argument("--dir", required=True, help="directory holding sweep/calibration/uniformity CSVs")
    p.add_argument("--out", help="report text path (default <dir>/report.txt)")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"iccdcal {args.command}: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"iccdcal {args.command}: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"iccdcal {args.command}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"iccdcal {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
