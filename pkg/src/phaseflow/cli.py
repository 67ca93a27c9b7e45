"""Command-line interface: analyze recordings, run benchmarks, sweep bands.

Every run writes its resolved configuration as ``run_config.json`` next to
its outputs, and all randomness flows from the single ``--seed`` flag, so any
run can be reproduced bit-exactly.  Output files are written atomically
(temp file, then rename).

Exit codes: 0 on success, 1 for bad input or arguments, 2 for degenerate
data (for example a zero channel).  Errors print one machine-parsable line
``error: <message>`` on stderr.

CSV value orientation: for every method a row (i, j, value) reports flow
*from i to j* as positive.  Phase-slope matrices already use that layout;
Granger matrices are receiver-row oriented internally and are transposed on
emission.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

import phaseflow
from phaseflow.granger import granger_narrow, granger_wide
from phaseflow.psi import Band, band_sweep, jackknife_psi, load_layout, default_layout, net_flux, project_direction, significant
from phaseflow.simulate import run_benchmark
from phaseflow.spectra import DegenerateSpectrumError, SpectralConfig, coherency, cross_spectrum
from phaseflow.timeseries import EpochPlan, epoch, load_record

DIRECTIONS = {"front-back": (0.0, -1.0), "right-left": (-1.0, 0.0)}


def _fmt(x) -> str:
    """Full-precision, round-trippable decimal for CSV cells."""
    return repr(float(x))


@dataclass
class RunConfig:
    """Resolved parameters of one CLI run, serialized alongside its outputs."""

    command: str
    input: str | None = None
    format: str = "csv"
    rate: float | None = None
    channels: int | None = None
    epoch_sec: float = 4.0
    segment_sec: float = 2.0
    overlap: float = 0.5
    demean: bool = True
    band_center: float | None = None
    band_width: float = 5.0
    centers: list[float] = field(default_factory=list)
    fres: float | None = None
    methods: list[str] = field(default_factory=lambda: ["psi"])
    threshold: float = 2.0
    order: int = 10
    layout: str | None = None
    directions: list[str] = field(default_factory=list)
    gammas: list[float] = field(default_factory=list)
    systems: int = 100
    band_mode: str = "wide"
    seed: int = 0
    out: str = "."
    dump_spectra: bool = False
    version: str = phaseflow.__version__


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_csv(path: Path, header: tuple, rows: list[tuple]) -> None:
    lines = [",".join(str(h) for h in header)]
    lines.extend(",".join(str(v) for v in row) for row in rows)
    _atomic_write(path, "\n".join(lines) + "\n")


def _write_json(path: Path, doc: dict) -> None:
    _atomic_write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _parse_floats(text: str) -> list[float]:
    """Comma list ('1,2,3') or range syntax ('2:48:0.5', inclusive end)."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range syntax is start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError(f"range step must be positive, got {step}")
        n = int(round((stop - start) / step))
        values = [start + k * step for k in range(n + 1)]
        return [v for v in values if v <= stop + 1e-9]
    return [float(p) for p in text.split(",") if p.strip()]


def _load_input(cfg: RunConfig):
    if cfg.input is None:
        raise ValueError("--input is required")
    if cfg.rate is None or cfg.rate <= 0:
        raise ValueError("--rate must be a positive sampling rate in Hz")
    if not Path(cfg.input).exists():
        raise FileNotFoundError(f"input file not found: {cfg.input}")
    return load_record(cfg.input, format=cfg.format, sampling_rate=cfg.rate, n_channels=cfg.channels)


def _spectral_setup(cfg: RunConfig, sampling_rate: float) -> tuple[EpochPlan, SpectralConfig]:
    segment_sec = cfg.segment_sec if cfg.fres is None else 1.0 / cfg.fres
    plan = EpochPlan.from_seconds(sampling_rate, cfg.epoch_sec, segment_sec, cfg.overlap)
    config = SpectralConfig(
        segment_len=plan.segment_len,
        overlap_fraction=cfg.overlap,
        demean_segments=cfg.demean,
    )
    return plan, config


def _resolve_layout(cfg: RunConfig, record):
    if not cfg.directions:
        return None
    layout = load_layout(cfg.layout) if cfg.layout else default_layout()
    if len(layout) != record.n_channels:
        raise ValueError(
            f"layout has {len(layout)} sensors but the record has {record.n_channels} channels"
        )
    return layout


def cmd_analyze(cfg: RunConfig) -> int:
    """Pairwise flow, net flux and optional projections for one recording."""
    record = _load_input(cfg)
    plan, config = _spectral_setup(cfg, record.sampling_rate)
    epochs = epoch(record, plan)
    nyquist = record.sampling_rate / 2.0
    df = config.frequency_resolution(record.sampling_rate)
    if cfg.band_center is not None:
        band = Band(cfg.band_center - cfg.band_width / 2.0, cfg.band_center + cfg.band_width / 2.0)
        if band.f_min < df - 1e-9 or band.f_max > nyquist + 1e-9:
            raise ValueError(f"band [{band.f_min}, {band.f_max}] exceeds (0, {nyquist}]")
    else:
        band = Band(0.0, nyquist)

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    layout = _resolve_layout(cfg, record)

    est = jackknife_psi(epochs, config, band)
    sig = significant(est, cfg.threshold)
    n = record.n_channels
    f_center = band.center
    rows = [
        (i, j, _fmt(f_center), _fmt(est.normalized[i, j]), int(sig[i, j]))
        for i in range(n)
        for j in range(n)
        if i != j
    ]
    _write_csv(out / "psi_pairs.csv", ("i", "j", "f_center", "psi_norm", "significant"), rows)

    flux = net_flux(est)
    _write_csv(
        out / "net_flux.csv",
        ("channel", "f_center", "psi_net"),
        [(i, _fmt(f_center), _fmt(flux.values[i])) for i in range(n)],
    )

    if "granger" in cfg.methods:
        grows = []
        gwide = granger_wide(epochs, cfg.order)
        gsig = np.abs(gwide.normalized) > cfg.threshold
        for i in range(n):
            for j in range(n):
                if i != j:
                    # transpose: emitted value is flow i -> j
                    grows.append(
                        ("granger_wide", i, j, _fmt(f_center), _fmt(gwide.normalized[j, i]), int(gsig[j, i]))
                    )
        if cfg.band_center is not None:
            gnarrow = granger_narrow(epochs, cfg.order, band, df)
            nsig = np.abs(gnarrow.normalized) > cfg.threshold
            for i in range(n):
                for j in range(n):
                    if i != j:
                        grows.append(
                            ("granger_narrow", i, j, _fmt(f_center), _fmt(gnarrow.normalized[j, i]), int(nsig[j, i]))
                        )
        _write_csv(
            out / "granger_pairs.csv",
            ("method", "i", "j", "f_center", "value_norm", "significant"),
            grows,
        )

    if layout is not None:
        prows = []
        for name in cfg.directions:
            proj = project_direction(est, layout, np.asarray(DIRECTIONS[name]))
            prows.extend(
                (name, i, j, _fmt(f_center), _fmt(proj[i, j]))
                for i in range(n)
                for j in range(n)
                if i != j
            )
        _write_csv(out / "projections.csv", ("direction", "i", "j", "f_center", "contribution"), prows)

    if cfg.dump_spectra:
        cs = cross_spectrum(epochs, config)
        _write_json(
            out / "spectra.json",
            {"cross_spectrum": cs.to_json_dict(), "coherency": coherency(cs).to_json_dict()},
        )

    _write_json(out / "run_config.json", asdict(cfg))
    return 0


def cmd_benchmark(cfg: RunConfig) -> int:
    """Detection-rate benchmark over random coupled systems."""
    if not cfg.gammas:
        raise ValueError("--gammas must list at least one noise level")
    if cfg.systems < 1:
        raise ValueError(f"--systems must be >= 1, got {cfg.systems}")
    methods = tuple(m for m in cfg.methods if m in ("psi", "granger"))
    if not methods:
        raise ValueError("--methods must include psi and/or granger")
    result = run_benchmark(
        gamma_grid=cfg.gammas,
        n_systems=cfg.systems,
        methods=methods,
        band_mode=cfg.band_mode,
        base_seed=cfg.seed,
        threshold=cfg.threshold,
        freq_resolution=cfg.fres if cfg.fres is not None else 0.5,
        granger_order=cfg.order,
    )
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "benchmark.csv", result.CSV_HEADER, result.to_csv_rows())
    _write_json(out / "benchmark.json", result.to_json_dict())
    _write_json(out / "run_config.json", asdict(cfg))
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    """Band sweep: one jackknifed estimate per center frequency."""
    if not cfg.centers:
        raise ValueError("--centers must list at least one center frequency")
    record = _load_input(cfg)
    plan, config = _spectral_setup(cfg, record.sampling_rate)
    epochs = epoch(record, plan)
    layout = _resolve_layout(cfg, record)

    estimates = band_sweep(epochs, config, cfg.band_width, cfg.centers)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)

    n = record.n_channels
    rows = []
    prows = []
    for center, est in zip(cfg.centers, estimates):
        sig = significant(est, cfg.threshold)
        rows.extend(
            (_fmt(center), i, j, _fmt(est.normalized[i, j]), int(sig[i, j]))
            for i in range(n)
            for j in range(n)
            if i != j
        )
        if layout is not None:
            for name in cfg.directions:
                proj = project_direction(est, layout, np.asarray(DIRECTIONS[name]))
                prows.extend(
                    (name, _fmt(center), i, j, _fmt(proj[i, j]))
                    for i in range(n)
                    for j in range(n)
                    if i != j
                )
    _write_csv(out / "sweep_pairs.csv", ("center_f", "i", "j", "psi_norm", "significant"), rows)
    if layout is not None:
        _write_csv(
            out / "sweep_projections.csv",
            ("direction", "center_f", "i", "j", "contribution"),
            prows,
        )
    _write_json(out / "run_config.json", asdict(cfg))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phaseflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_io(p):
        p.add_argument("--input", help="input recording")
        p.add_argument("--format", choices=("csv", "raw"), default="csv")
        p.add_argument("--rate", type=float, help="sampling rate in Hz")
        p.add_argument("--channels", type=int, help="channel count (raw format)")
        p.add_argument("--epoch-sec", type=float, default=4.0)
        p.add_argument("--segment-sec", type=float, default=2.0)
        p.add_argument("--overlap", type=float, default=0.5)
        p.add_argument("--no-demean", action="store_true", help="keep per-segment means")
        p.add_argument("--fres", type=float, help="frequency resolution in Hz (overrides --segment-sec)")
        p.add_argument("--threshold", type=float, default=2.0)
        p.add_argument("--layout", help="label,x,y CSV of sensor positions")
        p.add_argument(
            "--direction",
            action="append",
            choices=sorted(DIRECTIONS),
            default=None,
            help="spatial projection direction (repeatable)",
        )
        p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("analyze", help="pairwise flow and net flux for a recording")
    add_io(p)
    p.add_argument("--band-center", type=float, help="band center in Hz (default: wide band)")
    p.add_argument("--band-width", type=float, default=5.0)
    p.add_argument("--methods", default="psi", help="comma list from {psi, granger}")
    p.add_argument("--order", type=int, default=10, help="AR order for granger")
    p.add_argument("--dump-spectra", action="store_true")

    p = sub.add_parser("benchmark", help="detection-rate benchmark on random systems")
    p.add_argument("--gammas", default="0,0.2,0.5,0.8,1.0", help="comma list of noise levels")
    p.add_argument("--systems", type=int, default=100)
    p.add_argument("--methods", default="psi,granger")
    p.add_argument("--band-mode", choices=("wide", "narrow"), default="wide")
    p.add_argument("--fres", type=float, default=0.5)
    p.add_argument("--threshold", type=float, default=2.0)
    p.add_argument("--order", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")

    p = sub.add_parser("sweep", help="estimates for bands centered on each frequency")
    add_io(p)
    p.add_argument("--centers", default="", help="comma list or start:stop:step in Hz")
    p.add_argument("--band-width", type=float, default=5.0)

    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    cfg.out = args.out
    if args.command in ("analyze", "sweep"):
        cfg.input = args.input
        cfg.format = args.format
        cfg.rate = args.rate
        cfg.channels = args.channels
        cfg.epoch_sec = args.epoch_sec
        cfg.segment_sec = args.segment_sec
        cfg.overlap = args.overlap
        cfg.demean = not args.no_demean
        cfg.fres = args.fres
        cfg.threshold = args.threshold
        cfg.layout = args.layout
        cfg.directions = args.direction or []
        cfg.band_width = args.band_width
    if args.command == "analyze":
        cfg.band_center = args.band_center
        cfg.methods = [m.strip() for m in args.methods.split(",") if m.strip()]
        cfg.order = args.order
        cfg.dump_spectra = args.dump_spectra
    elif args.command == "sweep":
        cfg.centers = _parse_floats(args.centers)
    elif args.command == "benchmark":
        cfg.gammas = _parse_floats(args.gammas)
        cfg.systems = args.systems
        cfg.methods = [m.strip() for m in args.methods.split(",") if m.strip()]
        cfg.band_mode = args.band_mode
        cfg.fres = args.fres
        cfg.threshold = args.threshold
        cfg.order = args.order
        cfg.seed = args.seed
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _config_from_args(args)
        handler = {"analyze": cmd_analyze, "benchmark": cmd_benchmark, "sweep": cmd_sweep}[cfg.command]
        return handler(cfg)
    except DegenerateSpectrumError as exc:
        print(f"error: degenerate data: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
