"""Command-line front end: ``timebin <subcommand> [--config FILE] [--set k=v] [--key value]``.

Every output file gets a sibling ``<file>.manifest.json`` holding the
resolved configuration, package versions and SHA-256 digests. Passing that
manifest back with ``--from-manifest`` reruns with the same configuration.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import platform
import sys
from importlib import metadata
from pathlib import Path
from typing import Optional, Sequence

from . import analytic, extraction
from .config import SUBCOMMANDS, ConfigError, field_help, load_file, output_paths, resolve, snapshot
from .correlator import g2_histogram, g3_histogram, normalize_side_peaks
from .interferometer import HomConfig, MziConfig
from .oracle import VerificationGrid, default_threads, failures, verify_analytic
from .sampler import DetectorModel, RunConfig, SplitterTree, sample_chains
from .seed import SeedSpec
from .tagio import FormatError, read_tags, write_histogram_csv, write_tags_binary, write_tags_csv

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY = 0, 2, 3
PI = math.pi


def _fmt(x: float, digits: int = 12) -> str:
    return format(float(x), f".{digits}g")


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for pkg in ("artifact", "numpy", "scipy", "numba"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(command: str, cfg, outputs: Sequence[Path], rng_seed: Optional[int] = None) -> Path:
    manifest = {
        "subcommand": command,
        "config": snapshot(cfg),
        "rng_seed": rng_seed,
        "versions": _versions(),
        "outputs": {str(p): _sha256(p) for p in outputs},
    }
    path = Path(str(outputs[0]) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


# subcommands -------------------------------------------------------------------

def cmd_landscape(cfg) -> list[Path]:
    pts = analytic.landscape([t * PI for t in cfg.theta_pi], [p * PI for p in cfg.phi_pi], cfg.model)
    rows = [[_fmt(p.theta / PI), _fmt(p.phi / PI), _fmt(p.P0), _fmt(p.P1), _fmt(p.P2), p.model] for p in pts]
    out = Path(cfg.out)
    _write_csv(out, ["theta_pi", "phi_pi", "P0", "P1", "P2", "model"], rows)
    return [out]


def cmd_correlations(cfg) -> list[Path]:
    if any(t <= 0 for t in cfg.theta_pi):
        raise ConfigError("theta_pi: correlations are undefined at zero pulse area")
    rows = []
    for t in cfg.theta_pi:
        for p in cfg.phi_pi:
            th, ph = t * PI, p * PI
            for d in cfg.delta:
                rows.append([_fmt(t), _fmt(p), d, _fmt(analytic.g2_auto(th, ph, d, "e")),
                             _fmt(analytic.g2_auto(th, ph, d, "f")), _fmt(analytic.g2_cross(th, ph, d))])
    out = Path(cfg.out)
    _write_csv(out, ["theta_pi", "phi_pi", "delta", "g2_ee", "g2_ff", "g2_ef"], rows)
    return [out]


def cmd_simulate(cfg) -> list[Path]:
    phase = cfg.phi_pi * PI
    try:
        seed = SeedSpec(cfg.theta_pi * PI, purity=cfg.purity, indistinguishability=cfg.indistinguishability)
        if cfg.source == "single_mzi":
            optics = MziConfig(phase=phase, r1=cfg.r1, r2=cfg.r2, repetition_period=cfg.repetition_period_s)
        else:
            optics = HomConfig(phase=phase, r=cfg.r2)
        run = RunConfig(cfg.n_bins, cfg.warmup_bins, cfg.seed, cfg.source)
        det = DetectorModel(cfg.efficiency, cfg.dark_count_prob, cfg.pnr)
        tree = SplitterTree(cfg.topology, cfg.port)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    streams = sample_chains(run, seed, optics, det, tree, cfg.chains, default_threads())
    paths = output_paths(cfg.out, cfg.chains)
    write = write_tags_csv if cfg.format == "csv" else write_tags_binary
    for path, stream in zip(paths, streams):
        write(path, stream)
    return paths


def cmd_correlate(cfg) -> list[Path]:
    streams = [read_tags(p) for p in cfg.tags]
    dets = cfg.detectors
    if len(dets) != cfg.order:
        raise ConfigError(f"detectors: order {cfg.order} needs {cfg.order} ids, got {dets}")
    make = g2_histogram if cfg.order == 2 else g3_histogram
    hist = None
    for s in streams:
        h = make(s, *dets, max_delta=cfg.max_delta)
        hist = h if hist is None else hist.merge(h)
    out = Path(cfg.out)
    if cfg.normalize:
        norm = normalize_side_peaks(hist, tuple(cfg.window))
        write_histogram_csv(out, cfg.order, hist.counts, norm.g, norm.baseline)
    else:
        write_histogram_csv(out, cfg.order, hist.counts)
    return [out]


def cmd_extract(cfg) -> list[Path]:
    if cfg.n is not None:
        n = cfg.n
    elif cfg.counts_per_second is not None:
        if cfg.efficiency <= 0:
            raise ConfigError("efficiency: must be > 0")
        n = extraction.mean_photon(cfg.counts_per_second, cfg.repetition_period, cfg.efficiency)
    else:
        raise ConfigError("extract needs either n or counts_per_second")
    probs = extraction.probs_from_g2(n, cfg.g2_zero)
    bound = None if cfg.g3_zero is None else extraction.p3_bound(n, cfg.g3_zero)
    out = Path(cfg.out)
    _write_csv(out, ["n", "P0", "P1", "P2", "P3_bound"],
               [[_fmt(n), _fmt(probs.P0), _fmt(probs.P1), _fmt(probs.P2), "" if bound is None else _fmt(bound)]])
    return [out]


def cmd_verify(cfg) -> tuple[list[Path], int]:
    grid = VerificationGrid([t * PI for t in cfg.theta_pi], [p * PI for p in cfg.phi_pi],
                            tuple(cfg.delta), cfg.purity)
    reports = verify_analytic(grid, cfg.tolerance, cfg.threads)
    bad = failures(reports, cfg.tolerance)

    def opt(x):
        return "" if x is None else repr(float(x))

    rows = [[r.quantity, _fmt(r.theta / PI), _fmt(r.phi / PI), "" if r.delta is None else r.delta,
             repr(float(r.exact)), opt(r.analytic), opt(r.deviation)] for r in reports]
    out = Path(cfg.out)
    _write_csv(out, ["quantity", "theta_pi", "phi_pi", "delta", "exact", "analytic", "deviation"], rows)
    print(f"{len(reports)} comparisons, {len(bad)} failures at tolerance {cfg.tolerance:g}", file=sys.stderr)
    return [out], len(bad)


def cmd_ranges(cfg) -> list[Path]:
    rows = []
    for model in cfg.model:
        for name, (lo, hi) in analytic.accessible_ranges(model, cfg.resolution).items():
            rows.append([model, name, _fmt(lo), _fmt(hi)])
    out = Path(cfg.out)
    _write_csv(out, ["model", "quantity", "min", "max"], rows)
    return [out]


COMMANDS = {
    "landscape": cmd_landscape,
    "correlations": cmd_correlations,
    "simulate": cmd_simulate,
    "correlate": cmd_correlate,
    "extract": cmd_extract,
    "verify": cmd_verify,
    "ranges": cmd_ranges,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="timebin", description="Time-bin photon-number simulator and analysis.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, cls in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"{name} (see --help)")
        p.add_argument("--config", help="TOML file; the [%s] table is used" % name)
        p.add_argument("--from-manifest", help="rerun with the configuration stored in a manifest")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (TOML value syntax)")
        for key, text, default in field_help(cls):
            p.add_argument(f"--{key.replace('_', '-')}", dest=f"opt_{key}", metavar="VALUE",
                           help=f"{text} (default {default!r})")
    return parser


def _file_table(args) -> dict:
    table = load_file(args.config)
    if args.from_manifest:
        try:
            manifest = json.loads(Path(args.from_manifest).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{args.from_manifest}: {exc}") from None
        if manifest.get("subcommand") != args.command:
            raise ConfigError(f"{args.from_manifest}: manifest is for '{manifest.get('subcommand')}'")
        table = {args.command: manifest["config"]}
    return table


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    flags = {k[4:]: v for k, v in vars(args).items() if k.startswith("opt_")}
    try:
        cfg = resolve(args.command, _file_table(args), args.set, flags)
        result = COMMANDS[args.command](cfg)
    except (ConfigError, FormatError, extraction.InconsistentInputError,
            analytic.UndefinedCorrelationError, FileNotFoundError) as exc:
        print(f"timebin {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    n_failed = 0
    if isinstance(result, tuple):
        result, n_failed = result
    write_manifest(args.command, cfg, result, getattr(cfg, "seed", None))
    for p in result:
        print(p)
    return EXIT_VERIFY if n_failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
