"""Command-line entry point.

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import fock, transport, validation, weakdrive
from .config import FORMATS, RunConfig, parse_config
from .errors import ConfigError, ExceptionalPoint, NonUniqueSteadyState, SolverFailure
from .model import build_h_om, eigenvalue_om
from .output import records_csv, records_json, records_svg, table_csv, write_text

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
BACKEND_FLAGS = tuple(transport.BACKENDS)

log = logging.getLogger("omtrans")


def _formats(cfg: RunConfig, flag) -> tuple:
    if not flag:
        return cfg.formats
    out = []
    for item in flag:
        for f in item.split(","):
            f = f.strip()
            if f not in FORMATS:
                raise ConfigError(f"unknown format {f!r}")
            if f not in out:
                out.append(f)
    return tuple(out)


def _apply_flags(cfg: RunConfig, args) -> RunConfig:
    if getattr(args, "backend", None):
        cfg.sweep.backends = (args.backend,)
    if getattr(args, "out", None):
        cfg.output_dir = Path(args.out)
    cfg.sweep.threads = transport.resolve_threads(getattr(args, "threads", None))
    return cfg


def cmd_sweep(cfg: RunConfig, formats) -> int:
    records = transport.run_sweep(cfg.sweep)
    base = cfg.output_dir / cfg.output_name
    if "csv" in formats:
        write_text(base.with_suffix(".csv"), records_csv(records))
    if "json" in formats:
        write_text(base.with_suffix(".json"), records_json(records))
    if "svg" in formats and records:
        records_svg(records, base.with_suffix(".svg"), cfg.output_name)
    failed = [r for r in records if r.status != "ok"]
    print(f"{len(records)} rows written to {base}.*; {len(failed)} failed points")
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_steady(cfg: RunConfig) -> dict:
    value = cfg.section("steady").get("value", float(cfg.sweep.values[0]))
    p, d = cfg.sweep.point_params(value)
    fwd, bwd = cfg.sweep.scenarios()
    report = {"variable": cfg.sweep.variable, "value": value, "delta": d, "backends": {}}
    for backend in cfg.sweep.backends:
        entry = {}
        for tag, sc in (("fwd", fwd), ("bwd", bwd)):
            res = transport.evaluate(sc.apply(p, cfg.sweep.eps), backend,
                                     dims=cfg.sweep.dims.get(backend),
                                     excitation_cap=cfg.sweep.excitation_cap)
            entry[tag] = {"scenario": sc.label, "weights": list(sc.weights),
                          "currents": list(res.currents), "occupations": list(res.occupations),
                          "g2": list(res.g2), "dims": list(res.dims)}
        report["backends"][transport.BACKENDS[backend]] = entry
    return report


def cmd_spectrum(cfg: RunConfig) -> tuple[list, list]:
    spec = cfg.section("spectrum")
    s_max, n_max, cutoff = spec["s_max"], spec["n_max"], spec["phonon_cutoff"]
    space = fock.make_space([s_max + 1, cutoff + 1])
    h = build_h_om(cfg.params, space).toarray()
    photons = space.states[:, 0]
    rows = []
    for s in range(s_max + 1):
        idx = np.flatnonzero(photons == s)
        ev = np.linalg.eigvalsh(h[np.ix_(idx, idx)])
        for n in range(n_max + 1):
            exact = eigenvalue_om(s, n, cfg.params)
            rows.append([s, n, exact, float(ev[n]), abs(float(ev[n]) - exact)])
    return ["s", "n", "analytic", "numeric", "abs_error"], rows


def cmd_upb_find(cfg: RunConfig) -> tuple[list, list]:
    upb = cfg.section("upb")
    p = cfg.params
    g_range = tuple(upb.get("g_range", (max(p.g * 0.1, 1e-6), max(p.g * 3, 1e-3))))
    d_range = tuple(upb.get("delta_range", (cfg.sweep.values[0], cfg.sweep.values[-1])))
    roots = weakdrive.upb_roots(p.with_drives(cfg.sweep.eps, 0.0, 0.0), g_range, d_range,
                                offsets=cfg.sweep.offsets, grid=tuple(upb["grid"]),
                                threshold=upb["threshold"])
    return ["g", "delta", "ratio", "g2_L"], [[r.g, r.delta, r.ratio, r.g2_L] for r in roots]


def cmd_validate(seed: int) -> int:
    results = validation.run_all(seed)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML run configuration")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--backend", choices=BACKEND_FLAGS)
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help="worker threads (env OMTRANS_THREADS)")
    common.add_argument("--format", action="append", help=f"one or more of {','.join(FORMATS)}")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="omtrans", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("sweep", "run a parameter sweep"),
                       ("steady", "steady state at one point"),
                       ("spectrum", "polaron spectrum against diagonalization"),
                       ("upb-find", "locate two-photon interference zeros"),
                       ("validate", "seeded property suites")):
        sub.add_parser(name, parents=[common], help=text)
    return parser


def _emit_table(cfg: RunConfig, name: str, header, rows, formats) -> None:
    text = table_csv(header, rows)
    sys.stdout.write(text)
    if cfg.output_dir is not None and "csv" in formats:
        write_text(cfg.output_dir / f"{name}.csv", text)
    if "json" in formats:
        data = [dict(zip(header, r)) for r in rows]
        write_text(cfg.output_dir / f"{name}.json", json.dumps(data, indent=1) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "validate":
            seed = args.seed
            if seed is None:
                seed = parse_config(args.config).seed if args.config else 0
            return cmd_validate(seed)
        if args.config is None:
            raise ConfigError(f"{args.command} needs --config")
        cfg = _apply_flags(parse_config(args.config), args)
        formats = _formats(cfg, args.format)
        if args.command == "sweep":
            return cmd_sweep(cfg, formats)
        if args.command == "steady":
            report = cmd_steady(cfg)
            text = json.dumps(report, indent=1) + "\n"
            sys.stdout.write(text)
            if args.out:
                write_text(cfg.output_dir / "steady.json", text)
            return EXIT_OK
        if args.command == "spectrum":
            header, rows = cmd_spectrum(cfg)
            _emit_table(cfg, "spectrum", header, rows, formats if args.out else ())
            return EXIT_OK
        if args.command == "upb-find":
            header, rows = cmd_upb_find(cfg)
            _emit_table(cfg, "upb_roots", header, rows, formats if args.out else ())
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverFailure, NonUniqueSteadyState, ExceptionalPoint) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    parser.error(f"unknown command {args.command}")
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
