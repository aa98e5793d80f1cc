"""Command-line pipeline: synth -> ingest -> resolve -> qa -> build -> serve.

Exit codes: 0 success, 1 data/validation errors, 2 I/O or environment
errors, 3 bad usage. Each stage prints one machine-parseable summary line to
stderr. Stage outputs are directories with manifests so every step is
inspectable and resumable.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Optional

from . import entities, ingest, quality, storage, synth, workbook
from .errors import (
    AlmanacError,
    ConfigError,
    CorpusIOError,
    IneligibleDistrictError,
)
from .model import AlmanacConfig, validate_store

EXIT_OK = 0
EXIT_DATA = 1
EXIT_IO = 2
EXIT_USAGE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"almanac: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _summary(args, command: str, **fields) -> None:
    if getattr(args, "quiet", False):
        return
    text = " ".join(f"{key}={value}" for key, value in fields.items())
    print(f"almanac {command}: {text}", file=sys.stderr)


def _load_config(args) -> Optional[AlmanacConfig]:
    path = getattr(args, "config", None)
    if path is None:
        return None
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CorpusIOError(f"cannot read config file {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"config file {path} is not valid JSON: {exc}")
    return AlmanacConfig.from_dict(data)


def _cmd_synth(args) -> int:
    started = time.monotonic()
    cfg = synth.SynthConfig(
        n_districts=args.districts, n_years=args.years, seed=args.seed,
        spike_rate=args.spike_rate, charter_share=args.charter_share)
    _paths, gt_path = synth.generate_corpus(cfg, Path(args.out))
    truth = synth.GroundTruth.load(gt_path)
    _summary(args, "synth", status="ok", districts=cfg.n_districts,
             years=cfg.n_years, seed=cfg.seed,
             spikes=len(truth.injected_spikes),
             elapsed=f"{time.monotonic() - started:.1f}s")
    return EXIT_OK


def _cmd_ingest(args) -> int:
    started = time.monotonic()
    config = _load_config(args) or AlmanacConfig()
    store, errors = ingest.load_corpus(Path(args.in_dir), config)
    violations = validate_store(store) if not errors else []
    storage.write_store(store, Path(args.store))
    for error in errors:
        print(str(error), file=sys.stderr)
    for violation in violations:
        print(f"validation: [{violation.code}] {violation.key}: "
              f"{violation.message}", file=sys.stderr)
    _summary(args, "ingest", status="ok" if not (errors or violations) else "errors",
             districts=len(store.districts), schools=len(store.schools),
             observations=store.observation_count(), errors=len(errors),
             violations=len(violations),
             elapsed=f"{time.monotonic() - started:.1f}s")
    return EXIT_OK if not (errors or violations) else EXIT_DATA


def _cmd_resolve(args) -> int:
    started = time.monotonic()
    store = storage.read_store(Path(args.store), _load_config(args))
    store, log = entities.reassociate_charters(store)
    out_dir = Path(args.out) if args.out else Path(args.store)
    storage.write_store(store, out_dir)
    log.write(out_dir / "corrections.json")
    _summary(args, "resolve", status="ok", moves=len(log.moves),
             affected_cells=log.affected_cells,
             elapsed=f"{time.monotonic() - started:.1f}s")
    return EXIT_OK


def _cmd_qa(args) -> int:
    started = time.monotonic()
    config = _load_config(args)
    store = storage.read_store(Path(args.store), config)
    if args.threshold is not None:
        store.config.outlier_threshold = args.threshold
    if args.single_rule_threshold is not None:
        store.config.single_rule_threshold = args.single_rule_threshold
    if store.config.single_rule_threshold < store.config.outlier_threshold:
        raise ConfigError("single_rule_threshold", "must be >= outlier_threshold")
    store, report = quality.screen_outliers(store, store.config)
    out_dir = Path(args.out) if args.out else Path(args.store)
    storage.write_store(store, out_dir)
    report.write(out_dir / "qa_report.json")
    _summary(args, "qa", status="ok", screened=report.screened_cells,
             suppressed=report.suppression_count,
             elapsed=f"{time.monotonic() - started:.1f}s")
    return EXIT_OK


def _cmd_peers(args) -> int:
    from . import peers as peers_mod

    store = storage.read_store(Path(args.store), _load_config(args))
    if args.k is not None:
        store.config.k_peers = args.k
    ps = peers_mod.peer_set(store, args.district, store.config)
    print(json.dumps(ps.to_dict(), sort_keys=True, indent=1))
    return EXIT_OK


def _cmd_build(args) -> int:
    started = time.monotonic()
    store = storage.read_store(Path(args.store), _load_config(args))
    out_dir = Path(args.out) if args.out else Path(args.store) / "bundles"
    out_dir.mkdir(parents=True, exist_ok=True)

    targets = sorted(store.districts) if args.all else [args.district]
    built: list[str] = []
    ineligible: list[dict] = []
    for district_id in targets:
        try:
            bundle = workbook.build_bundle(store, district_id, store.config)
        except IneligibleDistrictError as exc:
            ineligible.append({"district_id": district_id, "reason": exc.reason})
            continue
        workbook.write_bundle(bundle, out_dir / workbook.bundle_filename(district_id))
        built.append(district_id)

    report = {"bundle_count": len(built), "built": built, "ineligible": ineligible}
    (out_dir / "build_report.json").write_text(
        json.dumps(report, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    _summary(args, "build", status="ok", bundles=len(built),
             ineligible=len(ineligible),
             elapsed=f"{time.monotonic() - started:.1f}s")
    if not args.all and ineligible:
        print(f"almanac build: {ineligible[0]['district_id']}: "
              f"{ineligible[0]['reason']}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def _cmd_serve(args) -> int:
    from . import service

    service.serve(Path(args.store), args.port,
                  ui_dir=Path(args.ui) if args.ui else None,
                  bundles_dir=Path(args.bundles) if args.bundles else None,
                  host=args.host)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="almanac",
                     description="district data pipeline and analytics")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file overriding config defaults")
        p.add_argument("--quiet", action="store_true", help="suppress summaries")

    p = sub.add_parser("synth", help="generate a synthetic raw corpus")
    p.add_argument("--out", required=True, help="corpus output directory")
    p.add_argument("--districts", type=int, default=956)
    p.add_argument("--years", type=int, default=10)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--spike-rate", type=float, default=0.002, dest="spike_rate")
    p.add_argument("--charter-share", type=float, default=0.10,
                   dest="charter_share")
    common(p)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="parse a raw corpus into a store")
    p.add_argument("--in", required=True, dest="in_dir", help="corpus directory")
    p.add_argument("--store", required=True, help="store output directory")
    common(p)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("resolve", help="reassociate direct-funded charters")
    p.add_argument("--store", required=True)
    p.add_argument("--out", help="write to a new store directory (default: in place)")
    common(p)
    p.set_defaults(func=_cmd_resolve)

    p = sub.add_parser("qa", help="screen and suppress outlier cells")
    p.add_argument("--store", required=True)
    p.add_argument("--out", help="write to a new store directory (default: in place)")
    p.add_argument("--threshold", type=float, default=None,
                   help="two-rule outlier threshold")
    p.add_argument("--single-rule-threshold", type=float, default=None,
                   dest="single_rule_threshold")
    common(p)
    p.set_defaults(func=_cmd_qa)

    p = sub.add_parser("peers", help="print a district's peer set as JSON")
    p.add_argument("--store", required=True)
    p.add_argument("--district", required=True)
    p.add_argument("--k", type=int, default=None)
    common(p)
    p.set_defaults(func=_cmd_peers)

    p = sub.add_parser("build", help="build workbook bundles")
    p.add_argument("--store", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--district", help="build one district")
    group.add_argument("--all", action="store_true", help="build all districts")
    p.add_argument("--out", help="bundle output directory (default: STORE/bundles)")
    common(p)
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("serve", help="serve the store and bundles over HTTP")
    p.add_argument("--store", required=True)
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--ui", help="static dashboard directory to serve at /")
    p.add_argument("--bundles", help="bundle directory (default: STORE/bundles)")
    p.add_argument("--host", default="127.0.0.1")
    common(p)
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CorpusIOError as exc:
        print(f"almanac {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"almanac {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    except AlmanacError as exc:
        print(f"almanac {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyboardInterrupt:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
