"""Command-line interface.

Subcommands: ingest (parse to a fast-reload cache), run (full pipeline),
eval (score a run against truth), synth (generate a labeled scene),
serve (review service). Exit codes: 0 success, 1 usage error, 2 data
error, 3 partial run.
"""

import argparse
import json
import sys
from pathlib import Path

from .cloud import SchemaError, get_schema
from .io import FormatError, parse_ply, parse_xyz, write_cache
from .pipeline import RunConfig, evaluate, run_inspection
from .synth import PRESETS, gen_synthetic

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PARTIAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="gridscan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="parse a cloud and cache it in a run directory")
    p.add_argument("--input", required=True)
    p.add_argument("--format", required=True, choices=["xyz", "ply"])
    p.add_argument("--out", required=True, help="run directory to create")
    p.add_argument("--schema", default="ts40k")

    p = sub.add_parser("run", help="execute the inspection pipeline")
    p.add_argument("--config", required=True, help="JSON file mirroring RunConfig")

    p = sub.add_parser("eval", help="score a run against ground-truth labels")
    p.add_argument("--run", required=True)
    p.add_argument("--truth", required=True, help="labeled cloud aligned with the input")
    p.add_argument("--beta", type=float, action="append", default=None,
                   help="F-beta beta value (repeatable; default 2.0)")
    p.add_argument("--ignore", action="append", default=[],
                   help="class name to exclude from aggregates (repeatable)")
    p.add_argument("--json", action="store_true", help="emit JSON instead of a table")

    p = sub.add_parser("synth", help="generate a synthetic labeled scene")
    p.add_argument("--preset", required=True, choices=list(PRESETS))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output PLY path")
    p.add_argument("--points", type=int, default=200_000)

    p = sub.add_parser("serve", help="serve a run directory for manual review")
    p.add_argument("--run", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui", default=None, help="static UI directory to mount at /")
    return parser


def _cmd_ingest(args) -> int:
    schema = get_schema(args.schema)
    data = Path(args.input).read_bytes()
    cloud = parse_xyz(data, schema=schema) if args.format == "xyz" \
        else parse_ply(data, schema=schema)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_cache(cloud, out / "input.gsc")
    print(f"ingested {cloud.point_count} points -> {out / 'input.gsc'}")
    return EXIT_OK


def _cmd_run(args) -> int:
    config = RunConfig.from_json(Path(args.config).read_text())
    manifest = run_inspection(config)
    flagged = sum(1 for r in manifest.segments if r.get("flagged"))
    print(f"run complete: {len(manifest.segments)} segments, {flagged} flagged "
          f"-> {manifest.run_dir}")
    if not manifest.complete:
        failed = [r["segment_id"] for r in manifest.segments if r["error"]]
        print(f"partial run: segments {failed} failed", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _cmd_eval(args) -> int:
    from .pipeline import RunManifest
    schema = RunManifest.load(args.run).schema
    ignore = {schema.id_of(name) for name in args.ignore}
    betas = args.beta if args.beta else [2.0]
    report = evaluate(args.run, args.truth, betas=betas, ignore=ignore)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    else:
        print(report.to_text(row_label=Path(args.run).name))
    return EXIT_OK


def _cmd_synth(args) -> int:
    scene = gen_synthetic(args.preset, args.seed, out=args.out,
                          total_points=args.points)
    print(f"wrote {scene.cloud.point_count} points ({args.preset}, seed "
          f"{args.seed}) -> {args.out}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn
    from .service import create_app
    app = create_app(args.run, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {
        "ingest": _cmd_ingest,
        "run": _cmd_run,
        "eval": _cmd_eval,
        "synth": _cmd_synth,
        "serve": _cmd_serve,
    }[args.command]
    try:
        return handler(args)
    except (FormatError, SchemaError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, KeyError, OSError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
