"""Single entry point: simulate, detect, seal, serve, ingest, query.

Exit codes: 0 success, 2 usage or unwritable output, 3 parse failure,
4 connection refused, 5 HTTP 4xx from the server.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx

from .config import ConfigError, parse_config
from .model import DomainError
from .pipeline import PipelineConfig, default_emission_table, default_zones, process_trace
from .privacy import KeyStore, encode_envelope, encrypt_envelope
from .simulator import DEFAULT_SUITE, Noise, corpus, manifest_text
from .store import IngestionService, Store, trip_to_dict, segment_to_dict
from .traceio import TraceParseError, decode_trace, encode_trace
from .transit import load_transit_dataset
from .trips import load_emission_table, load_zones

EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_CONNECT = 4
EXIT_HTTP = 5


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TraceParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except httpx.ConnectError as exc:
        print(f"connection refused: {exc}", file=sys.stderr)
        return EXIT_CONNECT


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mobiliscope")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a seeded trace corpus")
    p.add_argument("--suite", default="default", choices=["default"])
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.add_argument("--noise", help="dropout,accuracy_sigma,sample_error_rate")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect", help="run mode detection on one trace file")
    p.add_argument("--trace", required=True)
    p.add_argument("--transit")
    p.add_argument("--config")
    p.add_argument("--emissions")
    p.add_argument("--zones")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("keygen", help="write a fresh key file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("seal", help="encrypt a trace file into an upload envelope")
    p.add_argument("--trace", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_seal)

    p = sub.add_parser("serve", help="run the ingestion + analytics server")
    p.add_argument("--data", required=True)
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--key", required=True)
    p.add_argument("--transit")
    p.add_argument("--config")
    p.add_argument("--emissions")
    p.add_argument("--zones")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("ingest", help="POST an envelope file to a server")
    p.add_argument("--envelope", required=True)
    p.add_argument("--url", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("query", help="query analytics endpoints")
    p.add_argument("--url", required=True)
    p.add_argument("subcommand", choices=["modal-split", "od", "carbon", "trips"])
    p.add_argument("--from", dest="date_from")
    p.add_argument("--to", dest="date_to")
    p.add_argument("--modes")
    p.add_argument("--zones")
    p.add_argument("--pseudonym")
    p.add_argument("--cursor")
    p.set_defaults(func=cmd_query)

    return parser


def cmd_simulate(args) -> int:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"unwritable output dir: {exc}", file=sys.stderr)
        return EXIT_USAGE
    noise = None
    if args.noise:
        d, s, e = args.noise.split(",")
        noise = Noise(float(d), float(s), float(e))
    entries = corpus(DEFAULT_SUITE, args.seed, noise=noise)
    for e in entries:
        (out / f"{e.name}.trace").write_text(encode_trace(e.trace), encoding="utf-8")
    (out / "manifest.txt").write_text(manifest_text(entries), encoding="utf-8")
    print(f"wrote {len(entries)} traces + manifest to {out}")
    return 0


def _load_pipeline_inputs(args):
    if args.transit:
        transit = load_transit_dataset(Path(args.transit).read_text(encoding="utf-8"))
    else:
        from .simulator import builtin_transit_dataset

        transit = builtin_transit_dataset()
    cfg = parse_config(Path(args.config).read_text(encoding="utf-8")) if args.config else PipelineConfig()
    table = (
        load_emission_table(Path(args.emissions).read_text(encoding="utf-8"))
        if args.emissions
        else default_emission_table()
    )
    zones = load_zones(Path(args.zones).read_text(encoding="utf-8")) if args.zones else default_zones()
    return transit, cfg, table, zones


def cmd_detect(args) -> int:
    trace = decode_trace(Path(args.trace).read_text(encoding="utf-8"))
    transit, cfg, table, zones = _load_pipeline_inputs(args)
    segments, trips = process_trace(trace, transit, table, zones, cfg)

    if args.format == "json":
        doc = {
            "date": trace.date.isoformat(),
            "segments": [segment_to_dict(s) for s in segments],
            "trips": [trip_to_dict(t) for t in trips],
        }
        print(json.dumps(doc, indent=2))
    else:
        print(f"date {trace.date.isoformat()}  segments {len(segments)}  trips {len(trips)}")
        for s in segments:
            print(
                f"  {s.start_ts}..{s.end_ts}  {s.mode.value:<16} "
                f"{s.distance_m:9.1f} m  {s.carbon_g:8.1f} gCO2"
            )
        for t in trips:
            print(
                f"trip {t.trip_id}: {len(t.segments)} segments, "
                f"{t.total_distance_m:.1f} m, {t.total_carbon_g:.1f} gCO2"
            )
    return 0


def cmd_keygen(args) -> int:
    keys = KeyStore.generate()
    path = Path(args.out)
    try:
        path.write_text(keys.dump(), encoding="utf-8")
    except OSError as exc:
        print(f"unwritable key file: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"wrote key file {path}")
    return 0


def cmd_seal(args) -> int:
    keys = KeyStore.load(Path(args.key).read_text(encoding="utf-8"))
    text = Path(args.trace).read_text(encoding="utf-8")
    decode_trace(text)  # validate before sealing
    env = encrypt_envelope(text.encode("utf-8"), keys.default_key_id(), keys)
    Path(args.out).write_bytes(encode_envelope(env))
    print(f"sealed {args.trace} -> {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    keys = KeyStore.load(Path(args.key).read_text(encoding="utf-8"))
    transit, cfg, table, zones = _load_pipeline_inputs(args)
    store = Store(args.data)
    service = IngestionService(store, keys, transit, table, zones, cfg)
    app = create_app(service, zones)
    uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="warning")
    return 0


def cmd_ingest(args) -> int:
    blob = Path(args.envelope).read_bytes()
    resp = httpx.post(f"{args.url}/v1/traces", content=blob)
    print(resp.text)
    if resp.status_code >= 400:
        return EXIT_HTTP
    return 0


def cmd_query(args) -> int:
    params = {}
    if args.date_from:
        params["from"] = args.date_from
    if args.date_to:
        params["to"] = args.date_to
    if args.modes:
        params["modes"] = args.modes
    if args.zones:
        params["zones"] = args.zones
    if args.pseudonym:
        params["pseudonym"] = args.pseudonym
    if args.cursor:
        params["cursor"] = args.cursor
    resp = httpx.get(f"{args.url}/v1/analytics/{args.subcommand}", params=params)
    print(resp.text)
    if resp.status_code >= 400:
        return EXIT_HTTP
    return 0


if __name__ == "__main__":
    sys.exit(main())
