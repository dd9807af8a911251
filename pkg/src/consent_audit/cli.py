"""Command-line entry point.

Subcommands: ``audit`` (run checkers over a session corpus and write the
report), ``decode-tcf`` (inspect one consent string), ``synth`` (generate
a fixture corpus with ground truth), ``serve`` (run the review service).

Machine output goes to stdout as UTF-8 JSON; human diagnostics go to
stderr. Exit codes for ``audit``: 0 no violations, 2 violations present,
3 nothing decided, 1 operational error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

from .config import build_context, load_config
from .corpus import PLANT_TOKENS, load_site_capture, write_corpus
from .checks import run_all
from .errors import AuditError, DecodeError
from .report import build_report, render
from .requirements import LIFESPAN_PROFILES
from .tcf import decode_tcf, polarity


def _err(message: str) -> None:
    print(f"consent-audit: {message}", file=sys.stderr)


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def cmd_audit(args) -> int:
    config_path = os.environ.get("CONSENT_AUDIT_CONFIG") or args.config
    try:
        cfg = load_config(Path(config_path) if config_path else None)
        if args.profile:
            cfg.dpa_profile = args.profile
            cfg.validate()
        ctx = build_context(cfg)
    except AuditError as exc:
        _err(f"configuration error: {exc}")
        return 1

    sessions_dir = Path(args.sessions)
    if not sessions_dir.is_dir():
        _err(f"sessions directory not found: {sessions_dir}")
        return 1
    site_dirs = sorted(d for d in sessions_dir.iterdir()
                       if d.is_dir() and any(d.glob("*.session.json")))
    if not site_dirs:
        _err(f"no site capture directories under {sessions_dir}")
        return 1

    def audit_one(site_dir: Path):
        capture = load_site_capture(site_dir)
        return run_all(capture, ctx)

    try:
        jobs = args.jobs or os.cpu_count() or 1
        if jobs > 1 and len(site_dirs) > 1:
            with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(audit_one, site_dirs))
        else:
            results = [audit_one(d) for d in site_dirs]
    except (AuditError, OSError) as exc:
        _err(f"audit failed: {exc}")
        return 1

    generated_at = None
    if args.generated_at:
        generated_at = datetime.fromisoformat(args.generated_at.replace("Z", "+00:00"))
        if generated_at.tzinfo is None:
            generated_at = generated_at.replace(tzinfo=timezone.utc)
    report = build_report(results, answers=[], dpa_profile=cfg.dpa_profile,
                          config_digest=cfg.digest, generated_at=generated_at)

    try:
        _atomic_write(Path(args.out), render(report, "json"))
        if args.markdown:
            _atomic_write(Path(args.markdown), render(report, "markdown"))
    except OSError as exc:
        _err(f"cannot write report: {exc}")
        return 1

    totals = report.summary()["totals"]
    _err(f"audited {len(report.sites)} site(s): "
         f"{totals['violation']} violation(s), {totals['compliant']} compliant, "
         f"{totals['inconclusive']} inconclusive, "
         f"{totals['manual_pending'] + totals['user_study_pending']} pending")
    return report.exit_code()


def cmd_decode_tcf(args) -> int:
    try:
        record = decode_tcf(args.string)
    except DecodeError as exc:
        _err(f"cannot decode: {exc}")
        return 1
    doc = {
        "tcf_version": record.tcf_version,
        "created": record.created.isoformat(),
        "last_updated": record.last_updated.isoformat(),
        "cmp_id": record.cmp_id,
        "cmp_version": record.cmp_version,
        "consent_screen": record.consent_screen,
        "consent_language": record.consent_language,
        "vendor_list_version": record.vendor_list_version,
        "purposes_consent": sorted(record.purposes_consent),
        "vendor_consents": sorted(record.vendor_consents),
        "max_vendor_id": record.max_vendor_id,
        "polarity": polarity(record).value,
    }
    print(json.dumps(doc, indent=2))
    return 0


def cmd_synth(args) -> int:
    plants = [token.strip() for token in args.plant.split(",") if token.strip()]
    unknown = [t for t in plants if t not in PLANT_TOKENS]
    if unknown or not plants:
        _err(f"unknown plant token(s): {', '.join(unknown) or '(none given)'}; "
             f"valid: {', '.join(PLANT_TOKENS)}")
        return 1
    try:
        truth = write_corpus(plants, Path(args.out))
    except (AuditError, OSError) as exc:
        _err(f"synthesis failed: {exc}")
        return 1
    _err(f"wrote {len(truth)} site fixture(s) to {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .review import ReviewStore, create_app

    store_dir = Path(args.store)
    try:
        store = ReviewStore(store_dir)
    except (OSError, AuditError, FileNotFoundError) as exc:
        _err(f"cannot open store: {exc}")
        return 1
    assets = Path(args.assets) if args.assets else None
    if assets is not None and not assets.is_dir():
        _err(f"assets directory not found: {assets}")
        return 1
    app = create_app(store, allow_origin=args.allow_origin, assets_dir=assets)
    host, _, port = args.bind.rpartition(":")
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")
    except (OSError, ValueError) as exc:
        _err(f"cannot bind {args.bind}: {exc}")
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="consent-audit",
        description="Audit cookie-consent implementations from captured sessions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_audit = sub.add_parser("audit", help="audit a session corpus")
    p_audit.add_argument("--sessions", required=True,
                         help="directory with one subdirectory per site")
    p_audit.add_argument("--config", default=None,
                         help="TOML config file (env CONSENT_AUDIT_CONFIG overrides)")
    p_audit.add_argument("--out", required=True, help="report JSON output path")
    p_audit.add_argument("--markdown", default=None,
                         help="also render a markdown report to this path")
    p_audit.add_argument("--jobs", type=int, default=None,
                         help="parallel site audits (default: CPU count)")
    p_audit.add_argument("--profile", choices=sorted(LIFESPAN_PROFILES),
                         default=None, help="override the DPA lifespan profile")
    p_audit.add_argument("--generated-at", default=None,
                         help="pin the report timestamp (for reproducible output)")
    p_audit.set_defaults(func=cmd_audit)

    p_decode = sub.add_parser("decode-tcf", help="decode one TCF consent string")
    p_decode.add_argument("string")
    p_decode.set_defaults(func=cmd_decode_tcf)

    p_synth = sub.add_parser("synth", help="generate a fixture corpus")
    p_synth.add_argument("--plant", required=True,
                         help="comma-separated plant tokens "
                              f"({', '.join(PLANT_TOKENS)})")
    p_synth.add_argument("--out", required=True, help="output corpus directory")
    p_synth.set_defaults(func=cmd_synth)

    p_serve = sub.add_parser("serve", help="run the review service")
    p_serve.add_argument("--store", required=True,
                         help="store directory containing report.json")
    p_serve.add_argument("--bind", default="127.0.0.1:8400", help="host:port")
    p_serve.add_argument("--allow-origin", default=None,
                         help="CORS origin for the review console")
    p_serve.add_argument("--assets", default=None,
                         help="static console assets to serve at /")
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
