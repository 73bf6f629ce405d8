"""
Command line client.

Every subcommand builds a request model and hands it to the service, either
in process or over HTTP with ``--server``. The CLI only parses arguments,
checks output paths and writes files.

Exit codes: 0 success, 1 audit failure, 2 config error, 3 numerical fault.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .config import ConfigError, RunConfig
from .evolution import CFLViolation, NumericalFault

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_FAULT = 0, 1, 2, 3
OUTPUT_ENV = "RNMH_OUTPUT_DIR"

# --kebab-case flag -> RunConfig key
FLAG_KEYS: Dict[str, str] = {f.name.replace("_", "-").lower(): f.name for f in fields(RunConfig)}


class ClientError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _add_common(p: argparse.ArgumentParser, overrides: bool = True) -> None:
    p.add_argument("--config", type=Path, help="key = value config file")
    p.add_argument("--force", action="store_true", help="overwrite existing outputs")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker threads (1 gives bit-exact reruns)")
    p.add_argument("--server", help="service URL; run in process when omitted")
    p.add_argument("--output-dir", type=Path, help=f"default output directory (else ${OUTPUT_ENV} or .)")
    if overrides:
        g = p.add_argument_group("config overrides")
        for flag, key in FLAG_KEYS.items():
            g.add_argument(f"--{flag}", dest=f"cfg__{key}", metavar="VALUE")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rnmh", description="Maxwell-Higgs on Reissner-Nordstrom: runs and audits")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run-mode", help="single (ell, m) radial mode run")
    _add_common(p)
    p.add_argument("--no-snapshots", action="store_true", help="skip identity snapshots")

    p = sub.add_parser("run-coupled", help="(r*, theta) Maxwell-Higgs run")
    _add_common(p)

    p = sub.add_parser("audit", help="audit a stored history")
    _add_common(p)
    p.add_argument("--history", type=Path, required=True, help="history file (CSV or JSON)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--checks", default="auto", help="comma-separated check ids, or auto")
    p.add_argument("--drift-tol", type=float, default=1e-8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", type=Path, help="audit report JSON path")

    p = sub.add_parser("converge", help="three-resolution order estimate")
    _add_common(p)
    p.add_argument("--resolutions", default="1024,2048,4096")
    p.add_argument("--diagnostic", choices=("drift", "probe", "energy"), default="drift")
    p.add_argument("--report", type=Path, help="report JSON path")

    p = sub.add_parser("coulomb-check", help="evolve the exact Coulomb state")
    _add_common(p)
    p.add_argument("--report", type=Path, help="report JSON path")
    return parser


def _overrides(args) -> Dict[str, str]:
    return {k[5:]: v for k, v in vars(args).items() if k.startswith("cfg__") and v is not None}


def _config_input(args) -> dict:
    text = ""
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ClientError(f"cannot read config: {exc}", EXIT_CONFIG) from None
    return {"config_text": text, "overrides": _overrides(args)}


def _output_dir(args) -> Path:
    return args.output_dir or Path(os.environ.get(OUTPUT_ENV, "."))


def _claim(paths: Sequence[Path], force: bool) -> None:
    for path in paths:
        if path.exists() and not force:
            raise ClientError(f"{path} exists; pass --force to overwrite", EXIT_CONFIG)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


class _Local:
    """In-process transport."""

    def call(self, route: str, payload: dict) -> dict:
        from .service import handlers, schemas

        table = {
            "/runs/mode": (handlers.run_mode, schemas.RunRequest),
            "/runs/coupled": (handlers.run_coupled, schemas.RunRequest),
            "/audit": (handlers.audit, schemas.AuditRequest),
            "/converge": (handlers.converge, schemas.ConvergeRequest),
            "/coulomb-check": (handlers.coulomb_check, schemas.ConfigInput),
            "/config/validate": (handlers.validate_config, schemas.ConfigInput),
        }
        fn, model = table[route]
        try:
            return fn(model(**payload)).model_dump()
        except NumericalFault as exc:
            raise ClientError(str(exc), EXIT_FAULT) from None
        except (ConfigError, CFLViolation, ValueError) as exc:
            raise ClientError(str(exc), EXIT_CONFIG) from None


class _Remote:
    """HTTP transport to a running service."""

    def __init__(self, url: str):
        self.url = url.rstrip("/")

    def call(self, route: str, payload: dict) -> dict:
        import httpx

        try:
            resp = httpx.post(self.url + route, json=payload, timeout=None)
        except httpx.HTTPError as exc:
            raise ClientError(f"cannot reach {self.url}: {exc}", EXIT_CONFIG) from None
        if resp.status_code == 200:
            return resp.json()
        try:
            body = resp.json()
        except ValueError:
            body = {"kind": "config", "message": resp.text}
        kind = body.get("kind")
        message = body.get("message") or json.dumps(body.get("detail", body))
        if body.get("key"):
            where = f"line {body['line']}, " if body.get("line") else ""
            message = f"{where}'{body['key']}': {message}"
        raise ClientError(message, EXIT_FAULT if kind == "numerical_fault" else EXIT_CONFIG)


def _run(args, kind: str, transport) -> int:
    payload = _config_input(args)
    # resolve paths up front so an existing file aborts before the run
    cfg = transport.call("/config/validate", payload)
    if not cfg["valid"]:
        e = cfg["error"]
        raise ClientError(str(ConfigError(e["message"], e["key"], e["line"])), EXIT_CONFIG)
    out = _output_dir(args)
    csv_path = Path(cfg["config"]["csv_path"] or out / f"{kind}.csv")
    json_path = Path(cfg["config"]["json_path"] or out / f"{kind}.json")
    _claim([csv_path, json_path], args.force)
    payload.update(threads=args.threads)
    if kind == "mode":
        payload["snapshots"] = not args.no_snapshots
    res = transport.call(f"/runs/{kind}", payload)
    _write(csv_path, res["csv"])
    _write(json_path, res["history_json"])
    print(json.dumps({"kind": kind, "reports": res["n_reports"], "final": res["final"],
                      "csv": str(csv_path), "json": str(json_path), "elapsed_s": round(res["elapsed_s"], 3)}))
    return EXIT_OK


def _audit(args, transport) -> int:
    try:
        history = args.history.read_text(encoding="utf-8")
    except OSError as exc:
        raise ClientError(f"cannot read history: {exc}", EXIT_CONFIG) from None
    report = args.report or _output_dir(args) / "audit.json"
    _claim([report], args.force)
    payload = _config_input(args)
    payload.update(history=history, format=args.format, checks=[c.strip() for c in args.checks.split(",") if c.strip()],
                   drift_tol=args.drift_tol, seed=args.seed, threads=args.threads)
    res = transport.call("/audit", payload)
    _write(report, json.dumps(res["reports"], indent=2) + "\n")
    for r in res["reports"]:
        print(f"{r['id']}: {'PASS' if r['pass'] else 'FAIL'} worst_ratio={r['worst_ratio']:.6g}")
    return EXIT_OK if res["passed"] else EXIT_FAIL


def _converge(args, transport) -> int:
    report = args.report or _output_dir(args) / "converge.json"
    _claim([report], args.force)
    try:
        resolutions = [int(v) for v in args.resolutions.split(",")]
    except ValueError:
        raise ClientError(f"--resolutions must be comma-separated integers, got {args.resolutions!r}", EXIT_CONFIG) from None
    payload = _config_input(args)
    payload.update(resolutions=resolutions, diagnostic=args.diagnostic, threads=args.threads)
    res = transport.call("/converge", payload)
    _write(report, json.dumps(res["report"], indent=2) + "\n")
    print(json.dumps(res["report"]))
    return EXIT_OK if res["passed"] else EXIT_FAIL


def _coulomb(args, transport) -> int:
    report = args.report or _output_dir(args) / "coulomb_check.json"
    _claim([report], args.force)
    res = transport.call("/coulomb-check", _config_input(args))
    summary = {k: res[k] for k in ("passed", "q_F", "t_final", "max_drift", "max_spin", "tolerance")}
    _write(report, json.dumps(summary, indent=2) + "\n")
    print(f"max drift |Phi_0 - q_F| = {res['max_drift']:.3e} (tolerance {res['tolerance']:.0e})")
    return EXIT_OK if res["passed"] else EXIT_FAIL


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    transport = _Remote(args.server) if args.server else _Local()
    try:
        if args.command in ("run-mode", "run-coupled"):
            return _run(args, args.command.split("-")[1], transport)
        if args.command == "audit":
            return _audit(args, transport)
        if args.command == "converge":
            return _converge(args, transport)
        return _coulomb(args, transport)
    except ClientError as exc:
        print(f"rnmh {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
