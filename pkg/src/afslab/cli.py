"""``afslab`` command line: a thin client over the HTTP service.

By default requests go to an in-process instance of the app; ``--server URL``
sends them to a running one instead.  Settings come from built-in defaults,
then a ``--config`` file of ``key = value`` lines, then explicit flags.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
import warnings
from pathlib import Path

import httpx

COMMANDS = ["paths", "solve", "sweep-range", "sweep-sof", "monte-carlo-sof", "prob-ablation", "export-milp"]
EXIT_OK, EXIT_FAILURE, EXIT_INVALID, EXIT_GUARD = 0, 1, 2, 3


def _bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_budgets(text: str) -> list[float]:
    """``"a..b"`` (inclusive integer range) or a comma-separated list."""
    text = str(text).strip()
    if ".." in text:
        lo, hi = (int(x) for x in text.split("..", 1))
        if hi < lo:
            raise ValueError(f"empty budget range {text!r}")
        return [float(b) for b in range(lo, hi + 1)]
    return [float(x) for x in text.split(",") if x.strip()]


def _floats(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if x.strip()]


# option name -> converter for values read from the config file or the command line
OPTIONS = {
    "network": str, "probs": str, "budget": float, "budgets": parse_budgets, "range": float, "sof": float,
    "k": int, "solver": str, "seeds": int, "seed": int, "out": str, "server": str, "export_milp": str,
    "population": int, "generations": int, "children": int, "mutation_rate": float, "crossover": str,
    "ranges": _floats, "sofs": _floats, "samples": int, "per_node": _bool, "cdf_budget": float,
    "breakdown_budget": float, "plan_budget": float, "node_limit": int, "denominator": str,
}
CLIENT_ONLY = {"network", "probs", "budget", "budgets", "out", "server", "export_milp"}


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="afslab", description="Refuelling-station location experiments.")
    p.add_argument("command", choices=COMMANDS + ["serve"])
    p.add_argument("--config", help="key = value file; explicit flags win")
    p.add_argument("--network", help="network file (default: embedded Sioux Falls)")
    p.add_argument("--probs", help="node_id,probability CSV")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--budget", help="single budget")
    group.add_argument("--budgets", help="budget range a..b or list a,b,c")
    p.add_argument("--range", help="vehicle range in miles")
    p.add_argument("--sof", help="initial fuel as a fraction of the range")
    p.add_argument("--k", help="paths per O-D pair")
    p.add_argument("--solver", choices=["exact", "ga", "both"])
    p.add_argument("--seeds", help="GA runs per budget")
    p.add_argument("--seed", help="base random seed")
    p.add_argument("--out", help="output directory (default: results)")
    p.add_argument("--server", help="service URL; default runs the app in-process")
    p.add_argument("--export-milp", dest="export_milp", help="also write the MILP model to this path")
    p.add_argument("--population")
    p.add_argument("--generations")
    p.add_argument("--children")
    p.add_argument("--mutation-rate", dest="mutation_rate")
    p.add_argument("--crossover", choices=["gene", "whole"])
    p.add_argument("--ranges", help="comma-separated ranges for sweep-range")
    p.add_argument("--sofs", help="comma-separated initial-fuel fractions")
    p.add_argument("--samples", help="Monte Carlo draws per budget")
    p.add_argument("--per-node", dest="per_node", action="store_const", const="true",
                   help="draw initial fuel independently per origin")
    p.add_argument("--cdf-budget", dest="cdf_budget")
    p.add_argument("--breakdown-budget", dest="breakdown_budget")
    p.add_argument("--plan-budget", dest="plan_budget")
    p.add_argument("--node-limit", dest="node_limit", help="branch-and-bound node guard")
    p.add_argument("--denominator", choices=["nodes", "destinations"])
    p.add_argument("--host", default="127.0.0.1", help=argparse.SUPPRESS)
    p.add_argument("--port", type=int, default=8000, help=argparse.SUPPRESS)
    return p


def read_config(path: str) -> dict[str, str]:
    text = Path(path).read_text()
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    cp.read_string("[afslab]\n" + text)
    raw = {k.replace("-", "_"): v for k, v in cp["afslab"].items()}
    unknown = sorted(set(raw) - set(OPTIONS))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    return raw


def resolve_settings(args: argparse.Namespace) -> dict:
    """Merge config file and flags, flags taking precedence, and convert types."""
    raw = read_config(args.config) if args.config else {}
    flags = {k: getattr(args, k) for k in OPTIONS if getattr(args, k, None) is not None}
    if "budget" in flags or "budgets" in flags:
        raw.pop("budget", None)
        raw.pop("budgets", None)
    if "budget" in raw and "budgets" in raw:
        raise UsageError("config sets both budget and budgets")
    merged = {**raw, **flags}
    out = {}
    for key, value in merged.items():
        try:
            out[key] = OPTIONS[key](value)
        except ValueError as exc:
            raise UsageError(f"bad value for {key}: {exc}") from None
    return out


def build_request(settings: dict) -> dict:
    body = {k: v for k, v in settings.items() if k not in CLIENT_ONLY}
    for key in ("network", "probs"):
        if key in settings:
            try:
                body[key] = Path(settings[key]).read_text()
            except OSError as exc:
                raise UsageError(f"cannot read {key} file: {exc}") from None
    if "budget" in settings:
        body["budgets"] = [settings["budget"]]
    elif "budgets" in settings:
        body["budgets"] = settings["budgets"]
    return body


def make_client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient
    from .service.app import app
    return TestClient(app)


def _error_text(resp: httpx.Response) -> str:
    try:
        detail = resp.json().get("detail", resp.text)
    except ValueError:
        return resp.text
    if isinstance(detail, list):
        return "; ".join(f"{'.'.join(str(x) for x in d.get('loc', []))}: {d.get('msg')}" for d in detail)
    return str(detail)


def _exit_for(status: int) -> int:
    if status == 422:
        return EXIT_INVALID
    if status == 409:
        return EXIT_GUARD
    return EXIT_FAILURE


def write_files(out_dir: Path, files: dict[str, str]) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in files.items():
        path = out_dir / name
        path.write_text(text)
        written.append(path)
    return written


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    if args.command == "serve":
        import uvicorn
        uvicorn.run("afslab.service.app:app", host=args.host, port=args.port)
        return EXIT_OK
    try:
        settings = resolve_settings(args)
        body = build_request(settings)
    except (UsageError, OSError, configparser.Error) as exc:
        print(f"afslab: {exc}", file=sys.stderr)
        return EXIT_INVALID

    with make_client(settings.get("server")) as client:
        resp = client.post(f"/experiments/{args.command}", json=body)
        if resp.status_code != 200:
            print(f"afslab: {_error_text(resp)}", file=sys.stderr)
            return _exit_for(resp.status_code)
        result = resp.json()
        files = dict(result["files"])
        milp_path = settings.get("export_milp")
        if milp_path and args.command != "export-milp":
            extra = client.post("/experiments/export-milp", json=body)
            if extra.status_code != 200:
                print(f"afslab: {_error_text(extra)}", file=sys.stderr)
                return _exit_for(extra.status_code)
            Path(milp_path).write_text(extra.json()["files"]["model.lp"])
        elif milp_path:
            Path(milp_path).write_text(files["model.lp"])

    written = write_files(Path(settings.get("out", "results")), files)
    print(json.dumps({"command": args.command, "seconds": round(result["seconds"], 3),
                      "summary": result["summary"], "files": [str(p) for p in written]}, indent=2))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
