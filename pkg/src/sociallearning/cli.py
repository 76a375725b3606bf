"""Command-line client for the service.

By default requests run against an in-process copy of the app; --server
points the same commands at a remote instance.  Exit codes: 0 success,
2 configuration or validation problems, 3 runtime failures.
"""
from __future__ import annotations

import argparse
import json
import sys

import httpx

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    import warnings
    with warnings.catch_warnings():
        # starlette suggests a successor package that is not published yet
        warnings.filterwarnings("ignore", message=".*httpx2.*")
        from starlette.testclient import TestClient

    from .service import app
    return TestClient(app, raise_server_exceptions=False)


def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config {path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _post(client: httpx.Client, url: str, payload: dict):
    try:
        response = client.post(url, json=payload)
    except httpx.HTTPError as exc:
        print(f"error: request failed: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_RUNTIME)
    if response.status_code == 422:
        detail = response.json().get("detail")
        print(f"error: {detail}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)
    if response.status_code >= 400:
        try:
            detail = response.json().get("detail")
        except json.JSONDecodeError:
            detail = response.text
        print(f"error: {detail}", file=sys.stderr)
        raise SystemExit(EXIT_RUNTIME)
    return response.json()


def _emit(payload) -> None:
    json.dump(payload, sys.stdout, indent=2)
    sys.stdout.write("\n")


def cmd_validate(args) -> int:
    with _client(args.server) as client:
        out = _post(client, "/validate", {"config": _load_config(args.config)})
    _emit(out)
    return EXIT_OK if out["valid"] else EXIT_CONFIG


def cmd_simulate(args) -> int:
    payload = {"config": _load_config(args.config), "seed": args.seed,
               "out_dir": args.out}
    with _client(args.server) as client:
        _emit(_post(client, "/simulate", payload))
    return EXIT_OK


def cmd_analyze(args) -> int:
    payload = {"config": _load_config(args.config), "trace_path": args.trace}
    with _client(args.server) as client:
        _emit(_post(client, "/analyze", payload))
    return EXIT_OK


def cmd_ldp(args) -> int:
    payload = {"config": _load_config(args.config), "epsilons": args.epsilons}
    with _client(args.server) as client:
        _emit(_post(client, "/ldp", payload))
    return EXIT_OK


def cmd_reproduce(args) -> int:
    payload = {"figure_id": args.figure_id, "out_dir": args.out}
    with _client(args.server) as client:
        reports = _post(client, "/reproduce", payload)
    _emit(reports)
    return EXIT_OK if all(r["passed"] for r in reports) else EXIT_RUNTIME


def cmd_scenarios(args) -> int:
    with _client(args.server) as client:
        _emit(client.get("/scenarios").json())
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sociallearn",
        description="Simulate and analyze distributed hypothesis testing "
                    "over directed networks.")
    parser.add_argument("--server", default=None,
                        help="base URL of a running service; default runs "
                             "in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario config")
    p.add_argument("config")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("simulate", help="run a scenario")
    p.add_argument("config")
    p.add_argument("--out", default=None, help="directory for the trace CSV")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("analyze", help="fit rates against predictions")
    p.add_argument("trace", nargs="?", default=None,
                   help="trace CSV from simulate; omitted means re-run")
    p.add_argument("config")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("ldp", help="tail exponents for a scenario")
    p.add_argument("config")
    p.add_argument("--epsilons", type=float, nargs="+", required=True)
    p.set_defaults(fn=cmd_ldp)

    p = sub.add_parser("reproduce", help="rebuild a headline figure")
    p.add_argument("figure_id", help="fig2..fig11 or 'all'")
    p.add_argument("--out", default="figures")
    p.set_defaults(fn=cmd_reproduce)

    p = sub.add_parser("scenarios", help="list bundled scenarios")
    p.set_defaults(fn=cmd_scenarios)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
