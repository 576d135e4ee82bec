"""Command-line client for the solver service.

The default mode spins the HTTP app up in-process, so `momocp --builtin ...`
needs no running server; `--server URL` targets a remote instance instead and
`--serve` runs one.
"""

from __future__ import annotations

import argparse
import asyncio
import os
import sys

import httpx

from .errors import IoError
from .problems import load_config
from .runner import REPORT_FORMATS, format_report, report_from_dict


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="momocp",
        description="Certified lower bounds for scalar optimal control problems "
        "with unbounded controls.",
    )
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--builtin", metavar="NAME", default="",
                        help="a shipped problem: lavrentiev or brachistochrone")
    source.add_argument("--config", metavar="PATH", default="",
                        help="YAML problem description")
    parser.add_argument("--orders", metavar="LIST", default="min",
                        help='moment orders to solve: "4", "1,2,3", "1..3", or "min"')
    parser.add_argument("--report", choices=REPORT_FORMATS, default="table")
    parser.add_argument("--export-sdpa", metavar="DIR", default="",
                        help="write one SDPA sparse file per solved order into DIR")
    parser.add_argument("--oracle", metavar="N,LEVELS", default="",
                        help="cross-check with a grid search of N time steps and "
                        "LEVELS state intervals")
    parser.add_argument("--tol", metavar="GAP", type=float, default=0.0,
                        help="stop the sweep once the oracle gap (or the change "
                        "between successive bounds) is at most GAP")
    parser.add_argument("--backend", metavar="NAME", default="",
                        help="SDP backend to use (default: best available)")
    parser.add_argument("--server", metavar="URL", default="",
                        help="send the request to a running service")
    parser.add_argument("--serve", action="store_true",
                        help="run the HTTP service instead of solving")
    parser.add_argument("--host", default="127.0.0.1", help="bind address for --serve")
    parser.add_argument("--port", type=int, default=8000, help="port for --serve")
    return parser


def _oracle_pair(parser: argparse.ArgumentParser, text: str):
    try:
        n_text, levels_text = text.split(",")
        return {"n": int(n_text), "levels": int(levels_text)}
    except ValueError:
        parser.error(f"--oracle expects N,LEVELS with two integers, got {text!r}")


def _payload(parser: argparse.ArgumentParser, args: argparse.Namespace) -> dict:
    payload: dict = {"orders": args.orders}
    if args.builtin:
        payload["builtin"] = args.builtin
    else:
        payload["problem"] = load_config(args.config)
    if args.oracle:
        payload["oracle"] = _oracle_pair(parser, args.oracle)
    if args.tol:
        payload["tol"] = args.tol
    if args.backend:
        payload["settings"] = {"backend": args.backend}
    if args.export_sdpa:
        payload["include_sdpa"] = True
    return payload


def _post_in_process(payload: dict) -> httpx.Response:
    from .service import app

    async def go():
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://momocp.internal", timeout=None
        ) as client:
            return await client.post("/solve", json=payload)

    return asyncio.run(go())


def _post_remote(server: str, payload: dict) -> httpx.Response:
    with httpx.Client(base_url=server, timeout=None) as client:
        return client.post("/solve", json=payload)


def _describe_failure(response: httpx.Response) -> str:
    try:
        detail = response.json()["detail"]
    except Exception:
        return f"HTTP {response.status_code}: {response.text[:500]}"
    if isinstance(detail, dict) and "message" in detail:
        stage = detail.get("stage", "request")
        error = detail.get("error", "error")
        return f"{stage} stage failed ({error}): {detail['message']}"
    return f"HTTP {response.status_code}: {detail}"


def _write_sdpa_files(data: dict, directory: str) -> None:
    os.makedirs(directory, exist_ok=True)
    for entry in data["orders"]:
        text = entry.get("sdpa")
        if text is None:
            continue
        path = os.path.join(directory, f"{data['label']}_order{entry['order']}.dat-s")
        with open(path, "w", encoding="ascii") as fh:
            fh.write(text)
        print(f"wrote {path}", file=sys.stderr)
        entry["sdpa"] = None


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.serve:
        import uvicorn

        from .service import app

        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    if not args.builtin and not args.config:
        parser.error("one of --builtin or --config is required (or --serve)")

    try:
        payload = _payload(parser, args)
    except IoError as exc:
        print(exc, file=sys.stderr)
        return 2
    try:
        if args.server:
            response = _post_remote(args.server, payload)
        else:
            response = _post_in_process(payload)
    except httpx.HTTPError as exc:
        print(f"cannot reach the service: {exc}", file=sys.stderr)
        return 2

    if response.status_code != 200:
        print(_describe_failure(response), file=sys.stderr)
        return 2

    data = response.json()
    all_solved = bool(data.get("all_solved"))
    if args.export_sdpa:
        _write_sdpa_files(data, args.export_sdpa)
    print(format_report(report_from_dict(data), args.report))
    return 0 if all_solved else 1


if __name__ == "__main__":
    sys.exit(main())
