"""Reference black-box server for the line-delimited JSON protocol.

Run as ``python -m localrules.stub``. It answers on stdin/stdout by default,
or over HTTP with ``--http PORT``. Models:

  --constant LABEL           always LABEL
  --threshold FEATURE:VALUE  second label when FEATURE > VALUE, else first
  --data/--schema            the reference bagged ensemble, trained exactly as
                             the ``builtin:ensemble`` black box of the CLI

``--fault`` injects protocol errors for testing adapters.
"""

from __future__ import annotations

import argparse
import json
import sys
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .blackbox import PROTOCOL_VERSION

FAULTS = ("short", "badid", "garbage", "badlabel", "exit", "silent")


class StubModel:
    def __init__(self, labels, predict_rows, fault=None, version=PROTOCOL_VERSION):
        self.labels = list(labels)
        self.predict_rows = predict_rows
        self.fault = fault
        self.version = version
        self.features: list[str] = []

    def handle(self, msg: dict) -> dict | str | None:
        kind = msg.get("type")
        if kind == "hello":
            self.features = list(msg.get("features", []))
            return {"type": "ready", "labels": self.labels, "version": self.version}
        if kind != "predict":
            return {"type": "error", "message": f"unknown message type {kind!r}"}
        rows = msg.get("instances", [])
        labels = self.predict_rows(rows, self.features)
        if self.fault == "short":
            labels = labels[:-1]
        elif self.fault == "badlabel":
            labels = ["???"] * len(labels)
        elif self.fault == "garbage":
            return "this is not json"
        elif self.fault == "exit":
            sys.exit(0)
        elif self.fault == "silent":
            return None
        rid = msg.get("id")
        if self.fault == "badid":
            rid = (rid or 0) + 1000
        return {"type": "labels", "id": rid, "labels": labels}


def _constant(label):
    return lambda rows, features: [label] * len(rows)


def _threshold(spec, labels):
    feature, value = spec.rsplit(":", 1)
    value = float(value)

    def predict(rows, features):
        j = features.index(feature)
        return [labels[1] if float(r[j]) > value else labels[0] for r in rows]

    return predict


def _ensemble(args):
    from .harness import reference_setup

    setup = reference_setup(args.data, args.schema, trees=args.trees, seed=args.seed)
    bb, schema = setup.blackbox, setup.schema

    def predict(rows, features):
        if not rows:
            return []
        order = [features.index(n) for n in schema.names] if features else range(schema.m)
        X = schema.encode_many([[r[k] for k in order] for r in rows])
        return [schema.labels[i] for i in bb.predict(X)]

    return schema.labels, predict


def build_model(args) -> StubModel:
    if args.data:
        labels, fn = _ensemble(args)
    else:
        labels = args.labels.split(",")
        if len(labels) != 2:
            raise SystemExit("--labels needs exactly two comma-separated labels")
        fn = _threshold(args.threshold, labels) if args.threshold else _constant(args.constant or labels[0])
    return StubModel(labels, fn, args.fault, args.version)


def serve_stdio(model: StubModel, stdin=sys.stdin, stdout=sys.stdout) -> None:
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            reply = {"type": "error", "message": "malformed request"}
        else:
            reply = model.handle(msg)
        if reply is None:
            continue
        stdout.write((reply if isinstance(reply, str) else json.dumps(reply)) + "\n")
        stdout.flush()


def make_http_server(model: StubModel, port: int = 0, host: str = "127.0.0.1") -> ThreadingHTTPServer:
    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            size = int(self.headers.get("Content-Length", 0))
            try:
                msg = json.loads(self.rfile.read(size))
                reply = model.handle(msg)
            except json.JSONDecodeError:
                reply = {"type": "error", "message": "malformed request"}
            body = (reply if isinstance(reply, str) else json.dumps(reply)).encode()
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, *args):
            pass

    return ThreadingHTTPServer((host, port), Handler)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="python -m localrules.stub", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--labels", default="0,1", help="two labels, comma separated (non-ensemble models)")
    ap.add_argument("--constant")
    ap.add_argument("--threshold")
    ap.add_argument("--data")
    ap.add_argument("--schema")
    ap.add_argument("--trees", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--fault", choices=FAULTS)
    ap.add_argument("--version", type=int, default=PROTOCOL_VERSION)
    ap.add_argument("--http", type=int, metavar="PORT")
    args = ap.parse_args(argv)
    if bool(args.data) != bool(args.schema):
        ap.error("--data and --schema go together")
    model = build_model(args)
    if args.http is not None:
        server = make_http_server(model, args.http)
        print(f"listening on http://127.0.0.1:{server.server_address[1]}/", file=sys.stderr, flush=True)
        server.serve_forever()
    else:
        serve_stdio(model)
    return 0


if __name__ == "__main__":
    sys.exit(main())
