"""Query interface to the opaque classifier being explained.

Every black box answers batches of encoded rows with label indices into
``schema.labels`` and counts how many instances it has been asked about.
"""

from __future__ import annotations

import json
import math
import queue
import shlex
import subprocess
import threading
import urllib.error
import urllib.request
from typing import Any, Mapping, Sequence

import numpy as np

from .data import Dataset, FeatureSchema
from .errors import ContractViolation, DataError, HandshakeError, TransportError
from .tree import DecisionTree, TreeParams, build_tree

PROTOCOL_VERSION = 1


class BlackBox:
    """Base class: subclasses implement ``_predict`` on encoded rows."""

    def __init__(self, schema: FeatureSchema):
        self.schema = schema
        self.queries = 0
        self._count_lock = threading.Lock()

    @property
    def labels(self) -> tuple[str, str]:
        return self.schema.labels

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        with self._count_lock:
            self.queries += len(X)
        if len(X) == 0:
            return np.empty(0, dtype=int)
        out = np.asarray(self._predict(X), dtype=int)
        if out.shape != (len(X),):
            raise ContractViolation(f"black box returned {out.shape[0]} labels for {len(X)} instances")
        return out

    def _predict(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __getstate__(self):
        state = self.__dict__.copy()
        state.pop("_count_lock", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._count_lock = threading.Lock()


def predict_batch(bb: BlackBox, xs: Sequence[Mapping[str, Any]]) -> list[str]:
    """Label strings for a list of ``{feature: value}`` instances."""
    X = bb.schema.encode_many(xs)
    return [bb.labels[i] for i in bb.predict(X)]


class FunctionBlackBox(BlackBox):
    """Wraps any callable mapping encoded rows to label indices."""

    def __init__(self, schema: FeatureSchema, fn):
        super().__init__(schema)
        self.fn = fn

    def _predict(self, X):
        return self.fn(X)


class ConstantBlackBox(BlackBox):
    def __init__(self, schema: FeatureSchema, label: str):
        super().__init__(schema)
        self.label = schema.label_index(label)

    def _predict(self, X):
        return np.full(len(X), self.label, dtype=int)


class BaggedTreeEnsemble(BlackBox):
    """Majority vote of decision trees; a tied vote goes to the first label."""

    def __init__(self, schema: FeatureSchema, trees: Sequence[DecisionTree]):
        if not trees:
            raise ValueError("an ensemble needs at least one tree")
        super().__init__(schema)
        self.trees = list(trees)

    @property
    def tree_count(self) -> int:
        return len(self.trees)

    def _predict(self, X):
        votes = np.zeros(len(X), dtype=int)
        for t in self.trees:
            votes += t.predict(X)
        return (2 * votes > len(self.trees)).astype(int)


def train_bagged_ensemble(
    ds: Dataset,
    tree_count: int = 100,
    seed: int = 0,
    bootstrap: bool = True,
    max_features: int | None | str = "sqrt",
    min_leaf: int = 1,
) -> BaggedTreeEnsemble:
    if len(ds) == 0:
        raise DataError("cannot train an ensemble on an empty dataset")
    if not ds.is_labeled:
        raise DataError("training rows must all be labeled")
    if ds.has_missing:
        raise DataError("impute missing values before training")
    if tree_count < 1:
        raise ValueError("tree_count must be >= 1")
    m = ds.schema.m
    k = math.ceil(math.sqrt(m)) if max_features == "sqrt" else max_features
    params = TreeParams(min_leaf=min_leaf, max_features=k)
    n = len(ds)
    trees = []
    for child in np.random.SeedSequence(seed).spawn(tree_count):
        rng = np.random.default_rng(child)
        idx = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        trees.append(build_tree(ds.X[idx], ds.y[idx], ds.schema, params, rng))
    return BaggedTreeEnsemble(ds.schema, trees)


# ---------------------------------------------------------------- wire protocol


def encode_request(schema: FeatureSchema, X: np.ndarray, request_id: int) -> dict:
    rows = []
    for row in X:
        rows.append([schema.decode_value(j, v) for j, v in enumerate(row)])
    return {"type": "predict", "id": request_id, "instances": rows}


class _WireBlackBox(BlackBox):
    """Shared handshake / request logic; subclasses move one message each way."""

    def __init__(self, schema: FeatureSchema):
        super().__init__(schema)
        self._next_id = 0
        self._io_lock = threading.Lock()
        self._label_map: dict[str, int] = {}

    def _exchange(self, message: dict) -> dict:
        raise NotImplementedError

    def _handshake(self) -> None:
        reply = self._exchange({"type": "hello", "version": PROTOCOL_VERSION, "features": self.schema.names})
        if reply.get("type") == "error":
            raise HandshakeError(f"black box refused handshake: {reply.get('message', reply)}")
        if reply.get("type") != "ready":
            raise HandshakeError(f"expected a 'ready' message, got {reply.get('type')!r}")
        version = reply.get("version", PROTOCOL_VERSION)
        if version != PROTOCOL_VERSION:
            raise HandshakeError(f"protocol version mismatch: ours {PROTOCOL_VERSION}, theirs {version}")
        labels = reply.get("labels")
        if not isinstance(labels, list) or sorted(map(str, labels)) != sorted(self.schema.labels):
            raise HandshakeError(f"black box labels {labels!r} differ from schema labels {list(self.schema.labels)}")
        self._label_map = {lab: i for i, lab in enumerate(self.schema.labels)}

    def _predict(self, X):
        with self._io_lock:
            self._next_id += 1
            rid = self._next_id
            reply = self._exchange(encode_request(self.schema, X, rid))
        if reply.get("type") != "labels":
            raise ContractViolation(f"expected a 'labels' message, got {reply.get('type')!r}")
        if reply.get("id") != rid:
            raise ContractViolation(f"response id {reply.get('id')!r} does not match request id {rid}")
        labels = reply.get("labels")
        if not isinstance(labels, list) or len(labels) != len(X):
            got = len(labels) if isinstance(labels, list) else type(labels).__name__
            raise ContractViolation(f"expected {len(X)} labels, got {got}")
        try:
            return np.array([self._label_map[str(lab)] for lab in labels], dtype=int)
        except KeyError as exc:
            raise ContractViolation(f"unknown label {exc.args[0]!r} in response") from None


def _parse_line(line: str) -> dict:
    try:
        msg = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ContractViolation(f"malformed response line: {exc}") from None
    if not isinstance(msg, dict):
        raise ContractViolation("response is not a JSON object")
    return msg


class SubprocessBlackBox(_WireBlackBox):
    """Talks the line protocol to a child process over stdin/stdout."""

    def __init__(self, schema: FeatureSchema, command: str | Sequence[str], timeout: float = 60.0):
        super().__init__(schema)
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = timeout
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise TransportError(f"cannot start black box {self.command!r}: {exc}") from None
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        try:
            self._handshake()
        except Exception:
            self.close()
            raise

    def _pump(self) -> None:
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _exchange(self, message):
        try:
            self._proc.stdin.write(json.dumps(message) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError) as exc:
            raise TransportError(f"black box process is gone: {exc}") from None
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise TransportError(f"black box did not answer within {self.timeout} s") from None
        if line is None:
            raise TransportError("black box closed its output stream")
        return _parse_line(line)

    def close(self):
        proc = getattr(self, "_proc", None)
        if proc is None or proc.poll() is not None:
            return
        try:
            proc.stdin.close()
        except OSError:
            pass
        try:
            proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()

    def __getstate__(self):
        raise TypeError("a subprocess black box cannot be pickled")


class HttpBlackBox(_WireBlackBox):
    """Same messages, each POSTed as a JSON body to one endpoint."""

    def __init__(self, schema: FeatureSchema, url: str, timeout: float = 60.0):
        super().__init__(schema)
        self.url = url
        self.timeout = timeout
        self._handshake()

    def _exchange(self, message):
        body = json.dumps(message).encode("utf-8")
        req = urllib.request.Request(self.url, data=body, headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = resp.read().decode("utf-8")
        except urllib.error.HTTPError as exc:
            raise TransportError(f"HTTP {exc.code} from {self.url}") from None
        except (urllib.error.URLError, OSError) as exc:
            raise TransportError(f"cannot reach {self.url}: {exc}") from None
        return _parse_line(payload)


def connect_external(spec: str, schema: FeatureSchema, timeout: float = 60.0) -> BlackBox:
    """Open ``cmd:<command line>`` or ``http://...`` / ``http:<url>`` black boxes."""
    if spec.startswith("cmd:"):
        return SubprocessBlackBox(schema, spec[4:], timeout)
    if spec.startswith(("http://", "https://")):
        return HttpBlackBox(schema, spec, timeout)
    if spec.startswith("http:"):
        return HttpBlackBox(schema, spec[5:], timeout)
    return SubprocessBlackBox(schema, spec, timeout)

