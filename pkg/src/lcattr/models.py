"""Query-only access to regression models.

Built-in models are vectorized numpy functions; external models are child
processes spoken to over a newline-delimited JSON protocol:

    request  {"id": 1, "x": [0.1, 0.2]}          reply {"id": 1, "f": 0.97}
    request  {"id": 2, "X": [[...], [...]]}      reply {"id": 2, "F": [f0, f1]}
    failure                                      reply {"id": 2, "error": "msg"}

One request is in flight at a time. Replies with unknown ids are skipped
(stale answers after a timeout). A request that times out is retried once
with a fresh id; the second failure raises ExternalModelFailure.

Every model answers single queries through its batch path, so repeated
and vectorized evaluation are bit-identical by construction.
"""

from __future__ import annotations

import json
import math
import queue
import shlex
import subprocess
import threading
import time
from urllib.parse import parse_qs

import numpy as np

from .core import Standardizer
from .errors import DimensionMismatch, ExternalModelFailure


class Model:
    """Minimal query interface; subclasses implement query_batch."""

    kind: str = "?"
    dim: int | None = None  # None means the width is not known up front

    def query_batch(self, X) -> np.ndarray:
        raise NotImplementedError

    def query(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(self.query_batch(x[None, :])[0])

    def _check_width(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise DimensionMismatch(f"expected a 2-D batch, got shape {X.shape}")
        if self.dim is not None and X.shape[1] != self.dim:
            raise DimensionMismatch(
                f"{self.kind} model expects width {self.dim}, got {X.shape[1]}")
        return X


class MexicanHat(Model):
    """f(x) = (1 - |x|^2/2) exp(-|x|^2/2) on the plane; peak value 1 at 0."""

    kind = "mexican_hat"
    dim = 2

    def query_batch(self, X) -> np.ndarray:
        X = self._check_width(X)
        r2 = np.sum(X * X, axis=1)
        return (1.0 - 0.5 * r2) * np.exp(-0.5 * r2)


class LinearModel(Model):
    kind = "linear"

    def __init__(self, weights, intercept: float = 0.0):
        self.weights = np.asarray(weights, dtype=float)
        if self.weights.ndim != 1 or len(self.weights) == 0:
            raise DimensionMismatch("weights must be a nonempty vector")
        self.intercept = float(intercept)
        self.dim = len(self.weights)

    def query_batch(self, X) -> np.ndarray:
        X = self._check_width(X)
        # per-row reduction keeps batch results bit-identical to single
        # queries; a BLAS matvec rounds differently depending on batch size
        return (X * self.weights).sum(axis=1) + self.intercept


class PiecewiseStep(Model):
    """Constant levels along one axis, switching at ascending breakpoints."""

    kind = "piecewise_step"

    def __init__(self, axis: int, breakpoints, levels, dim: int = 2):
        self.axis = int(axis)
        self.breakpoints = np.asarray(breakpoints, dtype=float)
        self.levels = np.asarray(levels, dtype=float)
        if np.any(np.diff(self.breakpoints) <= 0):
            raise ValueError("breakpoints must be strictly ascending")
        if len(self.levels) != len(self.breakpoints) + 1:
            raise ValueError("need exactly len(breakpoints)+1 levels")
        self.dim = int(dim)
        if not 0 <= self.axis < self.dim:
            raise DimensionMismatch(f"axis {axis} out of range for width {dim}")

    def query_batch(self, X) -> np.ndarray:
        X = self._check_width(X)
        idx = np.searchsorted(self.breakpoints, X[:, self.axis], side="right")
        return self.levels[idx]


class StandardizedModel(Model):
    """View of a model re-parameterized in standardized coordinates."""

    kind = "standardized"

    def __init__(self, base: Model, standardizer: Standardizer):
        self.base = base
        self.standardizer = standardizer
        self.dim = standardizer.m

    def query_batch(self, Z) -> np.ndarray:
        Z = self._check_width(Z)
        return self.base.query_batch(self.standardizer.inverse(Z))


_POLL = 0.05  # seconds between liveness checks while waiting on a reply


class ExternalModel(Model):
    """Adapter around a child process speaking the JSON-lines protocol.

    The process is spawned lazily on first query and kept for the handle's
    lifetime. Responses are memoized per input vector, so models that are
    not deterministic still present a deterministic view within a session.
    The handle is thread-safe; requests are serialized by a lock.
    """

    kind = "external"

    def __init__(self, command: str | list[str], *, timeout: float = 30.0, dim: int | None = None):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.command:
            raise ValueError("external model command is empty")
        self.timeout = float(timeout)
        self.dim = dim
        self._proc: subprocess.Popen | None = None
        self._replies: queue.Queue = queue.Queue()
        self._lock = threading.Lock()
        self._cache: dict[bytes, float] = {}
        self._counter = 0

    def clone(self) -> "ExternalModel":
        """Fresh handle (own process, own cache) with the same settings."""
        return ExternalModel(list(self.command), timeout=self.timeout, dim=self.dim)

    # -- process plumbing ---------------------------------------------------

    def _ensure_started(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            return
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as e:
            raise ExternalModelFailure(f"could not start {self.command!r}: {e}") from e
        self._replies = queue.Queue()
        t = threading.Thread(target=self._pump, args=(self._proc, self._replies), daemon=True)
        t.start()

    @staticmethod
    def _pump(proc: subprocess.Popen, out: queue.Queue) -> None:
        assert proc.stdout is not None
        for line in proc.stdout:
            out.put(line)
        out.put(None)  # EOF marker

    def _roundtrip(self, payload: dict) -> dict:
        """Send one request, wait for the matching reply. Raises TimeoutError."""
        self._ensure_started()
        assert self._proc is not None and self._proc.stdin is not None
        try:
            self._proc.stdin.write(json.dumps(payload) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise TimeoutError(f"model process pipe closed: {e}")
        deadline = time.monotonic() + self.timeout
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError(f"no reply within {self.timeout}s")
            try:
                line = self._replies.get(timeout=min(_POLL, remaining))
            except queue.Empty:
                continue
            if line is None:
                raise TimeoutError("model process closed its stdout")
            try:
                reply = json.loads(line)
            except json.JSONDecodeError:
                continue  # stray non-protocol output; the timeout is the backstop
            if not isinstance(reply, dict) or reply.get("id") != payload["id"]:
                continue  # stale answer from a timed-out request
            return reply

    def _request(self, body: dict) -> dict:
        """One attempt plus one retry; maps persistent failure to an error."""
        for attempt in (0, 1):
            self._counter += 1
            payload = {"id": self._counter, **body}
            try:
                return self._roundtrip(payload)
            except TimeoutError as e:
                last = e
                # a wedged process will not recover; restart before retrying
                if self._proc is not None and self._proc.poll() is not None:
                    self._proc = None
        raise ExternalModelFailure(f"external model failed twice: {last}")

    # -- queries ------------------------------------------------------------

    def query_batch(self, X) -> np.ndarray:
        X = self._check_width(X)
        keys = [np.ascontiguousarray(row).tobytes() for row in X]
        missing: list[int] = [i for i, k in enumerate(keys) if k not in self._cache]
        # dedupe while preserving order so the server sees each point once
        fresh: dict[bytes, int] = {}
        rows: list[list[float]] = []
        for i in missing:
            if keys[i] not in fresh:
                fresh[keys[i]] = len(rows)
                rows.append([float(v) for v in X[i]])
        if rows:
            with self._lock:
                reply = self._request({"X": rows})
            if "error" in reply:
                raise ExternalModelFailure(f"model reported: {reply['error']}")
            values = reply.get("F")
            if not isinstance(values, list) or len(values) != len(rows):
                raise ExternalModelFailure(
                    f"batch reply has {len(values) if isinstance(values, list) else 'no'} "
                    f"values for {len(rows)} inputs")
            for k, pos in fresh.items():
                v = values[pos]
                if not isinstance(v, (int, float)) or not math.isfinite(v):
                    raise ExternalModelFailure(f"non-finite model value {v!r} at row {pos}")
                self._cache[k] = float(v)
        return np.array([self._cache[k] for k in keys])

    def query(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.ndim != 1:
            raise DimensionMismatch(f"expected a flat vector, got shape {x.shape}")
        key = np.ascontiguousarray(x).tobytes()
        if key not in self._cache:
            with self._lock:
                reply = self._request({"x": [float(v) for v in x]})
            if "error" in reply:
                raise ExternalModelFailure(f"model reported: {reply['error']}")
            v = reply.get("f")
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ExternalModelFailure(f"non-finite model value {v!r}")
            self._cache[key] = float(v)
        return self._cache[key]

    # -- lifecycle ----------------------------------------------------------

    def close(self) -> None:
        proc, self._proc = self._proc, None
        if proc is None:
            return
        try:
            if proc.stdin:
                proc.stdin.close()
            proc.terminate()
            proc.wait(timeout=2)
        except Exception:
            try:
                proc.kill()
            except Exception:
                pass

    def __enter__(self) -> "ExternalModel":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v != ""]


def parse_model_spec(spec: str) -> Model:
    """Build a model from a selection string.

    builtin:mexican_hat
    builtin:linear?w=2,-3&b=1
    builtin:piecewise_step?axis=0&breakpoints=0,1&levels=0,1,2&m=2
    exec:python server.py --flag
    """
    scheme, _, rest = spec.partition(":")
    if scheme == "exec":
        if not rest.strip():
            raise ValueError("exec: requires a command line")
        return ExternalModel(rest)
    if scheme != "builtin":
        raise ValueError(f"unknown model scheme {scheme!r} in {spec!r}")
    name, _, query = rest.partition("?")
    args = {k: v[-1] for k, v in parse_qs(query, keep_blank_values=True).items()}
    try:
        if name == "mexican_hat":
            return MexicanHat()
        if name == "linear":
            return LinearModel(_floats(args["w"]), float(args.get("b", 0.0)))
        if name == "piecewise_step":
            breakpoints = _floats(args["breakpoints"])
            levels = _floats(args["levels"])
            return PiecewiseStep(
                axis=int(args.get("axis", 0)),
                breakpoints=breakpoints,
                levels=levels,
                dim=int(args.get("m", 2)),
            )
    except KeyError as e:
        raise ValueError(f"model spec {spec!r} is missing parameter {e.args[0]!r}") from e
    raise ValueError(f"unknown builtin model {name!r}")
