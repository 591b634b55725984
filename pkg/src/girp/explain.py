"""Perturbation-based local explanation against a line-delimited JSON model server.

The protocol, one UTF-8 JSON object per line:

  client -> {"type": "hello", "n_features": N}
  server -> {"type": "ready"}
  client -> {"type": "predict", "id": k, "rows": [[v1, ..., vN], ...]}
  server -> {"type": "scores", "id": k, "scores": [s1, ...]}

Categorical values travel as their level labels; binary and ordinal values as
numbers. Any other message is a protocol violation.
"""

from __future__ import annotations

import itertools
import json
import math
import os
import select as _select
import shlex
import socket
import subprocess
from dataclasses import dataclass

import numpy as np

from .dataset import BINARY, CATEGORICAL, ContributionMatrix, FeatureTable

LEAVE_ONE_OUT = "leave_one_out"
MASK_SAMPLING = "mask_sampling"


class EndpointError(RuntimeError):
    """Failure talking to the model endpoint. `row` is set when the failure
    happened while explaining a specific sample."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class EndpointClosed(EndpointError):
    pass


class EndpointTimeout(EndpointError):
    pass


class ProtocolError(EndpointError):
    pass


class NonFiniteScore(EndpointError):
    pass


@dataclass(frozen=True)
class PerturbationPolicy:
    """How to perturb a sample and turn score changes into contributions.

    baseline holds the per-column replacement value in internal encoding
    (binary 0, ordinal build-column mean, categorical mode by default).
    mask_probability is the chance a coordinate is replaced in mask sampling;
    when num_samples covers all 2^N masks the full design is enumerated instead
    of sampled.
    """

    baseline: tuple[float, ...]
    mode: str = LEAVE_ONE_OUT
    num_samples: int = 200
    mask_probability: float = 0.5
    ridge: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.mode not in (LEAVE_ONE_OUT, MASK_SAMPLING):
            raise ValueError(f"unknown perturbation mode {self.mode!r}")
        if not 0.0 < self.mask_probability < 1.0:
            raise ValueError("mask_probability must be in (0, 1)")
        if self.ridge < 0:
            raise ValueError("ridge must be nonnegative")

    @classmethod
    def for_table(cls, table: FeatureTable, **kwargs) -> "PerturbationPolicy":
        return cls(baseline=default_baseline(table), **kwargs)


def default_baseline(table: FeatureTable) -> tuple[float, ...]:
    """Binary columns replace with 0, ordinal with the column mean, categorical
    with the most frequent level (lowest code on ties)."""
    baseline = []
    for j, kind in enumerate(table.kinds):
        col = table.values[:, j]
        if kind.kind == BINARY:
            baseline.append(0.0)
        elif kind.kind == CATEGORICAL:
            baseline.append(float(np.argmax(np.bincount(col.astype(int),
                                                        minlength=len(kind.levels)))))
        else:
            baseline.append(float(np.mean(col)))
    return tuple(baseline)


class _LineChannel:
    """Newline-delimited JSON over a raw file descriptor with a read timeout."""

    def __init__(self, read_fd: int, write, timeout: float):
        self._read_fd = read_fd
        self._write = write
        self._timeout = timeout
        self._buffer = b""

    def send(self, message: dict) -> None:
        try:
            self._write.write((json.dumps(message) + "\n").encode("utf-8"))
            self._write.flush()
        except (BrokenPipeError, ValueError, OSError) as exc:
            raise EndpointClosed(f"endpoint closed while sending: {exc}") from exc

    def recv(self) -> dict:
        while b"\n" not in self._buffer:
            ready, _, _ = _select.select([self._read_fd], [], [], self._timeout)
            if not ready:
                raise EndpointTimeout(f"no response within {self._timeout}s")
            chunk = os.read(self._read_fd, 65536)
            if not chunk:
                raise EndpointClosed("endpoint closed the connection")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        try:
            message = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ProtocolError(f"invalid JSON from endpoint: {exc}") from exc
        if not isinstance(message, dict):
            raise ProtocolError("endpoint sent a non-object message")
        return message


class ModelEndpoint:
    """Client for the prediction protocol over a child process or TCP socket."""

    def __init__(self, command: str | list[str] | None = None,
                 address: tuple[str, int] | None = None,
                 timeout: float = 10.0, batch_size: int = 64):
        if (command is None) == (address is None):
            raise ValueError("exactly one of command or address is required")
        if batch_size < 1:
            raise ValueError("batch_size must be positive")
        self._command = shlex.split(command) if isinstance(command, str) else command
        self._address = address
        self.timeout = timeout
        self.batch_size = batch_size
        self._proc: subprocess.Popen | None = None
        self._sock: socket.socket | None = None
        self._channel: _LineChannel | None = None
        self._next_id = 0
        self.n_features: int | None = None

    def connect(self, n_features: int) -> None:
        """Start the transport and perform the hello/ready handshake."""
        if self._channel is not None:
            if self.n_features != n_features:
                raise ProtocolError(
                    f"endpoint handshaken for {self.n_features} features, got {n_features}")
            return
        if self._command is not None:
            try:
                self._proc = subprocess.Popen(
                    self._command, stdin=subprocess.PIPE, stdout=subprocess.PIPE)
            except OSError as exc:
                raise EndpointClosed(f"cannot start endpoint process: {exc}") from exc
            self._channel = _LineChannel(self._proc.stdout.fileno(),
                                         self._proc.stdin, self.timeout)
        else:
            try:
                self._sock = socket.create_connection(self._address, timeout=self.timeout)
            except OSError as exc:
                raise EndpointClosed(f"cannot connect to endpoint: {exc}") from exc
            self._sock.settimeout(self.timeout)
            self._channel = _LineChannel(self._sock.fileno(),
                                         self._sock.makefile("wb"), self.timeout)
        self._channel.send({"type": "hello", "n_features": n_features})
        reply = self._channel.recv()
        if reply.get("type") != "ready":
            raise ProtocolError(f"expected ready, got {reply!r}")
        self.n_features = n_features

    def predict(self, rows: list[list]) -> list[float]:
        """Score rows, batching requests; scores come back in row order."""
        if self._channel is None:
            raise EndpointError("endpoint is not connected")
        scores: list[float] = []
        for start in range(0, len(rows), self.batch_size):
            scores.extend(self._predict_batch(rows[start:start + self.batch_size]))
        return scores

    def _predict_batch(self, rows: list[list]) -> list[float]:
        request_id = self._next_id
        self._next_id += 1
        self._channel.send({"type": "predict", "id": request_id, "rows": rows})
        reply = self._channel.recv()
        if reply.get("type") == "error":
            raise ProtocolError(f"endpoint error: {reply.get('message')!r}")
        if reply.get("type") != "scores":
            raise ProtocolError(f"expected scores, got {reply!r}")
        if reply.get("id") != request_id:
            raise ProtocolError(
                f"response id {reply.get('id')!r} does not match request {request_id}")
        scores = reply.get("scores")
        if not isinstance(scores, list) or len(scores) != len(rows):
            raise ProtocolError("scores length does not match request rows")
        out = []
        for s in scores:
            if not isinstance(s, (int, float)) or isinstance(s, bool) or not math.isfinite(s):
                raise NonFiniteScore(f"endpoint returned a non-finite score: {s!r}")
            out.append(float(s))
        return out

    def close(self) -> None:
        if self._sock is not None:
            self._sock.close()
            self._sock = None
        if self._proc is not None:
            if self._proc.stdin:
                self._proc.stdin.close()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
            self._proc = None
        self._channel = None

    def __enter__(self) -> "ModelEndpoint":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def _wire_row(values: np.ndarray, table: FeatureTable) -> list:
    return [table.decode(j, values[j]) for j in range(table.n_cols)]


def _all_masks(n: int) -> np.ndarray:
    return np.array(list(itertools.product((0.0, 1.0), repeat=n)), dtype=np.float64)


def explain_sample(sample_row: np.ndarray, table: FeatureTable,
                   endpoint: ModelEndpoint, policy: PerturbationPolicy,
                   seed: int | None = None) -> tuple[np.ndarray, float]:
    """Contribution row and unperturbed predicted score for one sample.

    Leave-one-out: contribution i is the score drop when column i is replaced
    by its baseline. Mask sampling: binary keep/replace masks are drawn (or
    fully enumerated when num_samples covers 2^N), the model is queried on the
    masked rows, and contributions are the ridge least-squares coefficients of
    score on mask with an unpenalized intercept. Rows are sorted by mask before
    the solve so the result is independent of draw order.
    """
    n = table.n_cols
    baseline = np.asarray(policy.baseline, dtype=np.float64)
    endpoint.connect(n)
    if policy.mode == LEAVE_ONE_OUT:
        rows = [_wire_row(sample_row, table)]
        for j in range(n):
            perturbed = sample_row.copy()
            perturbed[j] = baseline[j]
            rows.append(_wire_row(perturbed, table))
        scores = endpoint.predict(rows)
        base = scores[0]
        contribs = np.array([base - scores[j + 1] for j in range(n)], dtype=np.float64)
        return contribs, base

    if policy.num_samples < n + 1:
        raise ValueError("mask sampling needs num_samples >= n_features + 1")
    if n <= 20 and policy.num_samples >= 2 ** n:
        masks = _all_masks(n)
    else:
        rng = np.random.default_rng(policy.seed if seed is None else seed)
        masks = (rng.random((policy.num_samples, n)) >= policy.mask_probability
                 ).astype(np.float64)
    perturbed = np.where(masks == 1.0, sample_row, baseline)
    rows = [_wire_row(sample_row, table)]
    rows.extend(_wire_row(perturbed[k], table) for k in range(perturbed.shape[0]))
    scores = endpoint.predict(rows)
    base = scores[0]
    y = np.asarray(scores[1:], dtype=np.float64)

    order = np.lexsort(masks.T[::-1])
    z = masks[order]
    y = y[order]
    zc = z - z.mean(axis=0)
    yc = y - y.mean()
    if policy.ridge == 0.0:
        coef, *_ = np.linalg.lstsq(zc, yc, rcond=None)
    else:
        gram = zc.T @ zc + policy.ridge * np.eye(n)
        coef = np.linalg.solve(gram, zc.T @ yc)
    return coef, base


def build_contribution_matrix(table: FeatureTable, endpoint: ModelEndpoint,
                              policy: PerturbationPolicy) -> ContributionMatrix:
    """Explain every row of the table. Row seeds derive as policy.seed XOR the
    row index, so the matrix is deterministic for a deterministic endpoint."""
    endpoint.connect(table.n_cols)
    contribs = np.empty((table.n_rows, table.n_cols), dtype=np.float64)
    scores = np.empty(table.n_rows, dtype=np.float64)
    for r in range(table.n_rows):
        try:
            row_contribs, score = explain_sample(
                table.values[r].copy(), table, endpoint, policy, seed=policy.seed ^ r)
        except EndpointError as exc:
            wrapped = type(exc)(f"row {r} ({table.row_ids[r]}): {exc}", row=r)
            raise wrapped from exc
        contribs[r] = row_contribs
        scores[r] = score
    return ContributionMatrix(contribs, scores)
