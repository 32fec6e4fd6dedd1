"""Wire protocol between the pipeline and any masked-LM scorer.

One request, one response, newline-delimited JSON:

    -> {"id": str, "text": str, "max_len": int}
    <- {"id": str, "tokens": [str], "logprobs": [float]}
    <- {"id": str, "error": str}

The scorer owns tokenization; the pipeline only needs token count and
log-probabilities back. Transports: a long-lived subprocess speaking the
protocol on stdin/stdout (responses may arrive out of order; pairing is by
id), HTTP POST /score with the same JSON bodies, or the built-in mock
scorer, which hashes each whitespace token so the whole pipeline runs
deterministically without a model.
"""
from __future__ import annotations

import itertools
import json
import logging
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass
from typing import Callable, Optional, Union

import requests

from .scoring import TokenLogProbs

log = logging.getLogger(__name__)

DEFAULT_MAX_LEN = 128
DEFAULT_RETRIES = 3
DEFAULT_BACKOFF = 0.1


class BridgeError(Exception):
    """Base for scorer-bridge failures."""


class TransportError(BridgeError):
    """The transport failed; the request may be retried."""


class ProtocolError(BridgeError):
    """A response violated the wire contract. Not retried."""


class ScorerError(BridgeError):
    """The scorer reported an error for this request. Not retried."""


@dataclass(frozen=True)
class ScoreRequest:
    id: str
    text: str
    max_len: int = DEFAULT_MAX_LEN

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("request text must be non-empty")


def request_line(req: ScoreRequest) -> str:
    return json.dumps({"id": req.id, "text": req.text, "max_len": req.max_len})


def parse_request(line: str) -> ScoreRequest:
    row = json.loads(line)
    return ScoreRequest(id=str(row["id"]), text=str(row["text"]), max_len=int(row.get("max_len", DEFAULT_MAX_LEN)))


def response_line(request_id: str, result: Union[TokenLogProbs, str]) -> str:
    """Serialize a payload (TokenLogProbs) or an error message."""
    if isinstance(result, str):
        return json.dumps({"id": request_id, "error": result})
    return json.dumps({"id": request_id, "tokens": list(result.tokens), "logprobs": list(result.logprobs)})


def parse_response(line: str) -> dict:
    row = json.loads(line)
    if "id" not in row:
        raise ProtocolError(f"response without id: {line!r}")
    return row


def validate_response(row: dict, expected_id: str) -> TokenLogProbs:
    """Enforce the response contract: error xor payload, matching lengths."""
    rid = row.get("id")
    if rid != expected_id:
        raise ProtocolError(f"response id {rid!r} does not match request {expected_id!r}")
    has_error = "error" in row
    has_payload = "tokens" in row or "logprobs" in row
    if has_error and has_payload:
        raise ProtocolError(f"request {expected_id}: response carries both error and payload")
    if has_error:
        raise ScorerError(f"request {expected_id}: {row['error']}")
    if "tokens" not in row or "logprobs" not in row:
        raise ProtocolError(f"request {expected_id}: response missing tokens or logprobs")
    tokens = row["tokens"]
    logprobs = row["logprobs"]
    if len(tokens) != len(logprobs):
        raise ProtocolError(
            f"request {expected_id}: {len(tokens)} tokens but {len(logprobs)} logprobs"
        )
    try:
        return TokenLogProbs(tokens=tuple(str(t) for t in tokens), logprobs=tuple(float(lp) for lp in logprobs))
    except ValueError as exc:
        raise ProtocolError(f"request {expected_id}: {exc}") from None


_request_counter = itertools.count(1)


def _next_id() -> str:
    return f"r{next(_request_counter)}"


# --- FNV-1a 64-bit, the basis of the mock scorer ---

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


def mock_score(text: str) -> TokenLogProbs:
    """Deterministic, platform-independent stand-in for a masked LM.

    Whitespace tokenization; each token w gets logprob
    -(1 + (fnv1a64(w) mod 1000) / 1000), so every value lies in [-2, -1].
    """
    tokens = text.split()
    if not tokens:
        raise ValueError("cannot mock-score empty text")
    logprobs = tuple(-(1.0 + (fnv1a64(t.encode("utf-8")) % 1000) / 1000.0) for t in tokens)
    return TokenLogProbs(tokens=tuple(tokens), logprobs=logprobs)


class MockTransport:
    """In-process transport backed by a scoring function (mock by default)."""

    def __init__(self, scorer: Callable[[str], TokenLogProbs] = mock_score):
        self._scorer = scorer

    def request(self, req: ScoreRequest) -> dict:
        try:
            tlp = self._scorer(req.text)
        except Exception as exc:
            return {"id": req.id, "error": str(exc)}
        return {"id": req.id, "tokens": list(tlp.tokens), "logprobs": list(tlp.logprobs)}

    def close(self) -> None:
        pass


class HTTPTransport:
    """POST each request to a /score endpoint with the same JSON bodies."""

    def __init__(self, url: str, timeout: float = 60.0):
        self.url = url if url.endswith("/score") else url.rstrip("/") + "/score"
        self.timeout = timeout

    def request(self, req: ScoreRequest) -> dict:
        try:
            resp = requests.post(
                self.url,
                json={"id": req.id, "text": req.text, "max_len": req.max_len},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            return resp.json()
        except (requests.RequestException, ValueError) as exc:
            raise TransportError(f"request {req.id}: {exc}") from exc

    def close(self) -> None:
        pass


class SubprocessTransport:
    """One scorer child process, many concurrent logical requests.

    Requests are written to the child's stdin under a lock; a reader thread
    parses stdout lines and resolves whichever pending request the response
    id names, so out-of-order responses pair correctly. If the child dies,
    all pending requests fail with TransportError and the next request
    restarts it.
    """

    def __init__(self, cmd: Union[str, list[str]]):
        self.cmd = shlex.split(cmd) if isinstance(cmd, str) else list(cmd)
        self._proc: Optional[subprocess.Popen] = None
        self._reader: Optional[threading.Thread] = None
        self._write_lock = threading.Lock()
        self._pending_lock = threading.Lock()
        self._pending: dict[str, _PendingSlot] = {}

    def _ensure_process(self) -> subprocess.Popen:
        # A dying child can close stdout (ending the reader) while poll()
        # still reports it alive, so respawn on reader death too.
        reader_dead = self._reader is None or not self._reader.is_alive()
        if self._proc is None or self._proc.poll() is not None or reader_dead:
            if self._proc is not None and self._proc.poll() is None:
                try:
                    self._proc.kill()
                    self._proc.wait(timeout=5)
                except (OSError, subprocess.TimeoutExpired):
                    pass
            self._proc = subprocess.Popen(
                self.cmd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
            self._reader = threading.Thread(target=self._read_loop, args=(self._proc,), daemon=True)
            self._reader.start()
        return self._proc

    def _read_loop(self, proc: subprocess.Popen) -> None:
        assert proc.stdout is not None
        for line in proc.stdout:
            if not line.strip():
                continue
            try:
                row = parse_response(line)
            except (json.JSONDecodeError, ProtocolError):
                log.warning("discarding unparseable scorer line: %r", line[:200])
                continue
            with self._pending_lock:
                slot = self._pending.pop(str(row["id"]), None)
            if slot is None:
                log.warning("discarding response for unknown request id %r", row["id"])
                continue
            slot.resolve(row)
        self._fail_pending(TransportError("scorer process closed its stdout"))

    def _fail_pending(self, exc: BridgeError) -> None:
        with self._pending_lock:
            slots = list(self._pending.values())
            self._pending.clear()
        for slot in slots:
            slot.fail(exc)

    def request(self, req: ScoreRequest) -> dict:
        slot = _PendingSlot()
        with self._pending_lock:
            self._pending[req.id] = slot
        try:
            proc = self._ensure_process()
            assert proc.stdin is not None
            with self._write_lock:
                proc.stdin.write(request_line(req) + "\n")
                proc.stdin.flush()
        except (OSError, ValueError) as exc:
            with self._pending_lock:
                self._pending.pop(req.id, None)
            raise TransportError(f"request {req.id}: cannot write to scorer: {exc}") from exc
        if self._reader is None or not self._reader.is_alive():
            # The reader drained its EOF before this request registered;
            # nobody will ever resolve the slot.
            with self._pending_lock:
                still_pending = self._pending.pop(req.id, None) is not None
            if still_pending:
                raise TransportError(f"request {req.id}: scorer exited before responding")
        return slot.wait()

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            try:
                if self._proc.stdin:
                    self._proc.stdin.close()
                self._proc.terminate()
                self._proc.wait(timeout=5)
            except (OSError, subprocess.TimeoutExpired):
                self._proc.kill()
        self._proc = None


class _PendingSlot:
    def __init__(self) -> None:
        self._event = threading.Event()
        self._row: Optional[dict] = None
        self._error: Optional[BridgeError] = None

    def resolve(self, row: dict) -> None:
        self._row = row
        self._event.set()

    def fail(self, exc: BridgeError) -> None:
        self._error = exc
        self._event.set()

    def wait(self, timeout: Optional[float] = 300.0) -> dict:
        if not self._event.wait(timeout):
            raise TransportError("timed out waiting for scorer response")
        if self._error is not None:
            raise self._error
        assert self._row is not None
        return self._row


Transport = Union[MockTransport, HTTPTransport, SubprocessTransport]


def make_transport(spec: str) -> Transport:
    """Build a transport from a spec string: "mock", an URL, or a command."""
    if spec == "mock":
        return MockTransport()
    if spec.startswith("http://") or spec.startswith("https://"):
        return HTTPTransport(spec)
    return SubprocessTransport(spec)


def score_text(
    text: str,
    transport: Transport,
    max_len: int = DEFAULT_MAX_LEN,
    retries: int = DEFAULT_RETRIES,
    backoff: float = DEFAULT_BACKOFF,
) -> TokenLogProbs:
    """Score one text through a transport, retrying transport failures.

    Transport failures retry up to ``retries`` times with exponential
    backoff; protocol violations and scorer-reported errors do not retry.
    """
    last: Optional[TransportError] = None
    for attempt in range(retries + 1):
        req = ScoreRequest(id=_next_id(), text=text, max_len=max_len)
        try:
            row = transport.request(req)
        except TransportError as exc:
            last = exc
            if attempt < retries:
                time.sleep(backoff * (2**attempt))
            continue
        return validate_response(row, req.id)
    assert last is not None
    raise last
