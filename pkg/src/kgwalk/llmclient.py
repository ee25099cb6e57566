"""Generation backends behind one interface.

The http backend posts JSON to a configurable endpoint with bounded
retries; replay returns pre-recorded responses keyed by item id (a miss
is fatal, the recording is incomplete); mock returns a constant or echoes
the prompt. Replay and mock are bit-deterministic, including the recorded
latency, so journals from repeated runs compare byte for byte.

Every response is journaled before evaluation. The journal is JSON lines
appended in request order regardless of completion order, which keeps it
both crash-safe (rerunning resumes from it) and deterministic.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass

import requests

from .errors import BackendError, ConfigError, DataError, ReplayMissError


@dataclass(frozen=True)
class GenRequest:
    item_id: str
    prompt: str
    max_new_tokens: int = 32
    temperature: float = 0.0

    def __post_init__(self):
        if self.max_new_tokens < 1:
            raise ConfigError("max_new_tokens must be >= 1")


@dataclass(frozen=True)
class GenResponse:
    text: str
    latency_s: float
    backend: str


@dataclass(frozen=True)
class BatchResult:
    item_id: str
    response: GenResponse | None = None
    error: str | None = None


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class MockBackend:
    """Constant or echo responses; deterministic."""

    name = "mock"
    deterministic = True

    def __init__(self, text: str | None = None):
        self._text = text

    def complete(self, request: GenRequest) -> str:
        return request.prompt if self._text is None else self._text


class ReplayBackend:
    """Responses recorded as JSON lines {item_id, text}."""

    name = "replay"
    deterministic = True

    def __init__(self, path):
        self._responses: dict[str, str] = {}
        try:
            fh = open(path, "r", encoding="utf-8")
        except OSError as exc:
            raise BackendError(f"cannot read replay file {path}: {exc}") from exc
        with fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                    self._responses[record["item_id"]] = record["text"]
                except (ValueError, KeyError, TypeError) as exc:
                    raise BackendError(
                        f"{path}:{line_no}: malformed replay record: {exc}"
                    ) from exc

    def complete(self, request: GenRequest) -> str:
        try:
            return self._responses[request.item_id]
        except KeyError:
            raise ReplayMissError(
                f"replay recording has no response for item {request.item_id!r}"
            ) from None


class HttpBackend:
    """JSON completion endpoint with exponential-backoff retries."""

    name = "http"
    deterministic = False

    def __init__(self, endpoint: str, headers: dict | None = None,
                 request_fields: dict | None = None,
                 response_field: str = "text", timeout: float = 60.0,
                 max_attempts: int = 3, backoff_s: float = 0.5):
        if not endpoint:
            raise ConfigError("http backend requires an endpoint")
        self.endpoint = endpoint
        self.headers = headers or {}
        fields = request_fields or {}
        self._prompt_field = fields.get("prompt", "prompt")
        self._tokens_field = fields.get("max_new_tokens", "max_new_tokens")
        self._temperature_field = fields.get("temperature", "temperature")
        self._response_field = response_field
        self.timeout = timeout
        self.max_attempts = max(1, max_attempts)
        self.backoff_s = backoff_s

    def _extract(self, payload) -> str:
        value = payload
        for part in self._response_field.split("."):
            if isinstance(value, list):
                value = value[int(part)]
            else:
                value = value[part]
        if not isinstance(value, str):
            raise KeyError(self._response_field)
        return value

    def complete(self, request: GenRequest) -> str:
        body = {
            self._prompt_field: request.prompt,
            self._tokens_field: request.max_new_tokens,
            self._temperature_field: request.temperature,
        }
        last_error = None
        for attempt in range(self.max_attempts):
            if attempt:
                time.sleep(self.backoff_s * (2 ** (attempt - 1)))
            try:
                reply = requests.post(
                    self.endpoint, json=body, headers=self.headers,
                    timeout=self.timeout,
                )
                reply.raise_for_status()
                return self._extract(reply.json())
            except (requests.RequestException, ValueError, KeyError,
                    IndexError) as exc:
                last_error = exc
        raise BackendError(
            f"{self.endpoint} failed after {self.max_attempts} attempts: "
            f"{last_error}"
        )


def generate(request: GenRequest, backend) -> GenResponse:
    """Run one completion; deterministic backends report zero latency."""
    start = time.monotonic()
    text = backend.complete(request)
    elapsed = 0.0 if getattr(backend, "deterministic", False) \
        else time.monotonic() - start
    return GenResponse(text=text, latency_s=elapsed, backend=backend.name)


class Journal:
    """Append-only JSON-lines record of responses, in request order."""

    def __init__(self, path):
        self.path = path

    def load(self) -> dict[str, dict]:
        records = {}
        try:
            fh = open(self.path, "r", encoding="utf-8")
        except FileNotFoundError:
            return records
        with fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                    records[record["item_id"]] = record
                except (ValueError, KeyError, TypeError) as exc:
                    raise DataError(
                        f"{self.path}:{line_no}: malformed journal record: {exc}"
                    ) from exc
        return records

    @staticmethod
    def record(request: GenRequest, response: GenResponse) -> dict:
        return {
            "item_id": request.item_id,
            "prompt_hash": prompt_hash(request.prompt),
            "text": response.text,
            "latency_ms": int(round(response.latency_s * 1000)),
            "backend": response.backend,
        }

    def append(self, record: dict):
        with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
            fh.flush()


def run_batch(requests_list: list[GenRequest], backend, parallelism: int = 1,
              journal: Journal | None = None) -> list[BatchResult]:
    """Fan requests out over a bounded pool.

    Results come back in input order, journal records are written in
    input order as soon as every earlier item is done, and a per-item
    failure flags that item without stopping the batch. Fatal backend
    errors (replay misses, bad configuration) propagate.
    """
    if parallelism < 1:
        raise ConfigError("parallelism must be >= 1")
    results: list[BatchResult | None] = [None] * len(requests_list)
    journaled = 0

    def flush_journal():
        nonlocal journaled
        while journaled < len(results) and results[journaled] is not None:
            result = results[journaled]
            if journal is not None and result.response is not None:
                journal.append(
                    Journal.record(requests_list[journaled], result.response)
                )
            journaled += 1

    def run_one(idx: int) -> BatchResult:
        request = requests_list[idx]
        try:
            return BatchResult(request.item_id, response=generate(request, backend))
        except (ReplayMissError, ConfigError):
            raise
        except BackendError as exc:
            return BatchResult(request.item_id, error=str(exc))

    if parallelism == 1 or len(requests_list) <= 1:
        for idx in range(len(requests_list)):
            results[idx] = run_one(idx)
            flush_journal()
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            pending = {
                pool.submit(run_one, idx): idx
                for idx in range(len(requests_list))
            }
            while pending:
                done, _ = wait(pending, return_when=FIRST_COMPLETED)
                for future in done:
                    idx = pending.pop(future)
                    results[idx] = future.result()
                flush_journal()
    flush_journal()
    return list(results)
