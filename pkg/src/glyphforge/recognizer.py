"""Character recognizer interface used by the sanity filter and R-ACC.

A recognizer receives a rendered image plus free-text instruction and the
allowed answer charset, and answers a label or ``ABSTAIN``.
"""

from __future__ import annotations

import base64
import hashlib
import json
import threading
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Protocol

from .errors import RecognizerUnavailable

ABSTAIN = "ABSTAIN"
DEFAULT_INSTRUCTION = (
    "Read the characters shown in the image. Answer with the characters only, "
    "preserving upper and lower case. If any character is unrecognizable, answer ABSTAIN."
)


@dataclass(frozen=True)
class RecognizerRequest:
    image: bytes  # PGM or PNG bytes
    instruction: str
    charset: str
    key: str = ""  # caller-side identifier; never sent to remote services

    def to_wire(self) -> dict:
        return {
            "image": base64.b64encode(self.image).decode("ascii"),
            "instruction": self.instruction,
            "charset": self.charset,
        }


class Recognizer(Protocol):
    def recognize(self, request: RecognizerRequest) -> str: ...


def image_digest(image: bytes) -> str:
    return hashlib.sha256(image).hexdigest()


class MockRecognizer:
    """Deterministic stand-in.

    Answers from ``responses`` by request key first, then from ``images`` by
    image digest, then ``default``.
    """

    def __init__(self, responses: Mapping[str, str] | None = None,
                 images: Mapping[str, str] | None = None, default: str = ABSTAIN):
        self.responses = dict(responses or {})
        self.images = dict(images or {})
        self.default = default

    def recognize(self, request: RecognizerRequest) -> str:
        if request.key in self.responses:
            return self.responses[request.key]
        return self.images.get(image_digest(request.image), self.default)

    @classmethod
    def from_file(cls, path: str | Path) -> "MockRecognizer":
        spec = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(spec.get("responses"), spec.get("images"), spec.get("default", ABSTAIN))

    @classmethod
    def perfect(cls, labelled_images: Iterable[tuple[str, bytes]]) -> "MockRecognizer":
        """Reads back exactly the labels it was shown; ambiguous images abstain."""
        table: dict[str, str] = {}
        for label, image in labelled_images:
            h = image_digest(image)
            if table.get(h, label) != label:
                table[h] = ABSTAIN
            else:
                table[h] = label
        return cls(images=table, default=ABSTAIN)


class RemoteRecognizer:
    """JSON-over-HTTP client: POST {image, instruction, charset} -> {label}."""

    def __init__(self, endpoint: str, timeout: float = 60.0, max_in_flight: int = 4):
        self.endpoint = endpoint
        self.timeout = timeout
        self._slots = threading.BoundedSemaphore(max(1, max_in_flight))

    def recognize(self, request: RecognizerRequest) -> str:
        body = json.dumps(request.to_wire()).encode("utf-8")
        req = urllib.request.Request(self.endpoint, data=body,
                                     headers={"Content-Type": "application/json"})
        with self._slots:
            try:
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    payload = json.loads(resp.read().decode("utf-8"))
            except (urllib.error.URLError, OSError, ValueError) as exc:
                raise RecognizerUnavailable(f"{self.endpoint}: {exc}") from exc
        label = payload.get("label") if isinstance(payload, dict) else None
        if not isinstance(label, str):
            raise RecognizerUnavailable(f"{self.endpoint}: response lacks a 'label' string")
        return label


def recognize_all(recognizer: Recognizer, requests: list[RecognizerRequest], jobs: int = 1) -> list[str]:
    """Labels in request order."""
    if jobs <= 1 or len(requests) <= 1:
        return [recognizer.recognize(r) for r in requests]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(recognizer.recognize, requests))


def resolve_recognizer(spec: str | None, mock_file: str | Path | None = None) -> Recognizer | None:
    """``none`` -> None, ``mock`` -> MockRecognizer, anything else -> endpoint URL."""
    if spec is None or spec == "none":
        return None
    if spec == "mock":
        if mock_file:
            return MockRecognizer.from_file(mock_file)
        return MockRecognizer(default="GgAa")
    return RemoteRecognizer(spec)
