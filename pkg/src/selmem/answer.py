"""Answer production: an extractive sentence oracle and an HTTP model client.

External endpoint protocol (chat-completion style, UTF-8 JSON):

    POST {base_url}/chat/completions
    Authorization: Bearer <key>            (only when a key is configured)
    {"model": <model>, "temperature": 0,
     "messages": [{"role": "system", "content": <system prompt>},
                  {"role": "user", "content": <snippets>\\n\\nQuestion: <q>}]}

    200 -> {"choices": [{"message": {"content": <answer text>}}]}

``[CITE: m<k>]`` tags in the returned text become ``cited_mem_ids``.
"""

from __future__ import annotations

import json
import os
import re
import time
import urllib.error
import urllib.request
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import List, Optional

from .packing import PackedContext
from .text_prep import terms, tokenize

EXTRACTIVE = "extractive"
EXTERNAL = "external_model"
API_KEY_ENV = "SELMEM_API_KEY"

_SENT_SPLIT = re.compile(r"(?<=[.!?])\s+")
_CITE_RE = re.compile(r"\[CITE:\s*(m\d+)\s*\]")


class EmptyContextError(ValueError):
    pass


class EndpointError(RuntimeError):
    """Endpoint unreachable or timing out after all retries."""


class MalformedResponseError(ValueError):
    pass


@dataclass
class Answer:
    text: str
    cited_mem_ids: List[str] = field(default_factory=list)
    source: str = EXTRACTIVE


@lru_cache(maxsize=None)
def stopwords() -> frozenset:
    raw = resources.files("selmem.resources").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(w.strip() for w in raw.splitlines() if w.strip() and not w.startswith("#"))


def content_words(text: str) -> List[str]:
    stop = stopwords()
    return [t for t in terms(tokenize(text)) if t not in stop]


def split_sentences(text: str) -> List[str]:
    return [s.strip() for s in _SENT_SPLIT.split(text) if s.strip()]


def overlap_f1(candidate: List[str], reference: List[str]) -> float:
    common = sum((Counter(candidate) & Counter(reference)).values())
    if common == 0:
        return 0.0
    p, r = common / len(candidate), common / len(reference)
    return 2 * p * r / (p + r)


def answer_extractive(context: PackedContext, question: str) -> Answer:
    """Best sentence by content-word overlap F1 with the question.

    Ties go to the earlier block, then the earlier sentence.
    """
    q = content_words(question)
    best = None
    for mem_id, _, body in context.blocks:
        for sent in split_sentences(body):
            s = overlap_f1(content_words(sent), q) if q else 0.0
            if best is None or s > best[0]:
                best = (s, sent, mem_id)
    if best is None:
        raise EmptyContextError("packed context has no sentences to answer from")
    return Answer(best[1], [best[2]], EXTRACTIVE)


@dataclass
class EndpointConfig:
    base_url: str
    model: str = "default"
    api_key: Optional[str] = None
    timeout: float = 30.0
    retries: int = 2
    backoff: float = 0.5

    def key(self) -> Optional[str]:
        return self.api_key or os.environ.get(API_KEY_ENV)


def build_request(context: PackedContext, question: str, endpoint: EndpointConfig) -> dict:
    snippets = "\n\n".join(f"{h}\n{b}" for _, h, b in context.blocks)
    return {
        "model": endpoint.model,
        "temperature": 0,
        "messages": [
            {"role": "system", "content": context.system_prompt},
            {"role": "user", "content": f"MEMORY_SNIPPETS:\n{snippets}\n\nQuestion: {question}"},
        ],
    }


def parse_citations(text: str) -> List[str]:
    seen = []
    for m in _CITE_RE.findall(text):
        if m not in seen:
            seen.append(m)
    return seen


def parse_response(body: bytes) -> str:
    try:
        data = json.loads(body.decode("utf-8"))
        content = data["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise MalformedResponseError(f"unexpected completion response: {exc!r}") from exc
    if not isinstance(content, str):
        raise MalformedResponseError("message content is not a string")
    return content


def answer_external(context: PackedContext, question: str, endpoint: EndpointConfig) -> Answer:
    payload = json.dumps(build_request(context, question, endpoint)).encode("utf-8")
    headers = {"Content-Type": "application/json"}
    if endpoint.key():
        headers["Authorization"] = f"Bearer {endpoint.key()}"
    url = endpoint.base_url.rstrip("/") + "/chat/completions"

    last: Optional[Exception] = None
    for attempt in range(endpoint.retries + 1):
        req = urllib.request.Request(url, data=payload, headers=headers, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=endpoint.timeout) as resp:
                body = resp.read()
            break
        except (urllib.error.URLError, TimeoutError, ConnectionError, OSError) as exc:
            last = exc
            if attempt < endpoint.retries:
                time.sleep(endpoint.backoff * (2**attempt))
    else:
        raise EndpointError(f"{url} failed after {endpoint.retries + 1} attempts: {last}")

    text = parse_response(body)
    return Answer(text, parse_citations(text), EXTERNAL)
