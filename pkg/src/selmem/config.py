"""Run configuration and the flat ``key=value`` config file format.

Config files are UTF-8, one ``key = value`` per line, ``#`` starts a comment.
``weights`` takes six comma-separated reals in feature order (entity,
question, number, position, tfidf, discourse).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Dict, Optional, Tuple

from .answer import EndpointConfig
from .retrieval import HYBRID, SPARSE_ONLY
from .salience import DEFAULT_WEIGHTS

STRATEGIES = ("budgetmem_features", "random", "first_n", "last_n", "tfidf_only")
STRATEGY_ALIASES = {"budgetmem": "budgetmem_features", "tfidf": "tfidf_only", "first": "first_n", "last": "last_n"}


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"config key {key!r}: {message}")
        self.key = key


@dataclass
class RunConfig:
    chunk_size: int = 150
    chunk_overlap: int = 30
    budget_ratio: float = 0.3
    top_k: int = 3
    retrieval_mode: str = SPARSE_ONLY
    alpha: float = 0.7
    k1: float = 1.2
    b: float = 0.75
    token_budget: int = 3000
    weights: Tuple[float, ...] = DEFAULT_WEIGHTS
    strategy: str = "budgetmem_features"
    seed: int = 42
    workers: int = 1
    endpoint_url: Optional[str] = None
    endpoint_model: str = "default"
    endpoint_timeout: float = 30.0
    endpoint_retries: int = 2
    lexicon_path: Optional[str] = None
    paths: Dict[str, str] = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        def need(key, ok, msg):
            if not ok:
                raise ConfigError(key, msg)

        need("chunk_size", self.chunk_size >= 1, "must be >= 1")
        need("chunk_overlap", 0 <= self.chunk_overlap < self.chunk_size, "must satisfy 0 <= overlap < chunk_size")
        need("budget_ratio", 0 < self.budget_ratio <= 1, "must be in (0, 1]")
        need("top_k", self.top_k >= 1, "must be >= 1")
        need("retrieval_mode", self.retrieval_mode in (SPARSE_ONLY, HYBRID), f"must be {SPARSE_ONLY} or {HYBRID}")
        need("alpha", 0 <= self.alpha <= 1, "must be in [0, 1]")
        need("k1", self.k1 >= 0, "must be >= 0")
        need("b", 0 <= self.b <= 1, "must be in [0, 1]")
        need("token_budget", self.token_budget >= 1, "must be >= 1")
        need("weights", len(self.weights) == 6, "needs exactly 6 values")
        need("weights", all(w >= 0 for w in self.weights), "must be non-negative")
        need("strategy", self.strategy in STRATEGIES, f"must be one of {', '.join(STRATEGIES)}")
        need("workers", self.workers >= 1, "must be >= 1")
        need("endpoint_retries", self.endpoint_retries >= 0, "must be >= 0")
        need("endpoint_timeout", self.endpoint_timeout > 0, "must be > 0")
        return self

    def endpoint(self) -> Optional[EndpointConfig]:
        if not self.endpoint_url:
            return None
        return EndpointConfig(
            base_url=self.endpoint_url,
            model=self.endpoint_model,
            timeout=self.endpoint_timeout,
            retries=self.endpoint_retries,
        )

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def _coerce(key: str, raw: str, default):
    kind = type(default) if default is not None else str
    if key == "weights":
        try:
            return tuple(float(v) for v in raw.split(","))
        except ValueError:
            raise ConfigError(key, f"expected comma-separated reals, got {raw!r}") from None
    if key == "strategy":
        return STRATEGY_ALIASES.get(raw, raw)
    try:
        if kind is bool:
            return raw.lower() in ("1", "true", "yes", "on")
        if kind in (int, float):
            return kind(raw)
    except ValueError:
        raise ConfigError(key, f"expected {kind.__name__}, got {raw!r}") from None
    return raw


_FIELDS = {f.name: f for f in fields(RunConfig)}


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, object]:
    defaults = RunConfig()
    values: Dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(line, f"{source}:{lineno}: expected key=value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS or key == "paths":
            raise ConfigError(key, f"{source}:{lineno}: unknown key")
        values[key] = _coerce(key, raw, getattr(defaults, key))
    return values


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, object]] = None) -> RunConfig:
    """Defaults, then the config file, then explicit overrides (``None`` values skipped)."""
    values: Dict[str, object] = {}
    if path:
        values.update(parse_config_text(Path(path).read_text(encoding="utf-8"), str(path)))
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = STRATEGY_ALIASES.get(v, v) if k == "strategy" else v
    return RunConfig(**values).validate()
