"""Run-time tolerances and limits.

Library functions take explicit ``tol`` arguments; when omitted they fall back
to :data:`DEFAULT`, which the CLI may replace via :func:`set_default`.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace

ENV_PREFIX = "QWV_"


@dataclass(frozen=True)
class Config:
    eq_tol: float = 1e-9
    psd_tol: float = 1e-9
    while_tol: float = 1e-10
    while_kmax: int = 100_000
    max_dim: int = 256
    seed: int = 0

    def __post_init__(self):
        for name in ("eq_tol", "psd_tol", "while_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.while_kmax < 1 or self.max_dim < 1:
            raise ValueError("while_kmax and max_dim must be >= 1")

    @classmethod
    def from_env(cls, environ=None, **overrides) -> "Config":
        """Defaults, then ``QWV_*`` environment variables, then keyword overrides."""
        environ = os.environ if environ is None else environ
        values = {}
        for f in fields(cls):
            raw = environ.get(ENV_PREFIX + f.name.upper())
            if raw is not None:
                values[f.name] = int(float(raw)) if f.type in (int, "int") else float(raw)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def with_(self, **changes) -> "Config":
        return replace(self, **changes)


DEFAULT = Config()


def get_default() -> Config:
    return DEFAULT


def set_default(config: Config) -> None:
    global DEFAULT
    DEFAULT = config
