"""Named bounded reference functions.

Simulator configs and diagnostic directions refer to functions by name so
experiment files stay serializable; arbitrary closures are deliberately
not accepted.  A function is ``scale * base(freq * s + shift)`` where the
scalar projection of a d-vector is s = sum(x) / sqrt(d) (the identity for
d = 1).

String form accepted in config files: ``sin``, ``tanh_scaled(scale=0.8)``,
``poly3(scale=0.5, freq=2, shift=-1)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

__all__ = ["NamedFunction", "available_functions", "parse_function"]

_BASE = {
    "zero": lambda s: np.zeros_like(s),
    "const": lambda s: np.ones_like(s),
    "sin": np.sin,
    "cos": np.cos,
    "tanh_scaled": np.tanh,
    "poly3": lambda s: s**3,
}


def available_functions() -> tuple[str, ...]:
    return tuple(sorted(_BASE))


@dataclass(frozen=True)
class NamedFunction:
    """A registry function with its shape parameters."""

    name: str
    scale: float = 1.0
    freq: float = 1.0
    shift: float = 0.0

    def __post_init__(self) -> None:
        if self.name not in _BASE:
            raise ValueError(
                f"unknown function {self.name!r}; available: {available_functions()}"
            )
        for field in ("scale", "freq", "shift"):
            object.__setattr__(self, field, float(getattr(self, field)))

    def __call__(self, x) -> np.ndarray:
        """Evaluate on an (n, d) matrix (or (n,) vector for d = 1)."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            s = x
        else:
            s = x.sum(axis=1) / np.sqrt(x.shape[1])
        return self.scale * _BASE[self.name](self.freq * s + self.shift)

    def at(self, x_point) -> float:
        """Evaluate at a single d-vector."""
        return float(self(np.atleast_2d(np.asarray(x_point, dtype=np.float64)))[0])

    def to_spec(self) -> str:
        """Config-file form; ``parse_function`` inverts it."""
        args = []
        if self.scale != 1.0:
            args.append(f"scale={self.scale!r}")
        if self.freq != 1.0:
            args.append(f"freq={self.freq!r}")
        if self.shift != 0.0:
            args.append(f"shift={self.shift!r}")
        return self.name if not args else f"{self.name}({', '.join(args)})"


_SPEC_RE = re.compile(r"^\s*([a-z0-9_]+)\s*(?:\((.*)\))?\s*$")


def parse_function(spec: str) -> NamedFunction:
    """Parse ``name`` or ``name(key=value, ...)`` into a NamedFunction."""
    m = _SPEC_RE.match(spec)
    if not m:
        raise ValueError(f"malformed function spec {spec!r}")
    name, argstr = m.group(1), m.group(2)
    kwargs: dict[str, float] = {}
    if argstr and argstr.strip():
        for part in argstr.split(","):
            if "=" not in part:
                raise ValueError(f"malformed argument {part!r} in {spec!r}")
            key, value = part.split("=", 1)
            key = key.strip()
            if key not in ("scale", "freq", "shift"):
                raise ValueError(f"unknown argument {key!r} in {spec!r}")
            kwargs[key] = float(value)
    return NamedFunction(name, **kwargs)
