"""Model specifications from ``key=value`` files.

Recognised keys::

    kind   = fGn | fOU
    alpha  = diffusion exponent in (0, 2)    (or H = alpha / 2)
    lambda = fOU mean-reversion rate, > 0    (default 1)
    sigma  = fOU noise scale, > 0            (default 1)

Blank lines and text after ``#`` are ignored.
"""
from __future__ import annotations

from pathlib import Path
from typing import Mapping

from .errors import ValidationError
from .models import ModelSpec

KEYS = ("kind", "alpha", "H", "lambda", "sigma")


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{source}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ValidationError(f"{source}:{lineno}: unknown key {key!r}; known keys: {', '.join(KEYS)}")
        if key in out:
            raise ValidationError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = val
    return out


def model_from_mapping(items: Mapping[str, str], source: str = "<config>") -> ModelSpec:
    if "kind" not in items:
        raise ValidationError(f"{source}: missing 'kind'")
    if ("alpha" in items) == ("H" in items):
        raise ValidationError(f"{source}: give exactly one of 'alpha' or 'H'")

    def num(key, default=None):
        if key not in items:
            return default
        try:
            return float(items[key])
        except ValueError:
            raise ValidationError(f"{source}: {key} must be a number, got {items[key]!r}") from None

    alpha = num("alpha") if "alpha" in items else 2.0 * num("H")
    return ModelSpec(items["kind"], alpha, num("lambda", 1.0), num("sigma", 1.0))


def load_model(path) -> ModelSpec:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {p}: {exc}") from exc
    return model_from_mapping(parse_config_text(text, str(p)), str(p))
