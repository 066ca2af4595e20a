"""Size caps shared by the dense/enumerative code paths.

Defaults can be raised through the ``DESIGNFORGE_CAPS`` environment variable,
a comma separated list of ``key=value`` pairs, e.g.
``DESIGNFORGE_CAPS="dense_dim=8192,enumeration=131072"``.
"""

import os
from contextlib import contextmanager
from dataclasses import dataclass, fields, replace

ENV_VAR = "DESIGNFORGE_CAPS"


@dataclass(frozen=True)
class Caps:
    dense_dim: int = 4096  # largest operator dimension handled densely
    max_entries: int = 2**26  # largest Kronecker product materialized
    enumeration: int = 2**16  # largest design enumerated exhaustively
    matching_k: int = 6
    mc_samples: int = 100_000
    mc_tolerance: float = 0.05
    certification_vertices: int = 200_000
    power_maxiter: int = 100_000


def parse_caps(text, base=None):
    base = base or Caps()
    if not text:
        return base
    types = {f.name: f.type for f in fields(Caps)}
    updates = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        key, _, value = item.partition("=")
        key = key.strip()
        if key not in types:
            raise ValueError(f"unknown cap {key!r}")
        conv = float if types[key] in (float, "float") else int
        updates[key] = conv(value)
    return replace(base, **updates)


_override = []


def current_caps():
    if _override:
        return _override[-1]
    return parse_caps(os.environ.get(ENV_VAR, ""))


@contextmanager
def use_caps(caps):
    """Temporarily replace the active caps (innermost wins)."""
    _override.append(caps)
    try:
        yield caps
    finally:
        _override.pop()
