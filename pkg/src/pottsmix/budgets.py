"""Enumeration budgets.

Every exact computation that enumerates an exponentially large set checks its
size against one of these limits first. Each default can be overridden through
an environment variable (read at call time, so tests can monkeypatch it).
"""

from __future__ import annotations

import os

DEFAULTS = {
    # configurations enumerated for Z and Gibbs probabilities
    "states": 10**7,
    # r-subsets enumerated by alpha_r
    "subsets": 2 * 10**6,
    # states for an explicitly materialised transition operator
    "dense": 4096,
    # states for vector iteration against the implicit operator
    "vector": 10**6,
    # states for exhaustive conductance minimisation over 2^|Omega| subsets
    "conductance": 16,
    # block configurations q^|S| per block
    "block": 10**5,
}

ENV_NAMES = {name: f"POTTSMIX_{name.upper()}_BUDGET" for name in DEFAULTS}


def budget(name: str) -> int:
    raw = os.environ.get(ENV_NAMES[name])
    if raw is None:
        return DEFAULTS[name]
    return int(raw)
