"""Deterministic seed derivation.

One master seed reproduces a whole campaign.  Every stage derives its own
seed as ``derive_seed(master, *labels)`` where the labels name the stage
("split", "ensemble", run index, ...).  The derivation hashes the decimal
master seed and the labels with SHA-256 and keeps the low 63 bits, so it is
stable across platforms and Python versions (unlike ``hash()``).
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(master: int, *labels: int | str) -> int:
    """Derive a child seed from a master seed and a label path."""
    key = ":".join([str(int(master))] + [str(lab) for lab in labels])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & (2**63 - 1)


def derive_rng(master: int, *labels: int | str) -> np.random.Generator:
    """Generator seeded by :func:`derive_seed` of the same arguments."""
    return np.random.default_rng(derive_seed(master, *labels))
