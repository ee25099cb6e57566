"""Deterministic random-source derivation.

All randomness in an experiment flows from one global seed. Per-item
generators are derived as SHA-256(global_seed ":" item_id [":" extra...])
truncated to 64 bits, feeding Python's Mersenne Twister (random.Random).
Both the hash and the generator algorithm are documented and portable, so
a manifest (seed, item id) pair pins every random choice.
"""

from __future__ import annotations

import hashlib
import random


def derive_seed(global_seed: int, *parts: object) -> int:
    """Collapse (global_seed, parts...) into a stable 64-bit seed."""
    material = ":".join([str(global_seed)] + [str(p) for p in parts])
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derived_rng(global_seed: int, *parts: object) -> random.Random:
    """Mersenne Twister generator seeded from derive_seed."""
    return random.Random(derive_seed(global_seed, *parts))
