"""Relation template table.

One sentence template per ConceptNet relation, shipped as package data.
Templates are lowercase with {subj}/{obj} slots and no trailing period.
Unknown relations have no fallback; verbalization fails loudly instead of
silently drifting the retrieval corpus.
"""

from __future__ import annotations

import json
from importlib import resources


def load_template_table(path=None) -> dict[str, tuple[str, bool]]:
    """Return relation name -> (template, symmetric).

    With no path, loads the table shipped with the package.
    """
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    else:
        ref = resources.files("kgwalk.data").joinpath("relation_templates.json")
        raw = json.loads(ref.read_text(encoding="utf-8"))
    table = {}
    for name, entry in raw.items():
        table[name] = (entry["template"], bool(entry.get("symmetric", False)))
    return table


_DEFAULT_TABLE: dict[str, tuple[str, bool]] | None = None


def default_template_table() -> dict[str, tuple[str, bool]]:
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = load_template_table()
    return _DEFAULT_TABLE
