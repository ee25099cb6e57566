"""Knowledge-graph random-walk retrieval and reasoning pipeline.

Anchors a question concept in a ConceptNet graph, builds directed
random-walk triple chains, verbalizes them, assembles prompts under the
experiment regimes, queries a generation backend, and scores
multiple-choice answers with lenient matching.
"""

__version__ = "0.1.0"
