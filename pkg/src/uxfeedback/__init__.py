"""Survey comment analytics pipeline.

Ingests open-text survey comments and quantitative responses, classifies
comments into topic labels with one-vs-rest gradient boosted trees over
subword-hashed embeddings, generates citation-validated summaries, and
relates comment sentiment to UX metrics (NPS, tutorial quality, UX-Lite,
PSAT) with contingency-table statistics.
"""

__version__ = "0.1.0"
