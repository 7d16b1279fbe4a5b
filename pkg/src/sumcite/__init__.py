"""Toolkit for generating and evaluating aspect-based summaries with
sentence-level citations: corpus handling, generation pipelines, entailment
metrics, agreement statistics and an annotation service."""

__version__ = "0.1.0"
