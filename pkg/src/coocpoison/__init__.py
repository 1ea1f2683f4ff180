"""Corpus-poisoning toolkit for word embeddings.

Pipeline: count weighted cooccurrences, pick a distributional proximity
objective over them, greedily optimize a cooccurrence change vector, place it
into the corpus as concrete token sequences (optionally perplexity-evasive),
retrain a compact embedding, and measure the semantic shift.
"""

__version__ = "0.1.0"
