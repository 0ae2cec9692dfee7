"""Output-feedback H-infinity consensus over Markov-switching digraphs."""

__version__ = "0.1.0"
