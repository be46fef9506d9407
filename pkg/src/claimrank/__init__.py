"""Class balancing by contextual lexical substitution, claim ranking and evaluation."""

__version__ = "0.1.0"
