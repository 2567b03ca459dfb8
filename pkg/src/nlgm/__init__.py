"""Evaluation metrics and correlation tooling for task-oriented dialogue NLG."""

__version__ = "0.1.0"
