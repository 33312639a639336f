"""Lane-change assistance stack: simulator, classifier, warning engine."""

__version__ = "0.1.0"
