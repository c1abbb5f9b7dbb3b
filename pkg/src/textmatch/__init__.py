"""textmatch: a self-contained neural text matching engine.

Composable text preprocessing, matching-specific neural layers over a small
reverse-mode autodiff core, three representative matching models, ranking
losses and metrics, seeded random-search tuning, and an interactive studio
service with a CLI front door.
"""

__version__ = "0.1.0"
