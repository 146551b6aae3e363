"""White-box earthquake detection.

Waveform preprocessing, an interpretable time-series feature catalog,
sparse (elastic net) logistic regression with ensemble feature discovery,
and an imbalance-aware benchmark harness, composed behind a reproducible
CLI.
"""

__version__ = "0.1.0"
