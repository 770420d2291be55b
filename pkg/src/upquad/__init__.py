"""Online up-concave maximization by quadratization, with feedback-model transforms."""

__version__ = "0.1.0"
