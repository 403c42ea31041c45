"""Private counterfactual retrieval over replicated non-colluding servers."""

__version__ = "0.1.0"
