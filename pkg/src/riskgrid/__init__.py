"""Copula-GARCH portfolio risk forecasting, backtesting, and model-risk quantification."""

__version__ = "0.1.0"
