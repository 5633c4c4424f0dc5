"""Multi-factor seasonal stochastic-volatility model for commodity futures."""
