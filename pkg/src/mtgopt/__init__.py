"""Mortgage pass-through option pricing under a logistic-duration model.

Closed-form shifted-lognormal and parametric-lognormal call approximations,
validated against a seeded Monte Carlo reference pricer.
"""

__version__ = "0.1.0"
