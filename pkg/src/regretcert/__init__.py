"""Exact verification toolkit for surrogate-loss/link pairs.

Given a discrete target loss, a polyhedral surrogate, and a polyhedral link,
the package computes exact (rational-arithmetic) consistency certificates:
separation and Hoffman constants, the factored linear regret-transfer bound,
and the optimal transfer constant, together with randomized exact validation
of the transfer inequalities.  A floating-point companion module demonstrates
the square-root transfer barrier for smooth, locally strongly convex
surrogates.
"""

__version__ = "0.1.0"
