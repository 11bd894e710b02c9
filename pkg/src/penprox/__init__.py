"""Constrained convex optimization via alternating proximal penalty steps.

Building blocks: linear operators (`linop`), prox maps and projections
(`prox`), the quadratic penalty and its certificates (`penalty`), the two
main solvers plus their specializations (`papa`), comparator methods
(`baselines`), seeded benchmark generators with reference oracles
(`problems`), and a reproducible experiment harness (`bench`, `cli`).
"""

from . import baselines, bench, linop, papa, penalty, problems, prox, trace

__all__ = ["baselines", "bench", "linop", "papa", "penalty", "problems",
           "prox", "trace"]

__version__ = "0.1.0"
