"""Numerical toolkit for classical-quantum wiretap channels.

Density-operator linear algebra, cq channel models, entropic quantities,
random-codebook resolvability and wiretap code experiments, and the
discrimination-based security audit, with a seeded CLI front-end.
"""

__version__ = "0.1.0"

from .errors import CcqError  # noqa: E402,F401
