"""shadowlab - numerical laboratory for symplectic shadows.

Computes volumes of symplectic projections of embedded balls, checks the
linear and local middle-dimensional non-squeezing inequalities, and carries
the contact-geometric toolkit (Reeb averaging, normal forms, minimal action)
those checks rest on.
"""

__version__ = "0.1.0"
