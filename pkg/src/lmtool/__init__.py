"""Exact desk-scale algebra for ramified quadratic 2-adic arithmetic,
lattice norms, hermitian quadratic modules, and the associated chart ideals.

Subpackages are intentionally flat modules:

- ``qext``    arithmetic in wildly ramified quadratic extensions of 2-adic fields
- ``norms``   diagonal lattices, apartment norms, graded lattice chains
- ``poly``    sparse multivariate polynomials and Buchberger Groebner bases
- ``hqm``     hermitian quadratic modules, discriminants, normal forms
- ``charts``  the four local chart ideal families and their verification ops
- ``cli``     the ``lmtool`` command line front end
"""

__version__ = "0.1.0"
