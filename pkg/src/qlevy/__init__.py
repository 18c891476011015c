"""qlevy: noncommutative *-bialgebra calculus and quantum Levy process numerics."""

__version__ = "0.1.0"
