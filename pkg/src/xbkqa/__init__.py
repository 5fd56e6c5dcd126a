"""XBK replica mapping of molecular Hamiltonians onto Ising models, with
exact and annealing-style classical solvers."""

__version__ = "0.1.0"
