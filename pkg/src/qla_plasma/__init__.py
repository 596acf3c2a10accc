"""Qubit-lattice simulation of electromagnetic waves in cold magnetized plasma."""

__version__ = "0.1.0"
