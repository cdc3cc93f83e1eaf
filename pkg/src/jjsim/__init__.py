"""Josephson-junction-array simulations: array normal modes, qubit QED and Holstein-chain ED."""

__version__ = "0.1.0"
