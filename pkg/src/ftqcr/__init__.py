"""Resource estimates for magic-state factories on silicon spin-qubit hardware."""

__version__ = "0.1.0"
