"""Three-body-interacting circuit-QED qubits and the lattice Pfaffian they realise."""

__version__ = "0.1.0"
