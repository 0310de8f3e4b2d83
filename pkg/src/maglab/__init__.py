"""maglab: ground states of the magnetic Laplacian with vanishing fields."""

__version__ = "0.1.0"
