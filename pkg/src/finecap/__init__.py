"""Fine-topology numerics on lattices: capacities, carving, Lipschitz numbers, BV tools and distortion."""

__version__ = "0.1.0"
