"""Bootstrap percolation, droplets and kinetically constrained models."""
