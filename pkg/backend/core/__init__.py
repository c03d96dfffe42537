"""Numerical kernels: grid, transport, elasticity, flow solver, analyses."""
