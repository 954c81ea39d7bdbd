#!/usr/bin/env python3
"""Exact spectra of the hierarchical Laplacian on finite volumes.

The operator averages a field over the nested cubes around each site
with geometrically decaying weights.  On the depth-N volume its
spectrum is known in closed form; this script builds it three ways --
closed form, dense eigendecomposition, hierarchical (Haar-type)
eigenbasis -- and shows they coincide.
"""

import numpy as np

from hierspec import (HaarBasis, LatticeParams, VolumeGrid, apply_laplacian,
                      assemble_dense, dense_spectrum, dirichlet_spectrum)

params = LatticeParams(nu=2, p=0.5)
grid = VolumeGrid(params, depth=6)
print(f"lattice: nu={params.nu}, p={params.p}, spectral dimension "
      f"s_h={params.s_h:.3f}")
print(f"volume: depth {grid.depth}, {grid.n_sites} sites\n")

closed = dirichlet_spectrum(grid)
print("closed-form spectrum of -L (eigenvalue, multiplicity):")
for value, mult in closed.entries:
    print(f"  {value:<12.10g} x{mult}")

dense = dense_spectrum(grid)
print("\ndense eigendecomposition agrees entry by entry:")
for (v1, m1), (v2, m2) in zip(closed.entries, dense.entries):
    print(f"  closed {v1:.12f} x{m1}   dense {v2:.12f} x{m2}")

# the eigenbasis is explicit: detail vectors per cube plus the constant.
# forward/inverse cost O(n log n) and diagonalize the operator exactly.
basis = HaarBasis(grid)
rng = np.random.default_rng(0)
field = rng.standard_normal(grid.n_sites)
roundtrip = np.max(np.abs(basis.inverse(basis.forward(field)) - field))
action_gap = np.max(np.abs(basis.apply_operator(field)
                           - assemble_dense(grid) @ field))
print(f"\nhierarchical eigenbasis round-trip error: {roundtrip:.2e}")
print(f"diagonalized action vs dense matvec:       {action_gap:.2e}")

# the fast apply path never forms the matrix; same answer
fast = apply_laplacian(field, grid, mode="fast")
naive = apply_laplacian(field, grid, mode="naive")
print(f"fast sweep vs rank-by-rank evaluation:     "
      f"{np.max(np.abs(fast - naive)):.2e}")
