"""Fast oracle-equivalence battery behind `hierspec selftest`.

Each check recomputes a library quantity by an independent route
(brute-force search, dense linear algebra, matrix exponentials) and
compares at tight tolerance.  Runs in a few seconds; the full pytest
suite is the authoritative version of these comparisons.
"""

import math

import numpy as np
import scipy.linalg

from . import annihilated as ann
from . import closedform as cf
from .errors import DivergentIntegralError
from .hierops import HaarBasis, VolumeGrid, apply_laplacian, assemble_dense, \
    dirichlet_spectrum
from .lattice import LatticeParams, hier_distance


def _brute_distance(x, y, nu, max_rank=64):
    for r in range(max_rank):
        if x // nu**r == y // nu**r:
            return r
    raise AssertionError("no common cube found")


def run_selftest(verbose: bool = False) -> int:
    """Run all checks; returns the number of failures."""
    checks = []

    def check(name, ok):
        checks.append((name, bool(ok)))
        if verbose:
            print(f"[{'PASS' if ok else 'FAIL'}] {name}")

    rng = np.random.default_rng(20240817)

    # hierarchical distance vs brute-force minimal-cube search
    ok = all(hier_distance(x, y, nu) == _brute_distance(x, y, nu)
             for nu in (2, 3) for x in range(20) for y in range(20))
    check("hier_distance matches brute-force cube search", ok)

    # fast vs naive apply, and both vs the dense matrix
    pa = LatticeParams(2, 0.5)
    grid = VolumeGrid(pa, 6)
    psi = rng.standard_normal(grid.n_sites)
    fast = apply_laplacian(psi, grid, "fast")
    naive = apply_laplacian(psi, grid, "naive")
    dense = assemble_dense(grid) @ psi
    check("fast apply = naive apply", np.max(np.abs(fast - naive)) < 1e-12)
    check("apply = dense matvec", np.max(np.abs(fast - dense)) < 1e-12)

    # closed-form spectrum vs dense eigendecomposition
    for nu, p, depth in [(2, 0.5, 5), (3, 0.3, 4)]:
        g = VolumeGrid(LatticeParams(nu, p), depth)
        vals = np.sort(scipy.linalg.eigvalsh(-assemble_dense(g)))
        closed = np.sort(dirichlet_spectrum(g).expand())
        check(f"dense spectrum = closed form (nu={nu}, p={p}, N={depth})",
              np.max(np.abs(vals - closed)) < 1e-10)

    # Haar transform round trip and diagonal action
    basis = HaarBasis(grid)
    x = rng.standard_normal(grid.n_sites)
    check("haar round trip",
          np.max(np.abs(basis.inverse(basis.forward(x)) - x)) < 1e-12)
    check("haar diagonal action = dense",
          np.max(np.abs(basis.apply_operator(x) - assemble_dense(grid) @ x))
          < 1e-12)

    # heat kernel vs dense matrix exponential
    e_t = scipy.linalg.expm(1.0 * assemble_dense(grid))
    ok = all(abs(cf.heat_kernel(pa, 1.0, r) - e_t[0, [0, 1, 2, 4][r]])
             <= pa.p**grid.depth * 1.0 + 1e-9 for r in range(4))
    check("heat kernel = matrix exponential (N=6)", ok)
    check("heat kernel normalization at t=0",
          abs(cf.heat_kernel(pa, 0.0, 0) - 1.0) < 1e-13)

    # resolvent functional equation and transient Green values
    lam = 0.37
    resid = abs(cf.resolvent(pa, pa.p * lam, 0)
                - cf.resolvent(pa, lam, 0) / (pa.p * pa.nu)
                - (pa.nu - 1) / (pa.nu * (pa.p * lam + 1)))
    check("resolvent functional equation", resid < 1e-12)
    pa4 = LatticeParams(4, 0.5)
    check("Green function diagonal value",
          abs(cf.resolvent_zero(pa4, 0) - 1.5) < 1e-14)
    try:
        cf.green_tail_integral(LatticeParams(2, 0.3), 1.0, 0.0)
        check("recurrent divergence flagged", False)
    except DivergentIntegralError:
        check("recurrent divergence flagged", True)

    # annihilated resolvent vs deleted dense operator
    g8 = VolumeGrid(pa, 8)
    deleted = assemble_dense(g8)[1:, 1:]
    lam = 0.8
    oracle = np.linalg.inv(lam * np.eye(g8.n_sites - 1) - deleted)[1, 1]
    check("annihilated resolvent vs deleted dense solve",
          abs(ann.resolvent_annihilated(pa, lam, 2) - oracle) < 1e-6)
    check("a(1) = 2", abs(ann.a_coefficient(pa, 1) - 2.0) < 1e-14)
    check("a(3) closed form at p*nu = 1/2",
          abs(ann.a_coefficient(LatticeParams(2, 0.25), 3) - 11.0) < 1e-12)

    # p1 via contour vs deleted-operator matrix exponential
    p1 = ann.p1_diag(pa, 3.0, 2)
    oracle = scipy.linalg.expm(3.0 * deleted)[1, 1]
    check("p1 contour vs deleted matrix exponential",
          abs(p1 - oracle) <= pa.p**g8.depth * 3.0 + 1e-8)

    failures = sum(1 for _, ok in checks if not ok)
    if verbose:
        print(f"{len(checks) - failures}/{len(checks)} selftest checks passed")
    return failures
