"""The walk annihilated at a marked site: resolvent and kernel.

Killing the walk at a single site x0 is a rank-one modification of the
resolvent.  With r = d(x0, x) >= 1 and

    Rt_lam(r) = -1/((lam + p**(r-1)) nu**r)
                - (1-1/nu) sum_{s=0}^{r-1} 1/((lam + p**s) nu**s)

(a finite sum; it equals R_lam(x0,x) - R_lam(x,x)), the annihilated
diagonal resolvent is

    R1_lam(x,x) = -2 Rt_lam(r) - Rt_lam(r)**2 / R_lam(x,x).

At x0 itself the annihilated kernel vanishes identically.  As lam -> 0
the second term dies whenever R_lam(x,x) diverges (p*nu <= 1), leaving
the coefficient a(r) = -2 Rt_0(r); in the transient regime the limit
keeps its finite correction -Rt_0**2/R_0.

The kernel diagonal p1(t,x,x) is recovered by an inverse Laplace
transform along the boundary of the sector |arg lam| < 3*pi/4 (two
rays, angle +-3*pi/4).  The lam->0 limit is subtracted analytically
before quadrature -- a constant integrates to zero over the full
boundary -- which removes the large-t cancellation and tightens the
truncation bound |R1 - R1_0| <= 1/|Im lam| + |R1_0|.  For t < 1
quadrature is wasteful and the value is taken from a Krylov matrix
exponential of the x0-deleted operator on a finite volume (boundary
leak ~ p**depth * t).
"""

import cmath
import math
from functools import lru_cache

import numpy as np

from .errors import CertificationError, DomainError, SpectrumProximityError
from .closedform import SECTOR_ANGLE, resolvent, resolvent_zero
from .hierops import VolumeGrid, apply_laplacian, expm_action
from .lattice import LatticeParams

_RAY = cmath.exp(1j * SECTOR_ANGLE)


def _check_r(r: int):
    if r < 1:
        raise DomainError("annihilated-walk quantities need r = d(x0,x) >= 1; "
                          "at x0 they vanish identically")


def _require_sector_off_atoms(params: LatticeParams, lam: complex, r: int,
                              min_dist: float = 1e-13):
    if abs(cmath.phase(complex(lam))) > SECTOR_ANGLE + 1e-12 and lam != 0:
        raise DomainError(f"lam = {lam} outside the sector |arg| <= 3*pi/4")
    for s in range(r):
        if abs(lam + params.p**s) < min_dist:
            raise SpectrumProximityError(
                f"lam = {lam} within {min_dist} of -p**{s}")


def resolvent_tilde(params: LatticeParams, lam: complex, r: int) -> complex:
    """Rt_lam(r) = R_lam(x0, x) - R_lam(x, x); a finite sum, lam=0 allowed."""
    _check_r(r)
    _require_sector_off_atoms(params, lam, r)
    nu, p = params.nu, params.p
    lam = complex(lam)
    value = -1.0 / ((lam + p ** (r - 1)) * nu**r)
    coeff = 1.0 - 1.0 / nu
    for s in range(r):
        value -= coeff / ((lam + p**s) * nu**s)
    if lam.imag == 0.0 and lam.real >= 0.0:
        return complex(value.real, 0.0)
    return value


def a_coefficient(params: LatticeParams, r: int) -> float:
    """a(r) = -2 Rt_0(r), the lam -> 0 limit of R1 when R_lam blows up."""
    return -2.0 * resolvent_tilde(params, 0.0, r).real


def annihilated_resolvent_zero(params: LatticeParams, r: int) -> float:
    """lam -> 0 limit of the annihilated diagonal resolvent.

    Equals a(r) for p*nu <= 1; in the transient regime the finite
    Green function keeps the rank-one correction alive:
    a(r) - Rt_0(r)**2 / R_0(x,x).
    """
    _check_r(r)
    tilde0 = resolvent_tilde(params, 0.0, r).real
    value = -2.0 * tilde0
    if params.p * params.nu > 1.0:
        value -= tilde0**2 / resolvent_zero(params, 0)
    return value


def resolvent_annihilated(params: LatticeParams, lam: complex, r: int,
                          tol: float = 1e-14) -> complex:
    """Diagonal resolvent of the x0-killed walk at distance r from x0."""
    _check_r(r)
    tilde = resolvent_tilde(params, lam, r)
    diag = resolvent(params, lam, 0, tol=tol)
    value = -2.0 * tilde - tilde * tilde / diag
    if complex(lam).imag == 0.0 and complex(lam).real > 0.0:
        return complex(value.real, 0.0)
    return value


def _resolvent_diag_array(params: LatticeParams, lam: np.ndarray,
                          tol_weighted: float) -> np.ndarray:
    """Vectorized diagonal resolvent over an array of sector points.

    Contour quadrature weights scale like |lam|, which cancels the
    1/|lam| growth of the per-point series tail; the stopping rule
    therefore certifies sum_i w_i err(lam_i) <= tol_weighted for any
    node set with sum w_i/|lam_i| <= 64 (true for the panel layouts
    used here, whose logarithmic span is bounded by that).
    """
    nu, p = params.nu, params.p
    coeff = 1.0 - 1.0 / nu
    value = np.zeros_like(lam, dtype=complex)
    s = 0
    while True:
        value += coeff / ((lam + p**s) * float(nu) ** s)
        if 91.0 * nu ** (-(s + 1)) <= tol_weighted:
            return value
        s += 1
        if s > 200_000:
            raise CertificationError("resolvent series did not certify")


def _tilde_array(params: LatticeParams, lam: np.ndarray, r: int) -> np.ndarray:
    nu, p = params.nu, params.p
    value = -1.0 / ((lam + p ** (r - 1)) * float(nu) ** r)
    coeff = 1.0 - 1.0 / nu
    for s in range(r):
        value = value - coeff / ((lam + p**s) * float(nu) ** s)
    return value


def _r1_array(params: LatticeParams, lam: np.ndarray, tol: float,
              r: int) -> np.ndarray:
    tilde = _tilde_array(params, lam, r)
    return -2.0 * tilde - tilde * tilde / _resolvent_diag_array(params, lam, tol)


# ---------------------------------------------------------------------------
# contour quadrature (t >= 1)

_GL_CACHE: dict = {}


def _gl_nodes(n: int):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _panel_edges(u_lo: float, u_hi: float, t: float) -> np.ndarray:
    """Geometric panels refined so each spans <= ~6 radians of e^{iut/sqrt2}."""
    edges = [u_hi]
    u = u_hi
    while u > u_lo:
        u = max(u / 2.0, u_lo)
        edges.append(u)
    edges = np.array(edges[::-1])
    out = [edges[0]]
    max_width = 6.0 * math.sqrt(2.0) / t
    for a, b in zip(edges, edges[1:]):
        pieces = max(1, int(math.ceil((b - a) / max_width)))
        out.extend(a + (b - a) * np.arange(1, pieces + 1) / pieces)
    return np.asarray(out)


def _contour_p1(params: LatticeParams, t: float, r: int,
                tol: float) -> tuple[float, float]:
    """Sector-boundary inverse Laplace for p1(t,x,x); returns (value, err)."""
    a0 = annihilated_resolvent_zero(params, r)
    # truncation radius: (1/pi) e^{-Ut/sqrt2} (2/(Ut) + sqrt2 |a0|/t) <= tol/4
    c = math.sqrt(2.0) / t
    u_hi = c
    for _ in range(200):
        bound = (math.exp(-u_hi / c) * (2.0 / (u_hi * t) + abs(a0) * c)
                 / math.pi)
        if bound <= tol / 4.0:
            break
        u_hi *= 1.5
    else:
        raise CertificationError("could not certify contour truncation")
    # inner cutoff: the integrand is bounded near 0 (R1 -> a0)
    u_lo = u_hi * 1e-14

    def segment(lam_flat):
        return np.exp(lam_flat * t) * (
            _r1_array(params, lam_flat, tol * 0.25, r) - a0)

    def integrate(n_gl):
        nodes, weights = _gl_nodes(n_gl)
        edges = _panel_edges(u_lo, u_hi, t)
        a, b = edges[:-1], edges[1:]
        mid, half = (a + b) / 2.0, (b - a) / 2.0
        u = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
        f = segment(u * _RAY).reshape(len(a), n_gl)
        return complex((half * (f @ weights)).sum())

    i16, i32 = integrate(16), integrate(32)
    quad_err = abs(i32 - i16) / math.pi
    # contribution of (0, u_lo): integrand bounded by its size nearby
    probe = np.abs(segment(np.array([u_lo, u_lo / 2.0]) * _RAY)).max()
    inner_err = 4.0 * u_lo * probe / math.pi
    value = (_RAY * i32).imag / math.pi
    err = quad_err + inner_err + tol / 4.0
    if err > tol:
        raise CertificationError(
            f"contour quadrature error estimate {err:.3g} exceeds {tol:.3g}")
    return value, err


def _contour_p1_tail(params: LatticeParams, T: float, r: int,
                     tol: float) -> float:
    """int_T^inf p1(t,x,x) dt by one sector-boundary integral.

    Integrating e^{lam t} in t first (legitimate only after removing
    the lam -> 0 limit a0, whose kernel contribution is conditionally
    convergent) turns the kernel contour into

        (1/pi) int_0^inf -Im[ e^{lam T} (R1_lam - a0) ] / u du,
        lam = u e^{3 i pi /4}.

    The ray pairing cancels the 1/lam pole; the integrand keeps an
    integrable u**(alpha-1) endpoint singularity from R1 - a0 ~
    lam**alpha, so the inner cutoff shrinks until the remainder
    certifies -- impossible only as alpha -> 0, where the caller falls
    back to t-quadrature.  One contour per (T, r) replaces a full
    t-quadrature of p1_diag values.
    """
    a0 = annihilated_resolvent_zero(params, r)
    c = math.sqrt(2.0) / T
    u_hi = c
    for _ in range(200):
        bound = (math.exp(-u_hi / c)
                 * (2.0 / (u_hi**2 * T) + math.sqrt(2.0) * abs(a0) / (u_hi * T))
                 / math.pi)
        if bound <= tol / 4.0:
            break
        u_hi *= 1.5
    else:
        raise CertificationError("could not certify tail-contour truncation")

    def values(u):
        lam = u * _RAY
        r1 = _r1_array(params, lam, tol * 0.25, r)
        return -(np.exp(lam * T) * (r1 - a0)).imag / u

    alpha_floor = max(abs(params.alpha), 0.125)
    u_lo = u_hi * 1e-10
    for _ in range(40):
        inner_err = (2.0 * abs(float(values(np.array([u_lo]))[0])) * u_lo
                     / (alpha_floor * math.pi))
        if inner_err <= tol / 4.0:
            break
        u_lo /= 8.0
    else:
        raise CertificationError("tail-contour inner remainder did not certify")

    def integrate(n_gl):
        nodes, weights = _gl_nodes(n_gl)
        edges = _panel_edges(u_lo, u_hi, T)
        a, b = edges[:-1], edges[1:]
        mid, half = (a + b) / 2.0, (b - a) / 2.0
        u = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
        f = values(u).reshape(len(a), n_gl)
        return float((half * (f @ weights)).sum())

    i16, i32 = integrate(16), integrate(32)
    quad_err = abs(i32 - i16) / math.pi
    if quad_err + inner_err + tol / 2.0 > tol:
        raise CertificationError(
            f"tail-contour error estimate {quad_err + inner_err:.3g} "
            f"exceeds {tol:.3g}")
    return i32 / math.pi


# ---------------------------------------------------------------------------
# small-t path: Krylov exponential of the deleted operator on a finite volume


def _default_depth(params: LatticeParams, r: int) -> int:
    by_size = max(2, round(math.log(16384) / math.log(params.nu)))
    return max(r + 2, by_size)


@lru_cache(maxsize=64)
def _deleted_expm_setup(nu: int, p: float, r: int, depth: int):
    params = LatticeParams(nu, p)
    grid = VolumeGrid(params, depth)
    x = nu ** (r - 1)  # first site at distance exactly r from x0 = 0

    def matvec(v):
        w = v.copy()
        w[0] = 0.0
        out = apply_laplacian(w, grid, mode="fast")
        out[0] = 0.0
        return out

    v0 = np.zeros(grid.n_sites)
    v0[x] = 1.0
    return matvec, v0, x


def p1_small_t(params: LatticeParams, ts, r: int,
               depth: int | None = None) -> np.ndarray:
    """p1(t,x,x) from the finite-volume deleted operator, vectorized in t.

    Accuracy is limited by the boundary leak ~ p**depth * t, which is
    why this path serves only small t.
    """
    _check_r(r)
    depth = depth or _default_depth(params, r)
    if r >= depth:
        raise DomainError("need r < depth so x stays inside the volume")
    matvec, v0, x = _deleted_expm_setup(params.nu, params.p, r, depth)
    ts_arr = np.atleast_1d(np.asarray(ts, dtype=float))
    vals = expm_action(matvec, v0, ts_arr)[:, x]
    vals = np.clip(vals, 0.0, 1.0)
    return vals if np.ndim(ts) else float(vals[0])


def p1_diag(params: LatticeParams, t: float, r: int, tol: float = 1e-10,
            depth: int | None = None) -> float:
    """Annihilated-kernel diagonal p1(t, x, x) at distance r from x0.

    t >= 1 uses the certified sector-contour integral; t < 1 delegates
    to the finite-volume matrix exponential (error ~ p**depth * t).
    Always in [0, 1].
    """
    _check_r(r)
    if t < 0:
        raise DomainError("time must be nonnegative")
    if t < 1.0:
        return float(p1_small_t(params, float(t), r, depth=depth))
    value, _ = _contour_p1(params, t, r, tol)
    return min(max(value, 0.0), 1.0)


# ---------------------------------------------------------------------------
# time integrals of p1


_LOG_STEP = 0.5


@lru_cache(maxsize=65536)
def _p1_head_integral(params: LatticeParams, T: float, r: int,
                      gamma: float) -> float:
    """int_0^T t**(-gamma) p1 dt for T <= 1, gamma in [0, 1).

    The substitution w = t**(1-gamma) removes the endpoint singularity
    and all nodes land in the Krylov small-t path (one Lanczos basis).
    """
    one_m_g = 1.0 - gamma

    def gl_value(n):
        nodes, weights = _gl_nodes(n)
        w_hi = T**one_m_g
        mid, half = w_hi / 2.0, w_hi / 2.0
        w = mid + half * nodes
        ts = w ** (1.0 / one_m_g)
        f = p1_small_t(params, ts, r)
        return float(half * (f @ weights)) / one_m_g

    v16, v32 = gl_value(16), gl_value(32)
    if abs(v32 - v16) > 1e-6 * max(1.0, abs(v32)):
        raise CertificationError("p1 time quadrature did not stabilize")
    return v32


@lru_cache(maxsize=200_000)
def _p1_log_panel(params: LatticeParams, r: int, gamma: float,
                  k: int) -> tuple[float, float]:
    """(value, error estimate) of int t**(-gamma) p1 dt over the k-th
    logarithmic panel [exp(k h), exp((k+1) h)], via GL in y = ln t."""
    return _p1_log_segment(params, r, gamma, k * _LOG_STEP, (k + 1) * _LOG_STEP)


def _p1_log_segment(params: LatticeParams, r: int, gamma: float,
                    y_lo: float, y_hi: float) -> tuple[float, float]:
    def gl_value(n):
        nodes, weights = _gl_nodes(n)
        mid, half = (y_lo + y_hi) / 2.0, (y_hi - y_lo) / 2.0
        y = mid + half * nodes
        f = np.array([math.exp(yy * (1.0 - gamma)) * p1_diag(params, math.exp(yy), r)
                      for yy in y])
        return float(half * (f @ weights))

    v16, v32 = gl_value(16), gl_value(32)
    return v32, abs(v32 - v16)


def _integral_p1_upto(params: LatticeParams, T: float, r: int,
                      gamma: float = 0.0) -> float:
    """int_0^T t**(-gamma) p1(t,x,x) dt, gamma in [0, 1).

    [0, min(T,1)] goes through the Krylov small-t path; [1, T] is
    covered by logarithmic Gauss panels that are memoized per panel, so
    sweeps over many T values share almost all contour evaluations.
    """
    if T <= 0.0:
        return 0.0
    if T <= 1.0:
        return _p1_head_integral(params, T, r, gamma)
    total = _p1_head_integral(params, 1.0, r, gamma)
    y_t = math.log(T)
    k_full = int(math.floor(y_t / _LOG_STEP))
    err = 0.0
    for k in range(k_full):
        v, e = _p1_log_panel(params, r, gamma, k)
        total += v
        err += e
    if y_t > k_full * _LOG_STEP:
        v, e = _p1_log_segment(params, r, gamma, k_full * _LOG_STEP, y_t)
        total += v
        err += e
    if err > 1e-6 * max(1.0, abs(total)):
        raise CertificationError("p1 time quadrature did not stabilize")
    return total


@lru_cache(maxsize=65536)
def p1_tail_integral(params: LatticeParams, T: float, r: int,
                     tol: float = 1e-10) -> float:
    """int_T^inf p1(t, x, x) dt.

    T = 0 is the exact lam -> 0 resolvent limit (equal to
    a(r) = -2 Rt_0(r) when s_h < 2); T > 0 is a single sector-contour
    integral.  Results are memoized: potential sweeps hit the same
    (T, r) pair once per shell of equal V.
    """
    _check_r(r)
    if T < 0:
        raise DomainError("lower limit must be nonnegative")
    full = annihilated_resolvent_zero(params, r)
    if T == 0.0:
        return full
    try:
        return max(_contour_p1_tail(params, T, r, tol), 0.0)
    except CertificationError:
        # near s_h = 2 the contour endpoint decays only logarithmically;
        # subtract the [0, T] quadrature from the exact limit instead
        return max(full - _integral_p1_upto(params, T, r), 0.0)


@lru_cache(maxsize=65536)
def p1_weighted_tail_integral(params: LatticeParams, T: float, gamma: float,
                              r: int) -> float:
    """int_T^inf t**(-gamma) p1(t, x, x) dt for gamma > 0.

    For 0 < gamma < 1 the full integral has the Mellin representation
    (1/Gamma(gamma)) int_0^inf lam**(gamma-1) R1_lam(x,x) dlam over the
    positive real axis, which is cheap and accurate; T > 0 subtracts
    the [0, T] piece.  gamma >= 1 needs T > 0 (the integrand is not
    integrable at t = 0) and is evaluated by direct quadrature.
    """
    _check_r(r)
    if gamma <= 0:
        raise DomainError("gamma must be positive; use p1_tail_integral")
    if T < 0:
        raise DomainError("lower limit must be nonnegative")
    from scipy.integrate import quad
    from scipy.special import gamma as gamma_fn

    if gamma < 1.0:
        def integrand(lam):
            if lam == 0.0:
                return 0.0
            return (lam ** (gamma - 1.0)
                    * resolvent_annihilated(params, lam, r).real)

        full, err = quad(integrand, 0.0, np.inf, limit=400)
        full /= gamma_fn(gamma)
        if T == 0.0:
            return full
        return max(full - _integral_p1_upto(params, T, r, gamma=gamma), 0.0)

    if T == 0.0:
        raise DomainError(
            "t**(-gamma) p1 is not integrable at t=0 for gamma >= 1")
    t_mid = max(T, 1.0)

    def log_integrand(y):
        if y > 700.0:  # e^{-y(gamma+alpha)} regime, below underflow
            return 0.0
        return math.exp(y * (1.0 - gamma)) * p1_diag(params, math.exp(y), r)

    tail, _ = quad(log_integrand, math.log(t_mid), np.inf, limit=200)
    head = 0.0
    if T < 1.0:
        head, _ = quad(lambda t: t ** (-gamma) * float(p1_small_t(params, t, r)),
                       T, 1.0, limit=200)
    return head + tail
