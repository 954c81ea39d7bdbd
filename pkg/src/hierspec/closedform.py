"""Closed-form spectral functions of the infinite hierarchical lattice.

Everything here is an explicit series over the pure-point spectrum
{-p**k} with geometric weights, evaluated with certified tails:

* integrated density of states  N(lam) = nu**(-k0(lam)),
  k0(lam) = min{k >= 0 : p**k < lam};
* heat kernel
  p(t, r=0)  = (1-1/nu) sum_s exp(-p**s t) nu**(-s),
  p(t, r>=1) = -exp(-p**(r-1) t) nu**(-r)
               + (1-1/nu) sum_{s>=r} exp(-p**s t) nu**(-s);
* resolvent (Laplace transform of the heat kernel), same structure with
  1/(lam + p**s) in place of exp(-p**s t), valid on the sector
  |arg lam| <= 3*pi/4 away from the spectrum;
* Green function at lam=0 (transient case p*nu > 1 only);
* theta function and spectral zeta
  zeta(z) = (1 - 1/nu) p**z nu / (p**z nu - 1),
  poles where p**z nu = 1, i.e. z = s_h/2 + 2*pi*i*k/ln(1/p);
* tail integrals int_T^inf t**(-gamma) p(t,x,x) dt, the weights of the
  bound-state counting functionals.

Each truncated series carries an explicit geometric tail bound; a
result is only returned once that bound is below the requested
tolerance (:class:`CertificationError` otherwise).
"""

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from .errors import (CertificationError, DivergentIntegralError, DomainError,
                     SpectrumProximityError)
from .lattice import LatticeParams

SECTOR_ANGLE = 3.0 * math.pi / 4.0
_MAX_TERMS = 100_000


@dataclass(frozen=True)
class SpectralMeasure:
    """Atoms (p**k, (1-1/nu) nu**(-k)) of the density of states."""

    locations: tuple
    weights: tuple

    def total_weight(self) -> float:
        return sum(self.weights)


def spectral_measure(params: LatticeParams, n_atoms: int) -> SpectralMeasure:
    nu, p = params.nu, params.p
    locs = tuple(p**k for k in range(n_atoms))
    wts = tuple((1.0 - 1.0 / nu) * nu ** (-k) for k in range(n_atoms))
    return SpectralMeasure(locations=locs, weights=wts)


def _k0(params: LatticeParams, lam: float) -> int:
    """min{k >= 0 : p**k < lam}, robust at the atom boundaries."""
    if lam > 1.0:
        return 0
    p = params.p
    k = max(0, int(math.floor(math.log(lam) / math.log(p))))
    while p**k >= lam:
        k += 1
    while k > 0 and p ** (k - 1) < lam:
        k -= 1
    return k


def ids(params: LatticeParams, lam: float) -> float:
    """Integrated density of states N(lam) = nu**(-k0(lam)); 1 for lam > 1.

    A pure-point staircase with jumps at lam = p**k (the inequality in
    k0 is strict, so the value at an atom is the limit from below).
    """
    if lam <= 0:
        raise DomainError("ids needs lam > 0")
    return float(params.nu) ** (-_k0(params, lam))


def ids_profile(params: LatticeParams, lam: float) -> float:
    """Scaling profile F(lam) = N(lam) * lam**(-s_h/2).

    Bounded and multiplicatively periodic in lam with period p; equals
    nu**({z}-1) at z = ln(lam)/ln(p) away from the atoms.
    """
    return ids(params, lam) * lam ** (-params.s_h / 2.0)


# ---------------------------------------------------------------------------
# heat kernel


def heat_kernel(params: LatticeParams, t: float, r: int = 0,
                tol: float = 1e-14) -> float:
    """Return probability p(t, x, y) for d(x,y) = r, certified to ``tol``.

    The series is truncated with a first-order tail: for s > S every
    exp(-p**s t) lies in [1 - p**s t, 1], so the remaining mass lies in
    [A - B, A] with the geometric sums A, B known exactly; adding
    A - B/2 leaves a certified error B/2 <= tol (and makes small-t
    values, t = 0 in particular, exact).
    """
    if t < 0:
        raise DomainError("time must be nonnegative")
    if r < 0:
        raise DomainError("distance must be nonnegative")
    nu, p = params.nu, params.p
    value = 0.0 if r == 0 else -math.exp(-p ** (r - 1) * t) * nu ** (-r)
    s0 = 0 if r == 0 else r
    coeff = 1.0 - 1.0 / nu
    s = s0
    while True:
        value += coeff * math.exp(-(p**s) * t) * nu ** (-s)
        tail_hi = nu ** (-(s + 1))  # coeff * sum nu**-s' over s' > s
        tail_gap = coeff * t * (p / nu) ** (s + 1) * nu / (nu - p)
        if tail_gap <= 2.0 * tol or tail_hi <= tol:
            value += tail_hi - min(tail_gap, tail_hi) / 2.0
            break
        s += 1
        if s - s0 > _MAX_TERMS:
            raise CertificationError("heat kernel series did not certify")
    if value < -10.0 * tol:
        raise CertificationError("heat kernel evaluated negative")
    return min(max(value, 0.0), 1.0)


def heat_profile(params: LatticeParams, t: float, tol: float = 1e-12) -> float:
    """F(t) = t**(s_h/2) p(t, x, x); log-periodic for large t (period 1/p).

    The kernel itself decays like t**(-s_h/2), so its series tolerance
    is scaled down by that factor to keep the *profile* accurate to
    ``tol`` at any t.
    """
    if t <= 0:
        raise DomainError("heat profile needs t > 0")
    scale = t ** (params.s_h / 2.0)
    kernel_tol = max(tol / scale, 1e-300)
    return scale * heat_kernel(params, t, 0, tol=kernel_tol)


def heat_exterior_mass(params: LatticeParams, t: float, volume_rank: int,
                       tol: float = 1e-14) -> float:
    """Probability the walk sits outside the rank-R cube of its start.

    Closed form obtained by summing p(t, r) over the shells r > R
    (nu**(r-1) (nu-1) sites per shell):

        1 - (1-1/nu) exp(-p**R t)
          - (1-1/nu) nu**R sum_{s>R} exp(-p**s t) nu**(-s).
    """
    if volume_rank < 0:
        raise DomainError("volume rank must be nonnegative")
    nu, p = params.nu, params.p
    coeff = 1.0 - 1.0 / nu
    acc = 0.0
    s = volume_rank + 1
    while True:
        acc += math.exp(-(p**s) * t) * nu ** (-s)
        if nu ** (-(s + 1)) <= tol * nu ** (-volume_rank):
            break
        s += 1
        if s > volume_rank + _MAX_TERMS:
            raise CertificationError("exterior-mass series did not certify")
    value = 1.0 - coeff * math.exp(-(p**volume_rank) * t) - coeff * nu**volume_rank * acc
    return min(max(value, 0.0), 1.0)


# ---------------------------------------------------------------------------
# resolvent


def _require_sector(lam: complex):
    if lam == 0:
        raise DomainError("lam = 0 is the spectral accumulation point; "
                          "use resolvent_zero for the transient Green function")
    if abs(cmath.phase(complex(lam))) > SECTOR_ANGLE + 1e-12:
        raise DomainError(f"lam = {lam} outside the sector |arg| <= 3*pi/4")


def _require_off_spectrum(params: LatticeParams, lam: complex,
                          min_dist: float = 1e-13):
    k = 0
    while True:
        atom = -params.p**k
        if abs(lam - atom) < min_dist:
            raise SpectrumProximityError(
                f"lam = {lam} within {min_dist} of the spectrum point {atom}")
        if params.p**k < abs(lam) * 0.5 and k > 0:
            return
        k += 1
        if k > 60_000:
            return


def resolvent(params: LatticeParams, lam: complex, r: int = 0,
              tol: float = 1e-14) -> complex:
    """Resolvent kernel R_lam(x, y) for d(x,y) = r, certified to ``tol``.

    Valid on the sector |arg lam| <= 3*pi/4 excluding the spectrum
    {-p**k} and 0.  For real lam > 0 the diagonal value is real
    positive.
    """
    if r < 0:
        raise DomainError("distance must be nonnegative")
    _require_sector(lam)
    _require_off_spectrum(params, lam)
    nu, p = params.nu, params.p
    lam = complex(lam)
    value = 0.0 + 0.0j
    if r >= 1:
        value -= 1.0 / ((lam + p ** (r - 1)) * nu**r)
    coeff = 1.0 - 1.0 / nu
    # on the sector, |lam + p**s| >= |lam| / sqrt(2)
    tail_scale = math.sqrt(2.0) / abs(lam)
    s = 0 if r == 0 else r
    s0 = s
    while True:
        value += coeff / ((lam + p**s) * nu**s)
        if tail_scale * nu ** (-(s + 1)) <= tol:
            break
        s += 1
        if s - s0 > _MAX_TERMS:
            raise CertificationError("resolvent series did not certify")
    if abs(lam.imag) == 0.0 and lam.real > 0:
        return complex(value.real, 0.0)
    return value


def resolvent_zero(params: LatticeParams, r: int = 0) -> float:
    """Green function R_0(x, y) in the transient regime p*nu > 1.

    Diagonal (r=0): p (nu-1) / (p nu - 1).  Off-diagonal:
    (1-p) / ((p nu)**(r-1) (p nu - 1)), which decays like
    c / rho**(s_h - 2) with c = p nu (1-p) / (p nu - 1).
    """
    pnu = params.p * params.nu
    if pnu <= 1.0:
        raise DivergentIntegralError(
            f"p*nu = {pnu} <= 1: recurrent walk, no finite Green function")
    if r < 0:
        raise DomainError("distance must be nonnegative")
    if r == 0:
        return params.p * (params.nu - 1.0) / (pnu - 1.0)
    return (1.0 - params.p) / (pnu ** (r - 1) * (pnu - 1.0))


def resolvent_zero_constant(params: LatticeParams) -> float:
    """c = p nu (1-p)/(p nu - 1) in R_0 ~ c / rho**(s_h-2)."""
    pnu = params.p * params.nu
    if pnu <= 1.0:
        raise DivergentIntegralError("asymptotic constant needs p*nu > 1")
    return pnu * (1.0 - params.p) / (pnu - 1.0)


def resolvent_expansion(params: LatticeParams, lam: float,
                        tol: float = 1e-14) -> tuple[float, float, float]:
    """Small-lam structure of the diagonal resolvent when s_h < 2.

    R_lam(x,x) = lam**(-alpha) u(ln lam / ln p) + c0 + O(lam) with
    c0 = p (nu-1)/(p nu - 1) (negative here since p*nu < 1) and u
    positive, periodic with period one.  Returns

        (c0, u_est, drift_bound)

    where u_est = lam**alpha (R_lam - c0) estimates the profile and
    drift_bound = p**2 (nu-1) lam**(1+alpha) bounds
    |u_est(p lam) - u_est(lam)| exactly (the functional equation
    R_{p lam} - R_lam/(p nu) = (nu-1)/(nu (p lam + 1)) makes the drift
    equal to p**2 (1-nu) lam**(1+alpha) / (p lam + 1)).
    """
    if params.s_h >= 2.0:
        raise DomainError("expansion requires s_h < 2 (p*nu < 1)")
    if not (0.0 < lam < 1.0):
        raise DomainError("expansion point must satisfy 0 < lam < 1")
    nu, p = params.nu, params.p
    c0 = p * (nu - 1.0) / (p * nu - 1.0)
    alpha = params.alpha
    r_diag = resolvent(params, lam, 0, tol=tol).real
    u_est = lam**alpha * (r_diag - c0)
    bound = p**2 * (nu - 1.0) * lam ** (1.0 + alpha)
    return c0, u_est, bound


# ---------------------------------------------------------------------------
# theta and spectral zeta


def theta(params: LatticeParams, t: float, tol: float = 1e-14) -> float:
    """theta(t) = integral of exp(-lam t) against the density of states.

    Coincides with the diagonal heat kernel p(t, x, x).
    """
    return heat_kernel(params, t, 0, tol=tol)


def zeta_spectral(params: LatticeParams, z: complex) -> complex:
    """zeta(z) = (1-1/nu) p**z nu/(p**z nu - 1), by analytic continuation.

    Rejected within 1e-13 of a pole (p**z nu = 1).
    """
    nu, p = params.nu, params.p
    w = nu * cmath.exp(complex(z) * math.log(p))
    if abs(w - 1.0) < 1e-13:
        raise SpectrumProximityError(f"z = {z} is (numerically) a zeta pole")
    return (1.0 - 1.0 / nu) * w / (w - 1.0)


def zeta_poles(params: LatticeParams, count: int) -> list[complex]:
    """First ``count`` poles of the zeta function: solutions of p**z nu = 1.

    z_k = s_h/2 + 2*pi*i*k/ln(1/p), k = 0, 1, ...  (spacing 2*pi, as
    forced by the defining equation).
    """
    if count < 0:
        raise DomainError("count must be nonnegative")
    step = 2.0 * math.pi / math.log(1.0 / params.p)
    return [complex(params.s_h / 2.0, step * k) for k in range(count)]


# ---------------------------------------------------------------------------
# heat-kernel tail integrals


def _upper_gamma(a: float, x: float) -> float:
    """Upper incomplete gamma Gamma(a, x) for any real a and x > 0."""
    return float(mpmath.gammainc(a, x, mpmath.inf))


def _upper_gamma_bound(a: float, x: float) -> float:
    """Cheap upper bound for Gamma(a, x) on 0 < x <= 1, a <= 1."""
    if a > 0:
        return float(mpmath.gamma(a))
    if a == 0:
        return math.log(1.0 / x) + 1.0
    return x**a / (-a) + 1.0


def green_tail_divergent(params: LatticeParams, gamma: float) -> bool:
    """True when int_T^inf t**(-gamma) p(t,x,x) dt diverges for T > 0."""
    if gamma == 0.0:
        return params.p * params.nu <= 1.0
    return gamma + params.s_h / 2.0 <= 1.0


@lru_cache(maxsize=65536)
def green_tail_integral(params: LatticeParams, T: float, gamma: float = 0.0,
                        tol: float = 1e-12) -> float:
    """int_T^inf t**(-gamma) p(t, x, x) dt, termwise with certified tail.

    gamma = 0 requires the transient regime p*nu > 1 and evaluates

        (1-1/nu) sum_s exp(-p**s T) / (p nu)**s

    (equal to the Green function R_0(x,x) at T=0).  gamma > 0 requires
    gamma + s_h/2 > 1 and uses upper incomplete gamma functions per
    term; T = 0 additionally needs gamma < 1.  Divergent combinations
    raise :class:`DivergentIntegralError`.
    """
    if T < 0:
        raise DomainError("lower limit must be nonnegative")
    if gamma < 0:
        raise DomainError("gamma must be nonnegative")
    nu, p = params.nu, params.p
    coeff = 1.0 - 1.0 / nu
    if green_tail_divergent(params, gamma):
        raise DivergentIntegralError(
            f"divergent integral: gamma={gamma}, s_h={params.s_h:.6g} "
            f"(p*nu={p * nu:.6g})")
    if gamma == 0.0:
        pnu = p * nu
        value, s = 0.0, 0
        while True:
            value += coeff * math.exp(-(p**s) * T) * pnu ** (-s)
            if coeff * pnu ** (-(s + 1)) / (1.0 - 1.0 / pnu) <= tol:
                return value
            s += 1
            if s > _MAX_TERMS:
                raise CertificationError("green tail series did not certify")
    # gamma > 0
    if T == 0.0 and gamma >= 1.0:
        raise DivergentIntegralError(
            "t**(-gamma) p(t,x,x) is not integrable at t=0 for gamma >= 1")
    a = 1.0 - gamma
    if T == 0.0:
        # every term is Gamma(1-gamma) p**(s(gamma-1)) nu**(-s): pure geometric
        q = p ** (gamma - 1.0) / nu
        return coeff * float(mpmath.gamma(a)) / (1.0 - q)
    value, s = 0.0, 0
    q = p ** (gamma - 1.0) / nu
    while True:
        x = p**s * T
        value += coeff * nu ** (-s) * p ** (s * (gamma - 1.0)) * _upper_gamma(a, x)
        x_next = p ** (s + 1) * T
        if x_next <= 1.0:
            # geometric tail via Gamma(a, x) <= x**a/(-a) + 1 (a<0),
            # log(1/x)+1 (a=0) or Gamma(a) (a>0), all on x <= 1
            if a > 0:
                tail = coeff * float(mpmath.gamma(a)) * q ** (s + 1) / (1.0 - q)
            elif a == 0:
                # terms nu**(-s')(s' ln(1/p) + ln(1/T) + 1); closed-form tail
                x_ = 1.0 / nu
                s1 = s + 1
                geo = x_**s1 / (1.0 - x_)
                lin = x_**s1 * (s1 - (s1 - 1) * x_) / (1.0 - x_) ** 2
                tail = coeff * (math.log(1.0 / p) * lin
                                + (abs(math.log(T)) + 1.0) * geo)
            else:
                tail = coeff * (T**a * nu ** (-(s + 1)) / ((-a) * (1.0 - 1.0 / nu))
                                + q ** (s + 1) / (1.0 - q))
            if tail <= tol:
                return value
        s += 1
        if s > _MAX_TERMS:
            raise CertificationError("green tail series did not certify")


def green_tail_partial_sum(params: LatticeParams, T: float, gamma: float,
                           n_terms: int) -> float:
    """Partial sum of the tail-integral series, no convergence required.

    Used to exhibit divergence in the recurrent regime: for
    p*nu <= 1, gamma = 0 the partial sums grow without bound.
    """
    nu, p = params.nu, params.p
    coeff = 1.0 - 1.0 / nu
    total = 0.0
    for s in range(n_terms):
        if gamma == 0.0:
            total += coeff * math.exp(-(p**s) * T) * (p * nu) ** (-s)
        else:
            total += (coeff * nu ** (-s) * p ** (s * (gamma - 1.0))
                      * _upper_gamma(1.0 - gamma, p**s * T))
    return total
