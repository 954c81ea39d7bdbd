"""Bound-state counting functionals and the comparison harness.

Each functional is the explicit sum/integral from one of the counting
estimates, evaluated *without* its unspecified constant; the harness
compares it to the exact count N0 (or power sum S_gamma) and reports
the fitted constant actual/functional.  Theorems only prove such a
constant exists, so finiteness and stability of the fitted constants
across potential sweeps is the testable content.

Available functionals (``theorem`` tags in parentheses):

* transient CLR (``clr``):      #{V > a} + sum_{V<=a} V(x) I_0(sigma/V(x))
* transient LT  (``lt``):       sum V**(1+gamma)(x) I_0(sigma/V(x))
* weighted LT   (``lt-weighted``): 2 gamma Gamma(gamma) sum V(x) I_gamma(sigma/V(x))
* general CLR   (``clr-general``): 1 + #{V > a} + sum_{V<=a} V(x) J_0(sigma/V(x))
* general LT    (``lt-general``):  Lam**gamma + sum V**(1+gamma)(x) J_0(sigma/V(x))
* general weighted LT (``lt-general-weighted``):
                               Lam**gamma + 2 gamma Gamma(gamma) sum V(x) J_gamma(sigma/V(x))
* Bargmann classic (``bargmann``, s_h < 2):
      1 + #{V >= 1} + sum_{V<1} V(x) rho(x0,x)**(2-s_h)
* Bargmann uniform (``bargmann-uniform``, any s_h):
      1 + #{V >= 1} + sum_{V<1} V(x) ([1+rho]**(2-s_h) - 1)/((1/sqrt(p))**(2-s_h) - 1)
      (the s_h = 2 limit replaces the ratio by ln(1+rho)/ln(1/sqrt(p)))
* Bargmann refined (``bargmann-refined``, s_h < 2):
      1 + #{V >= 1} + sum_{V<1} V**(2-s_h/2)(x) [1+rho**2]**(2-s_h)

where I_g(T) = int_T^inf t**(-g) p(t,x,x) dt (heat kernel of the free
walk; transient regime needed for g=0) and J_g(T) is the same integral
for the walk annihilated at x0 (finite for every s_h > 0; the sigma=0,
g=0 value is the closed form a(r)).  Lam is the largest eigenvalue of
L + V.  Divergent weights flag the report instead of producing a
number.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field as dataclass_field

from scipy.special import gamma as gamma_fn

from .annihilated import p1_tail_integral, p1_weighted_tail_integral
from .closedform import green_tail_integral
from .errors import DivergentIntegralError, DomainError
from .hierops import VolumeGrid
from .lattice import LatticeParams, Site, hier_distance, rho_of_distance
from .schrodinger import Potential, count_and_sums

THEOREM_TAGS = ("clr", "lt", "lt-weighted", "clr-general", "lt-general",
                "lt-general-weighted", "bargmann", "bargmann-uniform",
                "bargmann-refined")


@dataclass
class BoundReport:
    """One functional evaluated against one potential.

    ``functional`` is the full right-hand side with the unspecified
    constant set to one (``None`` when divergent); ``actual`` is the
    exact N0 or S_gamma; ``fitted_constant = actual / functional`` when
    the functional is finite and positive.  ``flags`` carries
    divergence and applicability notes rather than silent zeros.
    """

    theorem: str
    params: LatticeParams
    a: float | None = None
    sigma: float | None = None
    gamma: float | None = None
    functional: float | None = None
    components: dict = dataclass_field(default_factory=dict)
    actual: float | None = None
    fitted_constant: float | None = None
    flags: list = dataclass_field(default_factory=list)

    def finalize(self, actual: float) -> "BoundReport":
        self.actual = actual
        if self.functional is not None and self.functional > 0:
            self.fitted_constant = actual / self.functional
        return self


def _split_by_level(potential: Potential, a: float):
    above = {s: v for s, v in potential.support.items() if v > a}
    below = {s: v for s, v in potential.support.items() if 0.0 < v <= a}
    return above, below


def clr_functional(grid: VolumeGrid, potential: Potential, a: float = 1.0,
                   sigma: float = 0.0) -> BoundReport:
    """Transient-case counting functional (cardinality + weighted sum).

    Requires p*nu > 1; in the recurrent regime every tail integral
    diverges and the report is flagged instead.
    """
    params = grid.params
    report = BoundReport("clr", params, a=a, sigma=sigma)
    above, below = _split_by_level(potential, a)
    report.components["cardinality"] = float(len(above))
    try:
        weighted = sum(v * green_tail_integral(params, sigma / v, 0.0)
                       for s, v in below.items())
    except DivergentIntegralError as exc:
        report.flags.append(f"divergent: {exc}")
        return report
    report.components["weighted_sum"] = weighted
    report.functional = len(above) + weighted
    return report


def lt_functional(grid: VolumeGrid, potential: Potential, gamma: float,
                  sigma: float = 0.0, weighted: bool = False) -> BoundReport:
    """Transient (plain) or time-weighted power-sum functional.

    plain:    sum V**(1+gamma) I_0(sigma/V)      [needs p*nu > 1]
    weighted: 2 gamma Gamma(gamma) sum V I_gamma(sigma/V)
              [needs gamma + s_h/2 > 1; sigma = 0 also needs gamma < 1]
    """
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    params = grid.params
    tag = "lt-weighted" if weighted else "lt"
    report = BoundReport(tag, params, sigma=sigma, gamma=gamma)
    try:
        if weighted:
            total = sum(v * green_tail_integral(params, sigma / v, gamma)
                        for s, v in potential.support.items() if v > 0)
            total *= 2.0 * gamma * gamma_fn(gamma)
        else:
            total = sum(v ** (1.0 + gamma)
                        * green_tail_integral(params, sigma / v, 0.0)
                        for s, v in potential.support.items() if v > 0)
    except DivergentIntegralError as exc:
        report.flags.append(f"divergent: {exc}")
        return report
    report.components["weighted_sum"] = total
    report.functional = total
    return report


def _p1_weight(params: LatticeParams, T: float, gamma: float, r: int) -> float:
    if gamma == 0.0:
        return p1_tail_integral(params, T, r)
    return p1_weighted_tail_integral(params, T, gamma, r)


def clr_general_functional(grid: VolumeGrid, potential: Potential,
                           x0: Site | None = None, a: float = 1.0,
                           sigma: float = 0.0) -> BoundReport:
    """Counting functional with annihilation at x0; valid for any s_h > 0.

    1 + #{V > a} + sum_{V<=a} V(x) int_{sigma/V}^inf p1(t,x,x) dt.
    sigma = 0 uses the exact closed-form weights.  The x0 term drops
    (the annihilated kernel vanishes there).
    """
    params = grid.params
    x0 = potential.origin if x0 is None else x0
    report = BoundReport("clr-general", params, a=a, sigma=sigma)
    above, below = _split_by_level(potential, a)
    report.components["cardinality"] = float(len(above))
    weighted = 0.0
    for s, v in below.items():
        r = hier_distance(x0, s, params.nu)
        if r == 0:
            continue
        weighted += v * _p1_weight(params, sigma / v, 0.0, r)
    report.components["weighted_sum"] = weighted
    report.functional = 1.0 + len(above) + weighted
    return report


def lt_general_functional(grid: VolumeGrid, potential: Potential,
                          gamma: float, x0: Site | None = None,
                          sigma: float = 0.0, weighted: bool = False,
                          largest_eigenvalue: float | None = None) -> BoundReport:
    """Power-sum functional with annihilation at x0 (any s_h > 0).

    plain:    Lam**gamma + sum V**(1+gamma) J_0(sigma/V)
    weighted: Lam**gamma + 2 gamma Gamma(gamma) sum V J_gamma(sigma/V)
              [sigma = 0 needs gamma < 1]

    ``largest_eigenvalue`` (Lam) is computed from the exact positive
    spectrum when not supplied.
    """
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    params = grid.params
    x0 = potential.origin if x0 is None else x0
    tag = "lt-general-weighted" if weighted else "lt-general"
    report = BoundReport(tag, params, sigma=sigma, gamma=gamma)
    if largest_eigenvalue is None:
        largest_eigenvalue = count_and_sums(grid, potential).largest
    lam_term = largest_eigenvalue**gamma if largest_eigenvalue > 0 else 0.0
    report.components["lambda_term"] = lam_term
    total = 0.0
    try:
        for s, v in potential.support.items():
            if v <= 0:
                continue
            r = hier_distance(x0, s, params.nu)
            if r == 0:
                continue
            if weighted:
                total += v * _p1_weight(params, sigma / v, gamma, r)
            else:
                total += v ** (1.0 + gamma) * _p1_weight(params, sigma / v, 0.0, r)
    except (DivergentIntegralError, DomainError) as exc:
        report.flags.append(f"divergent: {exc}")
        return report
    if weighted:
        total *= 2.0 * gamma * gamma_fn(gamma)
    report.components["weighted_sum"] = total
    report.functional = lam_term + total
    return report


def bargmann_functionals(grid: VolumeGrid, potential: Potential,
                         x0: Site | None = None) -> list[BoundReport]:
    """Distance-weighted counting functionals relative to the origin x0.

    Returns the applicable subset of {classic, uniform, refined}: the
    classic and refined forms need s_h < 2; the uniform form covers any
    s_h, switching to its logarithmic weight exactly at s_h = 2.  In
    the classic sum the x = x0 term carries weight rho**(2-s_h) = 0.
    """
    params = grid.params
    x0 = potential.origin if x0 is None else x0
    s_h = params.s_h
    above = {s: v for s, v in potential.support.items() if v >= 1.0}
    below = {s: v for s, v in potential.support.items() if 0.0 < v < 1.0}
    head = 1.0 + len(above)
    sqrtp_inv = 1.0 / math.sqrt(params.p)

    def rho_of(site):
        return rho_of_distance(hier_distance(x0, site, params.nu), params)

    reports = []
    if s_h < 2.0:
        classic = sum(v * rho_of(s) ** (2.0 - s_h) for s, v in below.items())
        rep = BoundReport("bargmann", params)
        rep.components = {"head": head, "weighted_sum": classic}
        rep.functional = head + classic
        reports.append(rep)

        refined = sum(v ** (2.0 - s_h / 2.0)
                      * (1.0 + rho_of(s) ** 2) ** (2.0 - s_h)
                      for s, v in below.items())
        rep = BoundReport("bargmann-refined", params)
        rep.components = {"head": head, "weighted_sum": refined}
        rep.functional = head + refined
        reports.append(rep)

    if s_h == 2.0:
        uni = sum(v * math.log(1.0 + rho_of(s)) / math.log(sqrtp_inv)
                  for s, v in below.items())
    else:
        denom = sqrtp_inv ** (2.0 - s_h) - 1.0
        uni = sum(v * ((1.0 + rho_of(s)) ** (2.0 - s_h) - 1.0) / denom
                  for s, v in below.items())
    rep = BoundReport("bargmann-uniform", params)
    rep.components = {"head": head, "weighted_sum": uni}
    rep.functional = head + uni
    reports.append(rep)
    return reports


def evaluate_functionals(grid: VolumeGrid, potential: Potential,
                         theorems=THEOREM_TAGS, a: float = 1.0,
                         sigma: float = 0.0, gamma: float = 1.0,
                         counting_method: str = "auto") -> list[BoundReport]:
    """All requested functionals vs the exact counts for one potential.

    Counting functionals compare to N0, power-sum functionals to
    S_gamma.
    """
    gammas = (gamma,) if gamma else ()
    exact = count_and_sums(grid, potential, gammas=gammas,
                           method=counting_method)
    n0 = float(exact.count)
    s_gamma = exact.sums.get(float(gamma), 0.0) if gamma else 0.0
    reports = []
    for tag in theorems:
        if tag == "clr":
            reports.append(clr_functional(grid, potential, a, sigma).finalize(n0))
        elif tag == "lt":
            reports.append(lt_functional(grid, potential, gamma, sigma,
                                         weighted=False).finalize(s_gamma))
        elif tag == "lt-weighted":
            reports.append(lt_functional(grid, potential, gamma, sigma,
                                         weighted=True).finalize(s_gamma))
        elif tag == "clr-general":
            reports.append(clr_general_functional(grid, potential, a=a,
                                                  sigma=sigma).finalize(n0))
        elif tag == "lt-general":
            reports.append(lt_general_functional(
                grid, potential, gamma, sigma=sigma, weighted=False,
                largest_eigenvalue=exact.largest).finalize(s_gamma))
        elif tag == "lt-general-weighted":
            reports.append(lt_general_functional(
                grid, potential, gamma, sigma=sigma, weighted=True,
                largest_eigenvalue=exact.largest).finalize(s_gamma))
        elif tag in ("bargmann", "bargmann-uniform", "bargmann-refined"):
            for rep in bargmann_functionals(grid, potential):
                if rep.theorem == tag:
                    reports.append(rep.finalize(n0))
        else:
            raise DomainError(f"unknown theorem tag {tag!r}")
    return reports


def bound_report(grid: VolumeGrid, potentials, theorems=THEOREM_TAGS,
                 a: float = 1.0, sigma: float = 0.0, gamma: float = 1.0,
                 thetas=None, betas=None,
                 counting_method: str = "auto") -> list[dict]:
    """Sweep a potential family; one row per (potential, theorem).

    ``thetas``/``betas`` are optional per-potential labels carried into
    the rows.  Rows are emitted in deterministic order: lexicographic in
    (theta, beta, theorem).
    """
    potentials = list(potentials)
    thetas = list(thetas) if thetas is not None else [float(i) for i in
                                                      range(len(potentials))]
    betas = list(betas) if betas is not None else [0.0] * len(potentials)
    rows = []
    for pot, theta, beta in zip(potentials, thetas, betas):
        for rep in evaluate_functionals(grid, pot, theorems=theorems, a=a,
                                        sigma=sigma, gamma=gamma,
                                        counting_method=counting_method):
            rows.append({
                "theorem": rep.theorem,
                "a": rep.a if rep.a is not None else "",
                "sigma": rep.sigma if rep.sigma is not None else "",
                "gamma": rep.gamma if rep.gamma is not None else "",
                "theta": theta,
                "beta": beta,
                "functional": rep.functional,
                "actual": rep.actual,
                "fitted_constant": rep.fitted_constant,
                "flags": ";".join(rep.flags),
            })
    rows.sort(key=lambda row: (row["theta"], row["beta"], row["theorem"]))
    return rows


REPORT_COLUMNS = ("theorem", "a", "sigma", "gamma", "theta", "beta",
                  "functional", "actual", "fitted_constant", "flags")


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def report_to_csv(rows) -> str:
    """RFC-4180 CSV ('.' decimals, 17 significant digits, CRLF)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(REPORT_COLUMNS)
    for row in rows:
        writer.writerow([_format_cell(row[c]) for c in REPORT_COLUMNS])
    return buf.getvalue()


def report_to_json(rows) -> str:
    """JSON mirror of the CSV report (sorted keys, round-trip floats)."""
    return json.dumps({"rows": [dict(sorted(r.items())) for r in rows]},
                      sort_keys=True, indent=2)


def fitted_constant_range(rows, theorem: str):
    """(min, max) fitted constant over the sweep for one theorem tag."""
    values = [r["fitted_constant"] for r in rows
              if r["theorem"] == theorem and r["fitted_constant"] is not None
              and r["actual"] and r["actual"] > 0]
    if not values:
        return None, None
    return min(values), max(values)
