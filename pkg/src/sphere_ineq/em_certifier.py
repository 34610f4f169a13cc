"""Machine re-run of the case analysis that proves I_p(m) < 1.

The argument has four pieces:

* an Euler-Maclaurin upper bound for I_p(m) that is below 1 once
  m > m0(p);
* for m <= m0(p) and p <= 2, the bound G(m, p) (first term kept, the rest
  replaced by R(p)) together with G - 1 < A(z, p) phi(z, p), z = m^2/2,
  where A > 0, so the sign is that of the quadratic phi;
* for 2 < p <= p*, where m1(p) <= m0(p), the same quadratic evaluated at
  z* = m0(p*)^2 / 2, using that phi increases in z;
* for p > p*, monotonicity of every term in p when m < m1(p).

:func:`certify` walks a (p, m) grid through these branches and records
which branch settled each cell.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from .errors import BracketError, DomainError
from .spectral_series import eval_I, eval_R

__all__ = [
    "EmClosedForms",
    "Branch",
    "Cell",
    "CertificateReport",
    "closed_forms",
    "f_m",
    "g_majorant",
    "g_integral_quadrature",
    "finite_difference_check",
    "em_upper_bound",
    "m0",
    "m1",
    "m1_inverse",
    "p_star_gap",
    "find_p_star",
    "phi",
    "phi_coefficients",
    "A",
    "g_bound",
    "r_em_bound",
    "certify",
]


@dataclass(frozen=True)
class EmClosedForms:
    f0: float
    f1: float
    f3: float
    g_integral: float


def _check_pm(p: float, m: float) -> None:
    if not (p > 1.0):
        raise DomainError(f"need p > 1, got {p}")
    if not (m > 0.0):
        raise DomainError(f"need m > 0, got {m}")


def f_m(x, p: float, m: float):
    """Continuous summand m^{2(p-1)} (p-1) (2x+1) / (m^2 + x^2 + x)^p."""
    x = np.asarray(x, dtype=float)
    s = m * m + x * x + x
    return (p - 1.0) * (2.0 * x + 1.0) * np.exp((p - 1.0) * np.log(m * m) - p * np.log(s))


def g_majorant(x, p: float, m: float):
    """Pointwise majorant of |f_m''''| (middle term of f'''' sign-flipped)."""
    x = np.asarray(x, dtype=float)
    u = x + 0.5
    s = m * m + x * x + x
    pref = 32.0 * p * (p * p - 1.0) * m ** (2.0 * p - 2.0)
    return pref * (
        u**5 * (p + 2) * (p + 3) / s ** (p + 4) + 5.0 * u**3 * (p + 2) / s ** (p + 3) + 15.0 * u / (4.0 * s ** (p + 2))
    )


def closed_forms(p: float, m: float) -> EmClosedForms:
    """f_m(0), f_m'(0), f_m'''(0) and the integral of the majorant over [0, inf)."""
    _check_pm(p, m)
    m2 = m * m
    m4 = m2 * m2
    m8 = m4 * m4
    f0 = (p - 1.0) / m2
    f1 = (p - 1.0) * (2.0 * m2 - p) / m4
    f3 = -(p - 1.0) * p * (12.0 * m4 - 12.0 * m2 * p - 12.0 * m2 + p * p + 3.0 * p + 2.0) / m8
    gi = p * (p - 1.0) * (172.0 * m4 + 28.0 * (p + 1.0) * m2 + p * p + 3.0 * p + 2.0) / m8
    return EmClosedForms(f0, f1, f3, gi)


def g_integral_quadrature(p: float, m: float) -> float:
    """Adaptive quadrature of the majorant over [0, inf), for cross-checks."""
    _check_pm(p, m)
    # split at the bump scale so QUADPACK sees the peak
    cut = max(1.0, 4.0 * m)
    kw = dict(epsabs=0.0, epsrel=1e-12, limit=400)
    head, _ = integrate.quad(lambda x: float(g_majorant(x, p, m)), 0.0, cut, **kw)
    tail, _ = integrate.quad(lambda x: float(g_majorant(x, p, m)), cut, np.inf, **kw)
    return head + tail


def finite_difference_check(p: float, m: float, h: float = 1e-3) -> float:
    """Max relative error of closed-form f_m'(0), f_m'''(0) vs central differences.

    f_m is smooth through x = 0 (its denominator m^2 + x^2 + x stays
    positive for small |x|), so symmetric stencils at 0 are available. Each
    stencil is combined with its 2h companion by one Richardson step. The
    error is measured relative to max(|closed form|, f_m(0)) because f_m'(0)
    vanishes when 2m^2 = p.
    """
    _check_pm(p, m)
    if not (0.0 < h <= 0.1):
        raise DomainError(f"need 0 < h <= 0.1, got {h}")

    def f(x):
        return float(f_m(x, p, m))

    def d1(k):
        return (f(k) - f(-k)) / (2.0 * k)

    def d3(k):
        return (f(2 * k) - 2.0 * f(k) + 2.0 * f(-k) - f(-2 * k)) / (2.0 * k**3)

    fd1 = (4.0 * d1(h) - d1(2 * h)) / 3.0
    fd3 = (4.0 * d3(h) - d3(2 * h)) / 3.0
    cf = closed_forms(p, m)
    e1 = abs(fd1 - cf.f1) / max(abs(cf.f1), cf.f0)
    e3 = abs(fd3 - cf.f3) / max(abs(cf.f3), cf.f0)
    return max(e1, e3)


def em_upper_bound(p: float, m: float) -> float:
    """Euler-Maclaurin majorant 1 - (p-1) m^-6 (24m^4 - 11pm^2 - 2p(p+1)) / 36."""
    _check_pm(p, m)
    m2 = m * m
    return 1.0 - (p - 1.0) * (24.0 * m2 * m2 - 11.0 * p * m2 - 2.0 * p * (p + 1.0)) / (36.0 * m2**3)


def m0(p: float) -> float:
    """Positive root of 24m^4 - 11pm^2 - 2p(p+1); the bound is < 1 beyond it."""
    if not (p >= 1.0):
        raise DomainError(f"m0 needs p >= 1, got {p}")
    return math.sqrt(3.0 * math.sqrt(313.0 * p * p + 192.0 * p) + 33.0 * p) / 12.0


def m1(p: float) -> float:
    """sqrt(2) / sqrt(e^{1/(p-1)} - 1); every term of I decreases in p below it."""
    if not (p > 1.0):
        raise DomainError(f"m1 needs p > 1, got {p}")
    t = 1.0 / (p - 1.0)
    if t > 700.0:
        return 0.0
    return math.sqrt(2.0) / math.sqrt(math.expm1(t))


def m1_inverse(m: float) -> float:
    """The exponent p with m1(p) = m."""
    if not (m > 0.0):
        raise DomainError(f"m1_inverse needs m > 0, got {m}")
    return 1.0 + 1.0 / math.log1p(2.0 / (m * m))


def p_star_gap(p: float) -> float:
    return m1(p) - m0(p)


def find_p_star(tol: float = 1e-8, lo: float = 2.0, hi: float = 2.5, scan_points: int = 100) -> float:
    """Root of m1(p) - m0(p) on [lo, hi] by bisection.

    A ``scan_points`` pre-scan must show exactly one sign change, otherwise
    :class:`BracketError` is raised.
    """
    if not (tol > 0.0):
        raise DomainError(f"tol must be positive, got {tol}")
    grid = np.linspace(lo, hi, scan_points)
    signs = np.sign([p_star_gap(x) for x in grid])
    changes = int(np.count_nonzero(signs[1:] != signs[:-1]))
    if changes != 1:
        raise BracketError(f"expected one sign change of m1 - m0 on [{lo}, {hi}], found {changes}")
    f_lo = p_star_gap(lo)
    if f_lo * p_star_gap(hi) > 0:
        raise BracketError("endpoint signs agree")
    a, b = lo, hi
    while b - a > tol:
        c = 0.5 * (a + b)
        fc = p_star_gap(c)
        if fc == 0.0:
            return c
        if (fc < 0) == (f_lo < 0):
            a, f_lo = c, fc
        else:
            b = c
    return 0.5 * (a + b)


def _check_z(z: float, p: float) -> None:
    if not (0.0 < z <= 1.0):
        raise DomainError(f"z must lie in (0, 1], got {z}")
    if not (p > 1.0):
        raise DomainError(f"need p > 1, got {p}")


def phi(z: float, p: float) -> float:
    _check_z(z, p)
    lz = math.log(z)
    return 9.0 * z * p * p + (48.0 * z * lz - 40.0 * z + 9.0) * p + 48.0 * lz + 32.0


def phi_coefficients(z: float) -> tuple[float, float, float]:
    """phi(z, .) as a quadratic a p^2 + b p + c; returns (a, b, c)."""
    _check_z(z, 2.0)
    lz = math.log(z)
    return 9.0 * z, 48.0 * z * lz - 40.0 * z + 9.0, 48.0 * lz + 32.0


def A(z: float, p: float) -> float:
    _check_z(z, p)
    return (p - 1.0) / (48.0 * (p * z + 1.0) * (1.0 - (p - 1.0) * math.log(z)))


def g_bound(p: float, m: float, tol: float = 1e-10) -> float:
    """G(m, p) = m^{2(p-1)} (p-1) (3/(m^2+2)^p + R(p)), R from its enclosure midpoint."""
    if not (p > 1.0) or not (m >= 0.0):
        raise DomainError(f"g_bound needs p > 1 and m >= 0, got p={p}, m={m}")
    if m == 0.0:
        return 0.0
    R = eval_R(p, tol).mid
    m2 = m * m
    return (p - 1.0) * math.exp((p - 1.0) * math.log(m2)) * (3.0 / (m2 + 2.0) ** p + R)


def r_em_bound(p: float) -> float:
    """Euler-Maclaurin majorant (9p^2 - 49p + 88) / (24 * 2^p (p-1)) of R(p)."""
    if not (p > 1.0):
        raise DomainError(f"r_em_bound needs p > 1, got {p}")
    return (9.0 * p * p - 49.0 * p + 88.0) / (24.0 * 2.0**p * (p - 1.0))


# -- certificate ----------------------------------------------------------------


class Branch(str, enum.Enum):
    EM_BOUND = "EMBound"
    PHI_NEGATIVE = "PhiNegative"
    MONOTONE_IN_P = "MonotoneInP"
    DIRECT_SERIES = "DirectSeries"


@dataclass(frozen=True)
class Cell:
    """One (p, m) grid cell.

    ``bound_value`` is always an upper bound for I_p(m) produced by the
    branch; the verdict is ``bound_value < 1``. For MonotoneInP cells
    ``reduced_p`` names the exponent the cell was reduced to.
    """

    p: float
    m: float
    branch: Branch
    bound_value: float
    verdict: bool
    reduced_p: float | None = None
    note: str = ""


@dataclass
class CertificateReport:
    cells: list[Cell] = field(default_factory=list)
    p_star: float = float("nan")
    m_star: float = float("nan")

    @property
    def summary(self) -> bool:
        return all(c.verdict for c in self.cells)

    @property
    def failures(self) -> list[Cell]:
        return [c for c in self.cells if not c.verdict]

    def rows(self) -> list[dict]:
        out = []
        for c in self.cells:
            d = asdict(c)
            d["branch"] = c.branch.value
            out.append(d)
        return out


def _phi_bound(p: float, m: float, z_eval: float) -> float:
    """1 + A(z, p) phi(z_eval, p) with z = m^2/2 <= z_eval; bounds G(m, p).

    At m = 0 this is the z -> 0 limit of 1 + A(z, p) phi(z, p), which is 0.
    """
    z = 0.5 * m * m
    if z == 0.0:
        return 0.0
    return 1.0 + A(z, p) * phi(z_eval, p)


def _analytic_cell(p: float, m: float, p_star: float, z_star: float) -> Cell | None:
    """Settle (p, m) by the analytic branches; None if no branch applies."""
    mz = m0(p)
    if m > mz:
        b = em_upper_bound(p, m)
        return Cell(p, m, Branch.EM_BOUND, b, b < 1.0)
    if p <= 2.0:
        if m > math.sqrt(2.0):
            return None
        b = _phi_bound(p, m, 0.5 * m * m)
        return Cell(p, m, Branch.PHI_NEGATIVE, b, b < 1.0)
    if p <= p_star:
        if m > math.sqrt(2.0):
            return None
        # z = m^2/2 <= m0(p)^2/2 <= z*, and phi increases in z
        b = _phi_bound(p, m, z_star)
        return Cell(p, m, Branch.PHI_NEGATIVE, b, b < 1.0, note="phi at z*")
    if m < m1(p):
        # every term decreases in p on [p', p] when m < m1 on that interval;
        # m1 increases in p, so the reduction stops where m1(p') = m
        target = 2.0 if m < m1(2.0) else m1_inverse(m)
        inner = _analytic_cell(target, m, p_star, z_star)
        if inner is None or inner.branch is Branch.MONOTONE_IN_P:
            return None
        return Cell(
            p, m, Branch.MONOTONE_IN_P, inner.bound_value, inner.verdict,
            reduced_p=target, note=f"via {inner.branch.value} at p={target:.12g}",
        )
    return None


def certify(p_grid, m_cap: float, tol: float = 1e-9, m_points: int = 41) -> CertificateReport:
    """Run the branch analysis on p_grid x (m_points uniform values in [0, m_cap]).

    Each p also gets the cell m = m0(p) when it falls inside [0, m_cap].
    Cells whose analytic branch fails or does not apply fall back to the
    certified series enclosure (verdict eval_I(p, m).hi < 1); cells that
    fail there too are kept with verdict False.
    """
    p_grid = [float(p) for p in p_grid]
    if any(not (p > 1.0) for p in p_grid):
        raise DomainError("all p must exceed 1")
    if not (m_cap > 0.0):
        raise DomainError(f"m_cap must be positive, got {m_cap}")
    p_star = find_p_star(1e-12)
    m_star = m0(p_star)
    z_star = 0.5 * m_star * m_star
    report = CertificateReport(p_star=p_star, m_star=m_star)
    for p in sorted(set(p_grid)):
        ms = set(np.linspace(0.0, m_cap, m_points).tolist())
        if m0(p) <= m_cap:
            ms.add(m0(p))
        for m in sorted(ms):
            report.cells.append(_certify_cell(p, m, p_star, z_star, tol))
    return report


def _certify_cell(p: float, m: float, p_star: float, z_star: float, tol: float) -> Cell:
    cell = _analytic_cell(p, m, p_star, z_star)
    if cell is not None and cell.verdict:
        return cell
    v = eval_I(p, m, tol)
    why = "analytic branch inconclusive" if cell is not None else "no analytic branch"
    return Cell(p, m, Branch.DIRECT_SERIES, v.hi, v.hi < 1.0, note=why)
