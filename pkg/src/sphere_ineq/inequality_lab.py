"""Empirical checks of the orthonormal-family and Gagliardo-Nirenberg bounds.

A family {phi_j} is orthonormal for m^2 (f, g) + (grad f, grad g). It is
built from L^2-orthonormal psi_j by phi_j = (m^2 - Delta)^{-1/2} psi_j,
which in the harmonic basis is a division by sqrt(m^2 + n(n+1)). The
vector flavor does the same with the divergence-free fields
w_n^k = grad_perp Y_n^k / sqrt(n(n+1)), for which ||rot w||^2 = n(n+1).

Ratios are returned with a quadrature error bar: the difference between the
value on the working rule and on a rule of twice its degree.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NegativePotentialError
from .sphere_basis import (
    FOUR_PI,
    MAX_RULE_DEGREE,
    QuadratureRule,
    SpectralCoeffs,
    build_rule,
    eigenvalues,
    lp_norm,
    n_harmonics,
    synthesize,
)

__all__ = [
    "Flavor",
    "Family",
    "DensityField",
    "GalerkinOperator",
    "RatioResult",
    "TraceCheck",
    "ConstantsTable",
    "b_p",
    "min_degree_for",
    "lq_rule_degree",
    "build_family",
    "density",
    "theorem1_ratio",
    "theorem1_ratios",
    "gn_constant",
    "gn_ratio",
    "galerkin_operator",
    "alt_trace_check",
    "variational_step_check",
    "random_field",
    "random_potential",
    "compare_constants",
]


class Flavor(str, enum.Enum):
    SCALAR = "scalar"
    VECTOR = "vector"


def b_p(p: float) -> float:
    """((p-1)/(4 pi))^{(p-1)/p}, with the limit 1 at p = 1."""
    if not (p >= 1.0):
        raise DomainError(f"b_p needs p >= 1, got {p}")
    if p == 1.0:
        return 1.0
    if math.isinf(p):
        return 1.0 / FOUR_PI
    return math.exp((p - 1.0) / p * math.log((p - 1.0) / FOUR_PI))


def min_degree_for(size: int) -> int:
    """Smallest L with (L+1)^2 - 1 >= size non-constant harmonics."""
    r = math.isqrt(size + 1)
    if r * r < size + 1:
        r += 1
    return max(1, r - 1)


def lq_rule_degree(max_degree: int, q: float) -> int:
    """Working rule degree for |f|^q with f of degree ``max_degree``.

    2 L ceil(q/2) covers |f|^q exactly for even integer q; the extra
    factor 2 oversamples the non-polynomial cases.
    """
    return min(MAX_RULE_DEGREE // 2, 2 * max_degree * math.ceil(q / 2.0) * 2)


def _refined(rule: QuadratureRule) -> QuadratureRule:
    return build_rule(min(MAX_RULE_DEGREE, 2 * rule.exact_degree))


@dataclass
class Family:
    """H^1(m)-orthonormal family stored as coefficient rows.

    For the vector flavor the coefficients multiply w_n^k (stream
    coefficients scaled by sqrt(n(n+1))).
    """

    m: float
    flavor: Flavor
    coeffs: np.ndarray  # (size, (L+1)^2), column 0 unused
    max_degree: int

    @property
    def size(self) -> int:
        return self.coeffs.shape[0]

    @property
    def members(self) -> list[SpectralCoeffs]:
        return [SpectralCoeffs.from_vector(row, drop_zeros=True) for row in self.coeffs]

    def gram(self) -> np.ndarray:
        w = self.m**2 + eigenvalues(self.max_degree)
        return (self.coeffs * w) @ self.coeffs.T

    def gram_residual(self) -> float:
        return float(np.abs(self.gram() - np.eye(self.size)).max())

    def l2_norms2(self) -> np.ndarray:
        return (self.coeffs**2).sum(axis=1)

    def to_text(self) -> str:
        out = [f"m={self.m!r} flavor={self.flavor.value} n={self.size}"]
        for j, c in enumerate(self.members, 1):
            out.append(f"# member {j}")
            out.append(c.to_text().rstrip("\n"))
        return "\n".join(out) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Family":
        lines = text.splitlines()
        head = dict(tok.split("=", 1) for tok in lines[0].split())
        blocks: list[list[str]] = []
        for line in lines[1:]:
            if line.startswith("# member"):
                blocks.append([])
            elif line.strip():
                blocks[-1].append(line)
        members = [SpectralCoeffs.from_text("\n".join(b)) for b in blocks]
        if len(members) != int(head["n"]):
            raise ValueError(f"header announces {head['n']} members, found {len(members)}")
        L = max(c.max_degree for c in members)
        coeffs = np.array([c.to_vector(L) for c in members])
        return cls(float(head["m"]), Flavor(head["flavor"]), coeffs, L)


@dataclass
class DensityField:
    values: np.ndarray
    rule: QuadratureRule
    n_members: int

    @property
    def integral(self) -> float:
        return self.rule.integrate(self.values)


@dataclass
class GalerkinOperator:
    """Finite-rank K = S M S with M_ab = int V e_a . e_b and S = (m^2 + Lambda)^{-1/2}."""

    matrix: np.ndarray
    scale: np.ndarray  # diagonal of S
    _spectrum: np.ndarray | None = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def spectrum(self) -> np.ndarray:
        """Eigenvalues in descending order, rounding negatives clamped to 0."""
        if self._spectrum is None:
            ev = np.linalg.eigvalsh(self.matrix)[::-1]
            self._spectrum = np.clip(ev, 0.0, None)
        return self._spectrum

    def trace_power(self, r: float) -> float:
        return math.fsum(self.spectrum**r)


@dataclass(frozen=True)
class RatioResult:
    value: float
    quad_error: float

    def holds(self, bound: float = 1.0) -> bool:
        return self.value <= bound + self.quad_error

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class TraceCheck:
    lhs: float
    rhs: float
    r: float

    def __iter__(self):
        return iter((self.lhs, self.rhs))

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1.0 + 1e-8)


def build_family(
    m: float,
    size: int,
    flavor: Flavor | str = Flavor.SCALAR,
    mixing_seed: int | None = None,
    max_degree: int | None = None,
) -> Family:
    """Orthonormal family from a seeded orthogonal mix of the first ``size`` harmonics.

    ``mixing_seed=None`` keeps the identity mix, so member j is the j-th
    non-constant harmonic scaled by 1/sqrt(m^2 + Lambda).
    """
    flavor = Flavor(flavor)
    if not (m > 0.0):
        raise DomainError(f"m must be positive, got {m}")
    if size < 1:
        raise DomainError(f"size must be >= 1, got {size}")
    L = min_degree_for(size) if max_degree is None else max_degree
    if size > n_harmonics(L) - 1:
        raise DomainError(f"size {size} exceeds the {n_harmonics(L) - 1} non-constant harmonics of degree <= {L}")
    if mixing_seed is None:
        Q = np.eye(size)
    else:
        rng = np.random.default_rng(mixing_seed)
        Q, R = np.linalg.qr(rng.standard_normal((size, size)))
        Q = Q * np.sign(np.diag(R))
    psi = np.zeros((size, n_harmonics(L)))
    psi[:, 1 : size + 1] = Q
    lam = eigenvalues(L)
    coeffs = psi / np.sqrt(m * m + lam)
    return Family(m, flavor, coeffs, L)


def _field_components(flavor: Flavor, L: int, rule: QuadratureRule) -> list[np.ndarray]:
    """Node values of the basis (scalar) or of w_n^k frame components (vector)."""
    if flavor is Flavor.SCALAR:
        return [rule.basis(L)]
    Gt, Gp = rule.gradient_basis(L)
    lam = eigenvalues(L)
    inv = np.zeros_like(lam)
    inv[1:] = 1.0 / np.sqrt(lam[1:])
    # w = grad_perp Y / sqrt(Lambda), grad_perp (g_t, g_p) = (g_p, -g_t)
    return [Gp * inv, -Gt * inv]


def _check_rule(rule: QuadratureRule, degree: int, what: str) -> None:
    if rule.exact_degree < degree:
        import warnings

        from .sphere_basis import DegreeMismatchWarning

        warnings.warn(f"{what}: rule degree {rule.exact_degree} < needed {degree}", DegreeMismatchWarning, stacklevel=3)


def density(fam: Family, rule: QuadratureRule | None = None) -> DensityField:
    """rho = sum_j |phi_j|^2 (or |u_j|^2) at the rule's nodes."""
    if rule is None:
        rule = build_rule(lq_rule_degree(fam.max_degree, 2.0))
    _check_rule(rule, 2 * fam.max_degree, "density")
    rho = np.zeros(rule.size)
    for comp in _field_components(fam.flavor, fam.max_degree, rule):
        vals = comp @ fam.coeffs.T  # (nodes, members)
        rho += np.einsum("ij,ij->i", vals, vals)
    return DensityField(rho, rule, fam.size)


def _theorem1_bound(fam: Family, p: float) -> float:
    return b_p(p) * fam.m ** (-2.0 / p) * fam.size ** (1.0 / p)


def theorem1_ratio(fam: Family, p: float, rule: QuadratureRule | None = None) -> RatioResult:
    """||rho||_{L^p} / (B_p m^{-2/p} n^{1/p}); at most 1 for any orthonormal family."""
    if not (p >= 1.0):
        raise DomainError(f"p must be >= 1, got {p}")
    bound = _theorem1_bound(fam, p)
    if p == 1.0:
        # ||rho||_1 = sum_j ||phi_j||^2 holds exactly in the orthonormal basis
        return RatioResult(math.fsum(fam.l2_norms2()) / bound, 0.0)
    if rule is None:
        rule = build_rule(lq_rule_degree(fam.max_degree, 2.0 * p))
    fine = _refined(rule)
    r0 = lp_norm(density(fam, rule).values, p, rule) / bound
    r1 = lp_norm(density(fam, fine).values, p, fine) / bound
    return RatioResult(r0, abs(r1 - r0))


def theorem1_ratios(fam: Family, ps, rule: QuadratureRule | None = None) -> dict[float, RatioResult]:
    """theorem1_ratio for several p, sharing the density evaluation."""
    ps = [float(p) for p in ps]
    if rule is None:
        rule = build_rule(lq_rule_degree(fam.max_degree, 2.0 * max(ps)))
    fine = _refined(rule)
    rho0 = density(fam, rule).values
    rho1 = density(fam, fine).values
    out = {}
    for p in ps:
        if p == 1.0:
            out[p] = theorem1_ratio(fam, 1.0)
            continue
        bound = _theorem1_bound(fam, p)
        r0 = lp_norm(rho0, p, rule) / bound
        r1 = lp_norm(rho1, p, fine) / bound
        out[p] = RatioResult(r0, abs(r1 - r0))
    return out


def gn_constant(q: float) -> float:
    """(1/(4 pi))^{(q-2)/(2q)} (q/2)^{1/2}."""
    return FOUR_PI ** (-(q - 2.0) / (2.0 * q)) * math.sqrt(q / 2.0)


def gn_ratio(c: SpectralCoeffs, q: float, rule: QuadratureRule | None = None) -> RatioResult:
    """||phi||_q over the Gagliardo-Nirenberg right side, with spectral L^2 norms."""
    if not (q >= 2.0):
        raise DomainError(f"q must be >= 2, got {q}")
    if not c.zero_mean:
        raise DomainError("gn_ratio needs a zero-mean field")
    l2 = math.sqrt(c.l2_norm2())
    if l2 == 0.0:
        raise DomainError("gn_ratio of the zero field is undefined")
    grad = math.sqrt(c.grad_norm2())
    rhs = gn_constant(q) * l2 ** (2.0 / q) * grad ** (1.0 - 2.0 / q)
    if rule is None:
        rule = build_rule(lq_rule_degree(c.max_degree, q))
    fine = _refined(rule)
    r0 = lp_norm(synthesize(c, rule), q, rule) / rhs
    r1 = lp_norm(synthesize(c, fine), q, fine) / rhs
    return RatioResult(r0, abs(r1 - r0))


# -- finite-rank trace chain -------------------------------------------------------


def _trace_rule(L: int, V: SpectralCoeffs, r: float) -> QuadratureRule:
    need = 2 * L + math.ceil(r) * V.max_degree
    return build_rule(min(MAX_RULE_DEGREE, 2 * need))


def _potential_values(V: SpectralCoeffs, rule: QuadratureRule) -> np.ndarray:
    vals = synthesize(V, rule)
    if vals.min() < 0.0:
        raise NegativePotentialError(f"V takes the value {vals.min():.3g} < 0 at a node")
    return vals


def galerkin_operator(
    m: float, V: SpectralCoeffs, max_degree: int, rule: QuadratureRule, flavor: Flavor | str = Flavor.SCALAR
) -> GalerkinOperator:
    """Matrix of Pi (m^2 - Delta)^{-1/2} V (m^2 - Delta)^{-1/2} Pi on the zero-mean modes."""
    flavor = Flavor(flavor)
    L = max_degree
    vals = _potential_values(V, rule)
    wv = rule.weights * vals
    M = 0.0
    for comp in _field_components(flavor, L, rule):
        E = comp[:, 1:]
        M = M + E.T @ (wv[:, None] * E)
    s = 1.0 / np.sqrt(m * m + eigenvalues(L)[1:])
    K = s[:, None] * M * s[None, :]
    K = 0.5 * (K + K.T)
    return GalerkinOperator(K, s)


def _r_from_p(p: float) -> float:
    if math.isinf(p):
        return 1.0
    if not (p > 1.0):
        raise DomainError(f"p must exceed 1, got {p}")
    return p / (p - 1.0)


def alt_trace_check(
    m: float,
    p: float,
    V: SpectralCoeffs,
    max_degree: int,
    rule: QuadratureRule | None = None,
    flavor: Flavor | str = Flavor.SCALAR,
) -> TraceCheck:
    """Tr K^r against Tr(V^r (m^2 - Delta)^{-r} Pi) at finite rank, r = p/(p-1).

    ``p = inf`` gives r = 1, where both sides agree by cyclicity.
    """
    flavor = Flavor(flavor)
    r = _r_from_p(p)
    dim = n_harmonics(max_degree) - 1
    if dim > 400:
        raise DomainError(f"Galerkin dimension {dim} exceeds 400")
    if rule is None:
        rule = _trace_rule(max_degree, V, r)
    K = galerkin_operator(m, V, max_degree, rule, flavor)
    lhs = K.trace_power(r)
    vals = _potential_values(V, rule)
    wvr = rule.weights * vals**r
    diag = 0.0
    for comp in _field_components(flavor, max_degree, rule):
        E = comp[:, 1:]
        diag = diag + (E * E).T @ wvr
    rhs = math.fsum(K.scale ** (2.0 * r) * diag)
    return TraceCheck(lhs, rhs, r)


def variational_step_check(
    fam: Family,
    V: SpectralCoeffs,
    rule: QuadratureRule | None = None,
    max_degree: int | None = None,
) -> tuple[float, float]:
    """(int rho V d sigma, sum of the n largest eigenvalues of K)."""
    L = fam.max_degree if max_degree is None else max_degree
    if fam.max_degree > L:
        raise DomainError(f"family degree {fam.max_degree} exceeds Galerkin degree {L}")
    if rule is None:
        rule = build_rule(min(MAX_RULE_DEGREE, 2 * L + V.max_degree))
    if fam.max_degree < L:
        pad = np.zeros((fam.size, n_harmonics(L)))
        pad[:, : fam.coeffs.shape[1]] = fam.coeffs
        fam = Family(fam.m, fam.flavor, pad, L)
    vals = _potential_values(V, rule)
    rho = density(fam, rule).values
    sum_quad = rule.integrate(rho * vals)
    K = galerkin_operator(fam.m, V, L, rule, fam.flavor)
    eig_sum = math.fsum(K.spectrum[: fam.size])
    return sum_quad, eig_sum


# -- random inputs ----------------------------------------------------------------


def random_field(max_degree: int, rng: np.random.Generator) -> SpectralCoeffs:
    """Zero-mean field with Gaussian coefficients up to a random degree <= max_degree."""
    L = int(rng.integers(1, max_degree + 1))
    vec = np.zeros(n_harmonics(max_degree))
    vec[1 : n_harmonics(L)] = rng.standard_normal(n_harmonics(L) - 1)
    return SpectralCoeffs.from_vector(vec, drop_zeros=True)


def random_potential(max_degree: int, rng: np.random.Generator, floor: float = 1e-6) -> SpectralCoeffs:
    """V = W^2 + floor for a random band-limited W of degree <= max_degree.

    The square is projected exactly onto degree 2 max_degree, so V is
    nonnegative everywhere, not only at quadrature nodes.
    """
    W = rng.standard_normal(n_harmonics(max_degree))
    L2 = 2 * max_degree
    rule = build_rule(2 * L2)
    vals = (rule.basis(max_degree) @ W) ** 2
    coef = rule.basis(L2).T @ (rule.weights * vals)
    coef[0] += floor * math.sqrt(FOUR_PI)
    return SpectralCoeffs.from_vector(coef)


# -- constants ----------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantsTable:
    """Constants in ||phi||_q <= C ... for zero-mean fields on the sphere.

    ``gn_sphere`` and ``plane`` multiply ||phi||^{2/q} ||grad phi||^{1-2/q};
    ``beckner_route`` and ``zero_mean_route`` multiply ||grad phi|| alone.
    ``ladyzhenskaya`` is gn_sphere^4, the constant of the fourth-power form
    ||phi||_4^4 <= c ||phi||^2 ||grad phi||^2 (only defined at q = 4).
    """

    q: float
    gn_sphere: float
    beckner_route: float
    zero_mean_route: float
    plane: float
    asymptote: float
    ladyzhenskaya: float | None
    route_comparison: bool

    FIELDS = (
        "q", "gn_sphere", "beckner_route", "zero_mean_route", "plane",
        "asymptote", "ladyzhenskaya", "route_comparison",
    )

    def row(self) -> dict:
        return {k: getattr(self, k) for k in self.FIELDS}


def compare_constants(q: float) -> ConstantsTable:
    if not (q >= 2.0):
        raise DomainError(f"q must be >= 2, got {q}")
    lead = FOUR_PI ** (-(q - 2.0) / (2.0 * q))
    gn = lead * math.sqrt(q / 2.0)
    plane = lead * q ** ((q - 2.0) / q) / (q - 1.0) ** ((q - 1.0) / q) * math.sqrt(q / 2.0)
    return ConstantsTable(
        q=q,
        gn_sphere=gn,
        beckner_route=lead * math.sqrt((q - 1.0) / 2.0),
        zero_mean_route=gn * 2.0 ** (-1.0 / q),
        plane=plane,
        asymptote=math.sqrt(q / (8.0 * math.pi)),
        ladyzhenskaya=gn**4 if q == 4.0 else None,
        route_comparison=2.0 ** (-2.0 / q) <= 1.0 - 1.0 / q + 1e-15,
    )
