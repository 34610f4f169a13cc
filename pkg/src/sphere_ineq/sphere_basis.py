"""Real spherical harmonics on S^2, their gradients, and tensor quadrature.

Conventions
-----------
* Points are (theta, phi): colatitude in [0, pi], longitude in [0, 2 pi).
* The basis is orthonormal for the surface measure d sigma (total mass
  4 pi), with no Condon-Shortley phase.
* Within degree n the order index k = 1..2n+1 maps to the longitudinal
  factor as::

      k = 1       -> P_n^0(cos theta)                  (zonal)
      k = 2j      -> sqrt(2) P_n^j(cos theta) cos(j phi)
      k = 2j + 1  -> sqrt(2) P_n^j(cos theta) sin(j phi)

* Flat coefficient vectors use position n^2 + k - 1.
* Tangent vectors are (v_theta, v_phi) in the local orthonormal frame;
  the rotated gradient is grad_perp Y = (g_phi, -g_theta), the quarter
  turn clockwise.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PoleError

__all__ = [
    "MAX_DEGREE",
    "SpherePoint",
    "HarmonicIndex",
    "SpectralCoeffs",
    "QuadratureRule",
    "TangentVector",
    "DegreeMismatchWarning",
    "flat_index",
    "index_of",
    "n_harmonics",
    "eigenvalues",
    "legendre_table",
    "assoc_legendre",
    "harmonic_matrix",
    "gradient_matrices",
    "sph_harmonic",
    "sph_harmonic_gradient",
    "vector_eigenfunction",
    "build_rule",
    "synthesize",
    "lp_norm",
]

MAX_DEGREE = 256
MAX_RULE_DEGREE = 600
POLE_EPS = 1e-12
FOUR_PI = 4.0 * math.pi


class DegreeMismatchWarning(UserWarning):
    """A quadrature rule is too coarse for the requested products."""


@dataclass(frozen=True)
class SpherePoint:
    theta: float
    phi: float

    def __post_init__(self):
        if not (0.0 <= self.theta <= math.pi):
            raise DomainError(f"colatitude {self.theta} outside [0, pi]")
        if not (0.0 <= self.phi < 2.0 * math.pi):
            raise DomainError(f"longitude {self.phi} outside [0, 2 pi)")

    @property
    def at_pole(self) -> bool:
        return math.sin(self.theta) < POLE_EPS


@dataclass(frozen=True)
class HarmonicIndex:
    n: int
    k: int

    def __post_init__(self):
        if self.n < 0 or not (1 <= self.k <= 2 * self.n + 1):
            raise DomainError(f"invalid harmonic index (n={self.n}, k={self.k})")

    @property
    def eigenvalue(self) -> int:
        return self.n * (self.n + 1)

    @property
    def order(self) -> tuple[int, str]:
        """(j, 'cos' | 'sin') for the longitudinal factor; zonal is (0, 'cos')."""
        if self.k == 1:
            return 0, "cos"
        return self.k // 2, "cos" if self.k % 2 == 0 else "sin"


@dataclass(frozen=True)
class TangentVector:
    v_theta: float
    v_phi: float

    @property
    def norm2(self) -> float:
        return self.v_theta**2 + self.v_phi**2


def n_harmonics(max_degree: int) -> int:
    return (max_degree + 1) ** 2


def flat_index(n: int, k: int) -> int:
    return n * n + k - 1


def index_of(pos: int) -> HarmonicIndex:
    n = math.isqrt(pos)
    return HarmonicIndex(n, pos - n * n + 1)


def eigenvalues(max_degree: int) -> np.ndarray:
    """Lambda_n = n(n+1) for every flat position up to ``max_degree``."""
    n = np.repeat(np.arange(max_degree + 1), 2 * np.arange(max_degree + 1) + 1)
    return (n * (n + 1)).astype(float)


@dataclass
class SpectralCoeffs:
    """Real coefficients over the Y_n^k basis.

    The text form is one ``n k value`` line per entry; blank lines and
    lines starting with ``#`` are skipped on reading.
    """

    entries: dict[tuple[int, int], float] = field(default_factory=dict)
    max_degree: int = 0

    def __post_init__(self):
        for n, k in self.entries:
            HarmonicIndex(n, k)
        top = max((n for n, _ in self.entries), default=0)
        self.max_degree = max(self.max_degree, top)

    @classmethod
    def from_vector(cls, vec, max_degree: int | None = None, drop_zeros: bool = False) -> "SpectralCoeffs":
        vec = np.asarray(vec, dtype=float)
        L = math.isqrt(vec.size) - 1
        if n_harmonics(L) != vec.size:
            raise DomainError(f"vector length {vec.size} is not a square")
        entries = {}
        for pos, v in enumerate(vec):
            if drop_zeros and v == 0.0:
                continue
            idx = index_of(pos)
            entries[(idx.n, idx.k)] = float(v)
        return cls(entries, L if max_degree is None else max_degree)

    def to_vector(self, max_degree: int | None = None) -> np.ndarray:
        L = self.max_degree if max_degree is None else max_degree
        out = np.zeros(n_harmonics(L))
        for (n, k), v in self.entries.items():
            if n > L:
                raise DomainError(f"coefficient of degree {n} exceeds {L}")
            out[flat_index(n, k)] = v
        return out

    @property
    def zero_mean(self) -> bool:
        return self.entries.get((0, 1), 0.0) == 0.0

    def l2_norm2(self) -> float:
        return math.fsum(v * v for v in self.entries.values())

    def grad_norm2(self) -> float:
        return math.fsum(n * (n + 1) * v * v for (n, _), v in self.entries.items())

    def scaled(self, a: float) -> "SpectralCoeffs":
        return SpectralCoeffs({key: a * v for key, v in self.entries.items()}, self.max_degree)

    def __add__(self, other: "SpectralCoeffs") -> "SpectralCoeffs":
        out = dict(self.entries)
        for key, v in other.entries.items():
            out[key] = out.get(key, 0.0) + v
        return SpectralCoeffs(out, max(self.max_degree, other.max_degree))

    def to_text(self) -> str:
        lines = [f"{n} {k} {v!r}" for (n, k), v in sorted(self.entries.items())]
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str) -> "SpectralCoeffs":
        entries = {}
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"expected 'n k value', got {raw!r}")
            entries[(int(parts[0]), int(parts[1]))] = float(parts[2])
        return cls(entries)


# -- associated Legendre functions ------------------------------------------------


def legendre_table(max_degree: int, x, sin_theta=None) -> tuple[np.ndarray, np.ndarray]:
    """Normalized associated Legendre values P[n, j] and Q[n, j] = P[n, j] / sin(theta).

    P[n, j] is scaled so that P[n, 0] and sqrt(2) P[n, j] cos/sin(j phi)
    are orthonormal under d sigma. Q is computed by the same three-term
    recurrence started from seeds that already carry one fewer power of
    sin(theta), so it is finite at the poles for j >= 1 (Q[:, 0] is left 0).
    Arrays have shape (L+1, L+1) + shape(x).
    """
    if not (0 <= max_degree <= MAX_DEGREE):
        raise OverflowError(f"degree {max_degree} outside the validated range 0..{MAX_DEGREE}")
    x = np.asarray(x, dtype=float)
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None)) if sin_theta is None else np.asarray(sin_theta, dtype=float)
    L = max_degree
    P = np.zeros((L + 1, L + 1) + x.shape)
    Q = np.zeros_like(P)
    diag = np.full(x.shape, 1.0 / math.sqrt(FOUR_PI))
    for j in range(L + 1):
        if j > 0:
            r = math.sqrt((2 * j + 1) / (2.0 * j))
            Q[j, j] = r * diag
            diag = r * s * diag
        P[j, j] = diag
        if j + 1 <= L:
            c = math.sqrt(2 * j + 3)
            P[j + 1, j] = c * x * P[j, j]
            Q[j + 1, j] = c * x * Q[j, j]
        for n in range(j + 2, L + 1):
            a = math.sqrt((4.0 * n * n - 1.0) / (n * n - j * j))
            b = math.sqrt(((n - 1.0) ** 2 - j * j) / (4.0 * (n - 1.0) ** 2 - 1.0))
            P[n, j] = a * (x * P[n - 1, j] - b * P[n - 2, j])
            Q[n, j] = a * (x * Q[n - 1, j] - b * Q[n - 2, j])
    return P, Q


def assoc_legendre(n: int, k_abs: int, x: float) -> float:
    """Normalized associated Legendre value, degree n, order k_abs, at x in [-1, 1]."""
    if n > MAX_DEGREE:
        raise OverflowError(f"degree {n} exceeds the validated cap {MAX_DEGREE}")
    if not (0 <= k_abs <= n):
        raise DomainError(f"need 0 <= k_abs <= n, got n={n}, k_abs={k_abs}")
    if not (-1.0 <= x <= 1.0):
        raise DomainError(f"x={x} outside [-1, 1]")
    # a single order column only needs the diagonal walk up to k_abs
    s = math.sqrt(max(0.0, 1.0 - x * x))
    p_prev = 0.0
    p = 1.0 / math.sqrt(FOUR_PI)
    for j in range(1, k_abs + 1):
        p *= math.sqrt((2 * j + 1) / (2.0 * j)) * s
    if n == k_abs:
        return p
    p_prev, p = p, math.sqrt(2 * k_abs + 3) * x * p
    for m in range(k_abs + 2, n + 1):
        a = math.sqrt((4.0 * m * m - 1.0) / (m * m - k_abs * k_abs))
        b = math.sqrt(((m - 1.0) ** 2 - k_abs * k_abs) / (4.0 * (m - 1.0) ** 2 - 1.0))
        p_prev, p = p, a * (x * p - b * p_prev)
    return p


# -- vectorized basis evaluation ---------------------------------------------------


def _as_points(theta, phi) -> tuple[np.ndarray, np.ndarray]:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    return np.broadcast_arrays(theta, phi)


def harmonic_matrix(max_degree: int, theta, phi) -> np.ndarray:
    """Matrix B[i, pos] = Y_pos(theta_i, phi_i) over all positions up to ``max_degree``."""
    theta, phi = _as_points(theta, phi)
    P, _ = legendre_table(max_degree, np.cos(theta), np.sin(theta))
    B = np.empty((theta.size, n_harmonics(max_degree)))
    root2 = math.sqrt(2.0)
    for j in range(max_degree + 1):
        if j == 0:
            for n in range(max_degree + 1):
                B[:, flat_index(n, 1)] = P[n, 0]
            continue
        cj, sj = root2 * np.cos(j * phi), root2 * np.sin(j * phi)
        for n in range(j, max_degree + 1):
            B[:, flat_index(n, 2 * j)] = P[n, j] * cj
            B[:, flat_index(n, 2 * j + 1)] = P[n, j] * sj
    return B


def gradient_matrices(max_degree: int, theta, phi) -> tuple[np.ndarray, np.ndarray]:
    """Frame components (d_theta Y, (1/sin theta) d_phi Y) for every basis function.

    Raises :class:`PoleError` when any point has sin(theta) < 1e-12.
    """
    theta, phi = _as_points(theta, phi)
    s = np.sin(theta)
    if np.any(s < POLE_EPS):
        raise PoleError("tangent frame is undefined within 1e-12 of a pole")
    x = np.cos(theta)
    P, Q = legendre_table(max_degree, x, s)
    Gt = np.zeros((theta.size, n_harmonics(max_degree)))
    Gp = np.zeros_like(Gt)
    root2 = math.sqrt(2.0)
    for n in range(1, max_degree + 1):
        Gt[:, flat_index(n, 1)] = -math.sqrt(n * (n + 1.0)) * P[n, 1]
    for j in range(1, max_degree + 1):
        cj, sj = np.cos(j * phi), np.sin(j * phi)
        for n in range(j, max_degree + 1):
            # sin(theta) dP/dtheta = n x P_n - sqrt((2n+1)/(2n-1) (n^2-j^2)) P_{n-1}
            dP = n * x * Q[n, j]
            if n > j:
                dP = dP - math.sqrt((2 * n + 1.0) / (2 * n - 1.0) * (n * n - j * j)) * Q[n - 1, j]
            Gt[:, flat_index(n, 2 * j)] = root2 * dP * cj
            Gt[:, flat_index(n, 2 * j + 1)] = root2 * dP * sj
            Gp[:, flat_index(n, 2 * j)] = -root2 * j * Q[n, j] * sj
            Gp[:, flat_index(n, 2 * j + 1)] = root2 * j * Q[n, j] * cj
    return Gt, Gp


def _point(s: SpherePoint | tuple[float, float]) -> SpherePoint:
    return s if isinstance(s, SpherePoint) else SpherePoint(*s)


def sph_harmonic(idx: HarmonicIndex, s: SpherePoint) -> float:
    """Real, d sigma-orthonormal Y_n^k at one point."""
    s = _point(s)
    j, kind = idx.order
    p = assoc_legendre(idx.n, j, math.cos(s.theta))
    if j == 0:
        return p
    trig = math.cos(j * s.phi) if kind == "cos" else math.sin(j * s.phi)
    return math.sqrt(2.0) * p * trig


def sph_harmonic_gradient(idx: HarmonicIndex, s: SpherePoint) -> TangentVector:
    """(d_theta Y, (1/sin theta) d_phi Y) at one point away from the poles."""
    s = _point(s)
    st = math.sin(s.theta)
    if st < POLE_EPS:
        raise PoleError(f"gradient frame undefined at theta={s.theta}")
    n = idx.n
    if n == 0:
        return TangentVector(0.0, 0.0)
    x = math.cos(s.theta)
    j, kind = idx.order
    if j == 0:
        return TangentVector(-math.sqrt(n * (n + 1.0)) * assoc_legendre(n, 1, x), 0.0)
    q = assoc_legendre(n, j, x) / st
    q_prev = assoc_legendre(n - 1, j, x) / st if n - 1 >= j else 0.0
    dp = n * x * q - math.sqrt((2 * n + 1.0) / (2 * n - 1.0) * (n * n - j * j)) * q_prev
    if kind == "cos":
        trig, dtrig = math.cos(j * s.phi), -j * math.sin(j * s.phi)
    else:
        trig, dtrig = math.sin(j * s.phi), j * math.cos(j * s.phi)
    r2 = math.sqrt(2.0)
    return TangentVector(r2 * dp * trig, r2 * q * dtrig)


def vector_eigenfunction(idx: HarmonicIndex, s: SpherePoint) -> TangentVector:
    """w_n^k = (n(n+1))^{-1/2} grad_perp Y_n^k, a divergence-free eigenfield."""
    if idx.n < 1:
        raise DomainError("vector eigenfunctions start at degree 1")
    g = sph_harmonic_gradient(idx, s)
    scale = 1.0 / math.sqrt(idx.eigenvalue)
    return TangentVector(scale * g.v_phi, -scale * g.v_theta)


# -- quadrature -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Tensor Gauss-Legendre x uniform-longitude rule on S^2.

    ``theta``, ``phi`` and ``weights`` are flat read-only arrays over the
    nodes, latitude-major.
    """

    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    exact_degree: int

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def nodes(self) -> list[SpherePoint]:
        return [SpherePoint(t, p) for t, p in zip(self.theta, self.phi)]

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, np.asarray(values, dtype=float)))

    @functools.cached_property
    def _cache(self) -> dict:
        return {}

    def basis(self, max_degree: int) -> np.ndarray:
        key = ("Y", max_degree)
        if key not in self._cache:
            B = harmonic_matrix(max_degree, self.theta, self.phi)
            B.setflags(write=False)
            self._cache[key] = B
        return self._cache[key]

    def gradient_basis(self, max_degree: int) -> tuple[np.ndarray, np.ndarray]:
        key = ("G", max_degree)
        if key not in self._cache:
            Gt, Gp = gradient_matrices(max_degree, self.theta, self.phi)
            Gt.setflags(write=False)
            Gp.setflags(write=False)
            self._cache[key] = (Gt, Gp)
        return self._cache[key]


@functools.lru_cache(maxsize=32)
def build_rule(exact_degree: int) -> QuadratureRule:
    """Rule exact for spherical polynomials of degree <= ``exact_degree``."""
    if not (0 <= exact_degree <= MAX_RULE_DEGREE):
        raise DomainError(f"exact_degree must lie in 0..{MAX_RULE_DEGREE}, got {exact_degree}")
    n_lat = (exact_degree + 2) // 2  # ceil((d+1)/2)
    n_lon = exact_degree + 1
    x, w = np.polynomial.legendre.leggauss(n_lat)
    theta = np.arccos(x)
    phi = 2.0 * math.pi * np.arange(n_lon) / n_lon
    T, F = np.meshgrid(theta, phi, indexing="ij")
    W = np.repeat(w[:, None] * (2.0 * math.pi / n_lon), n_lon, axis=1)
    arrays = [np.ascontiguousarray(a.ravel()) for a in (T, F, W)]
    for a in arrays:
        a.setflags(write=False)
    return QuadratureRule(arrays[0], arrays[1], arrays[2], exact_degree)


def synthesize(c: SpectralCoeffs, rule: QuadratureRule) -> np.ndarray:
    """Field values sum c_nk Y_n^k at the rule's nodes."""
    if rule.exact_degree < 2 * c.max_degree:
        warnings.warn(
            f"rule degree {rule.exact_degree} < 2 x field degree {c.max_degree}; norms will be inexact",
            DegreeMismatchWarning,
            stacklevel=2,
        )
    return rule.basis(c.max_degree) @ c.to_vector()


def lp_norm(values, p_exp: float, rule: QuadratureRule) -> float:
    """(sum_i w_i |v_i|^p)^{1/p} against d sigma."""
    if not (p_exp >= 1.0):
        raise DomainError(f"p_exp must be >= 1, got {p_exp}")
    v = np.abs(np.asarray(values, dtype=float))
    if math.isinf(p_exp):
        return float(v.max())
    vmax = float(v.max()) if v.size else 0.0
    if vmax == 0.0:
        return 0.0
    # scale out the max so large exponents do not overflow
    return vmax * rule.integrate((v / vmax) ** p_exp) ** (1.0 / p_exp)
