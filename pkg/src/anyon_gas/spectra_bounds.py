"""Closed-form spectra, rigorous bounds and inequality checkers for anyon energies.

Units: hbar = 2m = 1, so the one-body kinetic energy is -Laplacian and the relative
two-body kinetic energy carries the factor hbar^2/m = 2. Energies of trapped systems are
returned in absolute units (multiples of ``trap.omega``).
"""

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import integrate, optimize, special

from .braid_stats import alpha_N, alpha_two
from .errors import ConvergenceError

F2_CAP = 0.147
HOMOGENEOUS_UPPER = 2.0 * math.pi**2
RELATIVE_KINETIC_FACTOR = 2.0  # hbar^2 / m


@dataclass(frozen=True)
class HarmonicTrap:
    omega: float = 1.0

    def __post_init__(self) -> None:
        if not self.omega > 0:
            raise ValueError(f"trap omega must be > 0, got {self.omega}")


# ---------------------------------------------------------------------------
# Few-body spectra and bounds in a harmonic trap
# ---------------------------------------------------------------------------


def e2_harmonic(alpha: float, trap: HarmonicTrap) -> float:
    """Two-anyon ground state energy: hbar*omega*(2 + min_q |2q + alpha|)."""
    return trap.omega * (2.0 + float(alpha_two(alpha)))


def e2_relative_harmonic(alpha: float, trap: HarmonicTrap) -> float:
    """Relative-motion part of e2_harmonic (centre of mass ground energy removed)."""
    return trap.omega * (1.0 + float(alpha_two(alpha)))


def boson_lower_bound(N: int, trap: HarmonicTrap) -> float:
    """E_N(alpha) >= E_N(0) = hbar*omega*N for every alpha (diamagnetic inequality)."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    return trap.omega * N


def chitra_sen_bound(N: int, L: int, alpha: float, trap: HarmonicTrap) -> float:
    """Lower bound for any N-anyon state of angular momentum L."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    return trap.omega * (N + abs(L + alpha * N * (N - 1) / 2.0))


def optimal_angular_momentum(N: int, alpha: float) -> int:
    """Integer nearest to -alpha*N(N-1)/2, ties broken toward zero."""
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    target = -alpha * N * (N - 1) / 2.0
    lo = math.floor(target)
    frac = target - lo
    if abs(frac - 0.5) <= 1e-12:
        return lo if abs(lo) < abs(lo + 1) else lo + 1
    return lo + 1 if frac > 0.5 else lo


def chitra_sen_estimates(N: int, alpha: float, trap: HarmonicTrap) -> Tuple[float, float]:
    """Near-boson and near-fermion envelope estimates (not bounds).

    Returns (7*sqrt(3)/9 * sqrt(alpha_2), sqrt(8)/3), each times hbar*omega*N^{3/2}.
    """
    scale = trap.omega * N**1.5
    near_boson = 7.0 * math.sqrt(3.0) / 9.0 * math.sqrt(float(alpha_two(alpha))) * scale
    near_fermion = math.sqrt(8.0) / 3.0 * scale
    return near_boson, near_fermion


def harmonic_lt_lower(N: int, alpha: float, trap: HarmonicTrap, constant: float = 1.0) -> float:
    """Degeneracy-pressure bound constant * sqrt(alpha_2) * hbar*omega * N^{3/2}."""
    if constant <= 0:
        raise ValueError(f"constant must be > 0, got {constant}")
    return constant * math.sqrt(float(alpha_two(alpha))) * trap.omega * N**1.5


def hardy_coefficient(N: int, alpha: float) -> float:
    """Coupling 4*alpha_N^2/N of the many-particle Hardy inequality."""
    return 4.0 * float(alpha_N(alpha, N)) ** 2 / N


def effective_dimension(alpha: float) -> float:
    return 2.0 + 2.0 * float(alpha_two(alpha))


def landau_spectrum(B: float, n_max: int) -> List[Tuple[float, float]]:
    """Landau levels |B|(2n+1), n = 0..n_max, each with degeneracy density |B|/(2 pi)."""
    if B == 0:
        raise ValueError("Landau spectrum needs a nonzero field B")
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    b = abs(B)
    return [(b * (2 * n + 1), b / (2.0 * math.pi)) for n in range(n_max + 1)]


# ---------------------------------------------------------------------------
# Local exclusion: Neumann energies on the unit square
# ---------------------------------------------------------------------------


def bessel_prime_zero(nu: float, tol: float = 1e-12, max_iter: int = 2000) -> float:
    """Smallest x >= 0 with J_nu'(x) = 0 (0 for nu = 0).

    The first positive zero lies above nu; it is bracketed by a forward scan from just
    above 0 and refined with Brent's method.
    """
    if nu < 0 or not math.isfinite(nu):
        raise ValueError(f"nu must be finite and >= 0, got {nu}")
    if nu == 0:
        return 0.0

    step = 0.05
    lo = 1e-8
    f_lo = special.jvp(nu, lo)
    for _ in range(max_iter):
        hi = lo + step
        f_hi = special.jvp(nu, hi)
        if f_lo == 0.0:
            return lo
        if np.sign(f_hi) != np.sign(f_lo):
            return float(optimize.brentq(lambda x: special.jvp(nu, x), lo, hi, xtol=tol))
        lo, f_lo = hi, f_hi
    raise ConvergenceError(f"no sign change of J'_{nu} found below x={lo:.2f}")


def neumann_pair_energy(alpha: float) -> Tuple[float, float]:
    """(4 pi alpha_2, 2 pi (j'_{alpha_2})^2): the pair lower value and its Bessel approximation."""
    a2 = float(alpha_two(alpha))
    lower = 4.0 * math.pi * a2
    approx = 2.0 * math.pi * bessel_prime_zero(a2) ** 2
    return lower, approx


def _pair_energy_approx(a: float) -> float:
    return 2.0 * math.pi * bessel_prime_zero(a) ** 2


def f2_floor(alpha: float) -> float:
    """F_2(alpha_2) = 1/4 min{E_2(alpha_2), 0.147} with E_2 taken as 4 pi alpha_2."""
    e2 = 4.0 * math.pi * float(alpha_two(alpha))
    return 0.25 * min(e2, F2_CAP)


def neumann_many_lower(N: int, alpha: float) -> float:
    """E_N >= (N-1) * E2~(alpha_N) on the unit square."""
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    return (N - 1) * _pair_energy_approx(float(alpha_N(alpha, N)))


def fermion_neumann_lower(N: int) -> float:
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    return math.pi**2 * (N - 1)


def homogeneous_bounds(alpha: float, N: int) -> Tuple[float, float]:
    """Uniform bounds on the homogeneous gas energy per particle and unit density."""
    a_n = float(alpha_N(alpha, N))
    lower = 0.25 * max(_pair_energy_approx(a_n), f2_floor(alpha))
    return lower, HOMOGENEOUS_UPPER


def homogeneous_bounds_linear(
    alpha: float, c_lower: float = 1.0, c_upper: float = 1.0
) -> Tuple[float, float]:
    """c_lower*alpha_2 <= e(alpha) <= c_upper*alpha_2, constants caller-supplied."""
    if c_lower <= 0 or c_upper <= 0:
        raise ValueError("universal constants must be positive")
    a2 = float(alpha_two(alpha))
    return c_lower * a2, c_upper * a2


# ---------------------------------------------------------------------------
# Two-body trial states and inequality checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoBodyTrialState:
    """Relative two-body state f(r) e^{i l phi}; ``l`` is the shifted angular momentum."""

    radial_grid: np.ndarray
    modulus: np.ndarray
    relative_angular_momentum: float

    def __post_init__(self) -> None:
        r = np.asarray(self.radial_grid, dtype=float)
        f = np.asarray(self.modulus, dtype=float)
        if r.ndim != 1 or r.shape != f.shape:
            raise ValueError("radial_grid and modulus must be 1D arrays of equal length")
        if r.size < 3 or np.any(np.diff(r) <= 0) or r[0] < 0:
            raise ValueError("radial_grid must be nonnegative and strictly increasing")
        if not np.all(np.isfinite(f)):
            raise ValueError("modulus must be finite")
        if np.any(f < 0):
            raise ValueError("modulus must be nonnegative")
        if self.relative_angular_momentum != 0 and r[0] == 0 and f[0] != 0:
            raise ValueError("modulus must vanish at r=0 when l != 0")
        object.__setattr__(self, "radial_grid", r)
        object.__setattr__(self, "modulus", f)

    @property
    def norm(self) -> float:
        r, f = self.radial_grid, self.modulus
        return float(2.0 * math.pi * integrate.trapezoid(f * f * r, r))

    def _inverse_square(self) -> float:
        r, f = self.radial_grid, self.modulus
        with np.errstate(divide="ignore", invalid="ignore"):
            integrand = np.where(r > 0, f * f / r, 0.0)
        return float(2.0 * math.pi * integrate.trapezoid(integrand, r))

    def _radial_kinetic(self) -> float:
        r, f = self.radial_grid, self.modulus
        df = np.gradient(f, r)
        return float(2.0 * math.pi * integrate.trapezoid(df * df * r, r))

    def kinetic(self) -> float:
        """Relative kinetic form 2 * int (|f'|^2 + l^2 |f|^2 / r^2) over the plane."""
        ell = self.relative_angular_momentum
        barrier = ell * ell * self._inverse_square()
        return RELATIVE_KINETIC_FACTOR * (self._radial_kinetic() + barrier)

    def density_square_integral(self) -> float:
        """int rho^2 for the normalized relative density rho = |psi|^2."""
        r, f = self.radial_grid, self.modulus
        rho = f * f / self.norm
        return float(2.0 * math.pi * integrate.trapezoid(rho * rho * r, r))


@dataclass(frozen=True)
class BoundReport:
    lhs: float
    rhs: float
    satisfied: bool
    ratio: float


def _in_lattice(x: float) -> bool:
    """x lies in 2Z."""
    return abs(x - 2.0 * round(x / 2.0)) <= 1e-9


def _report(lhs: float, rhs: float, tol: float) -> BoundReport:
    ratio = lhs / rhs if rhs != 0 else math.inf
    return BoundReport(lhs=lhs, rhs=rhs, satisfied=lhs >= rhs - tol, ratio=ratio)


def inequality_check(
    kind: str,
    state: TwoBodyTrialState,
    alpha: float,
    tol: float = 1e-8,
    constant: float = 1.0,
) -> BoundReport:
    """Check a kinetic-energy inequality on a normalized two-body relative state.

    Args:
        kind: "hardy", "diamagnetic" or "lieb_thirring".
        state: trial state; its angular momentum must lie in alpha + 2Z or -alpha + 2Z
            (the three inequalities are even in the angular momentum).
        alpha: statistics parameter.
        tol: slack allowed for quadrature error.
        constant: Lieb-Thirring constant (the rhs is constant * alpha_2 * int rho^2).

    Returns:
        BoundReport with lhs the kinetic expectation of the normalized state.
    """
    norm = state.norm
    if not math.isfinite(norm) or norm <= 0:
        raise ValueError("trial state is not normalizable on its grid")
    ell = state.relative_angular_momentum
    if not any(_in_lattice(ell - s * alpha) for s in (1.0, -1.0)):
        raise ValueError(f"angular momentum {ell} is not in ±alpha + 2Z for alpha={alpha}")

    lhs = state.kinetic() / norm
    if kind == "hardy":
        rhs = hardy_coefficient(2, alpha) * state._inverse_square() / norm
    elif kind == "diamagnetic":
        rhs = RELATIVE_KINETIC_FACTOR * state._radial_kinetic() / norm
    elif kind == "lieb_thirring":
        if constant <= 0:
            raise ValueError(f"constant must be > 0, got {constant}")
        rhs = constant * float(alpha_two(alpha)) * state.density_square_integral()
    else:
        raise ValueError(f"unknown inequality kind {kind!r}")
    return _report(lhs, rhs, tol)
