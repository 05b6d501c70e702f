"""
Thomas-Fermi type density functionals for anyons on radial grids.

All functionals share one engine: for an energy density c*rho^2 the minimizer of
int (c rho^2 + V rho) at mass N is rho = (lambda - V)_+ / (2c), with the chemical potential
lambda fixed by bisection on the discrete mass. Non-quadratic densities (magnetic TF,
extended-gas LDA) are evaluated on a given density.

Units: hbar = 2m = 1; the harmonic trap V(r) = r^2 has hbar*omega = 2.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, optimize

from .braid_stats import StatisticsParameter, alpha_infinity, alpha_two
from .errors import ConvergenceError
from .spectra_bounds import HarmonicTrap

MIN_NODES = 64
SUPPORT_FRACTION = 0.9
BISECTION_ITERS = 200
MASS_TOL = 1e-12
DENSITY_MASS_TOL = 1e-8
BLEND_LO, BLEND_HI = 0.5, 2.0
C_ATF_ESTIMATE = 4.0 * math.pi**1.5 / 3.0
MOMENTUM_NORM_TOL = 5e-3


# ---------------------------------------------------------------------------
# Grids, densities, traps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialGrid:
    """Radial nodes r[0] = 0 < r[1] < ... with trapezoid weights for int f(r) 2 pi r dr."""

    r: np.ndarray
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        r = np.array(self.r, dtype=float)
        if r.ndim != 1 or r.size < MIN_NODES:
            raise ValueError(f"radial grid needs at least {MIN_NODES} nodes, got {r.size}")
        if r[0] != 0.0:
            raise ValueError("radial grid must start at r=0")
        if np.any(np.diff(r) <= 0):
            raise ValueError("radial grid must be strictly increasing")
        h = np.diff(r)
        w = np.zeros_like(r)
        w[:-1] += 0.5 * h
        w[1:] += 0.5 * h
        r.setflags(write=False)
        w = 2.0 * math.pi * r * w
        w.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, r_max: float, n: int = 1024) -> "RadialGrid":
        if r_max <= 0:
            raise ValueError(f"r_max must be > 0, got {r_max}")
        return cls(np.linspace(0.0, r_max, n))

    @property
    def r_max(self) -> float:
        return float(self.r[-1])

    def integrate(self, values: np.ndarray) -> float:
        """Trapezoid value of int f 2 pi r dr."""
        return float(np.dot(self.weights, values))


@dataclass(frozen=True)
class RadialDensity:
    grid: RadialGrid
    values: np.ndarray
    mass: float

    def __post_init__(self) -> None:
        rho = np.array(self.values, dtype=float)
        if rho.shape != self.grid.r.shape:
            raise ValueError("density values must match the grid")
        if np.any(rho < 0) or not np.all(np.isfinite(rho)):
            raise ValueError("density must be finite and nonnegative")
        total = self.grid.integrate(rho)
        if abs(total - self.mass) > DENSITY_MASS_TOL * max(abs(self.mass), 1e-300):
            raise ValueError(f"density integrates to {total}, expected mass {self.mass}")
        rho.setflags(write=False)
        object.__setattr__(self, "values", rho)

    @property
    def support_radius(self) -> float:
        nz = np.nonzero(self.values > 0)[0]
        return float(self.grid.r[nz[-1]]) if nz.size else 0.0


@dataclass(frozen=True)
class TrapPotential:
    """Radial confining potential; ``degree`` is set for homogeneous traps s*r^k."""

    func: Callable[[np.ndarray], np.ndarray]
    degree: Optional[float] = None
    name: str = "custom"
    scale: Optional[float] = None

    def __call__(self, r: Union[float, np.ndarray]) -> np.ndarray:
        return np.asarray(self.func(np.asarray(r, dtype=float)), dtype=float)

    @classmethod
    def harmonic(cls, omega: float = 2.0) -> "TrapPotential":
        """V(r) = (omega/2)^2 r^2, so that -Laplacian + V has level spacing omega."""
        if omega <= 0:
            raise ValueError(f"omega must be > 0, got {omega}")
        k = (omega / 2.0) ** 2
        return cls(lambda r: k * r * r, degree=2.0, name=f"harmonic(omega={omega:g})", scale=k)

    @classmethod
    def power(cls, s: float, k: float) -> "TrapPotential":
        if s <= 0 or k <= 0:
            raise ValueError("power trap needs s > 0 and k > 0")
        return cls(
            lambda r: s * np.abs(r) ** k, degree=float(k), name=f"power(s={s:g}, k={k:g})", scale=s
        )


# ---------------------------------------------------------------------------
# Coefficient models
# ---------------------------------------------------------------------------


class CoefficientModel:
    """Local energy density of a Thomas-Fermi type functional."""

    quadratic = True

    def coefficient(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class Fermion(CoefficientModel):
    def coefficient(self) -> float:
        return 2.0 * math.pi


@dataclass(frozen=True)
class ConstantField(CoefficientModel):
    alpha: float

    def __post_init__(self) -> None:
        if not 0 < self.alpha <= 1:
            raise ValueError(f"ConstantField needs 0 < alpha <= 1, got {self.alpha}")

    def coefficient(self) -> float:
        return 2.0 * math.pi * self.alpha


@dataclass(frozen=True)
class AvgField(CoefficientModel):
    beta: float
    c_atf: float = C_ATF_ESTIMATE

    def __post_init__(self) -> None:
        if self.c_atf <= 0:
            raise ValueError(f"c_atf must be > 0, got {self.c_atf}")

    def coefficient(self) -> float:
        return self.c_atf * abs(self.beta)


@dataclass(frozen=True)
class MagneticSelf(CoefficientModel):
    """Magnetic TF in the self-generated field B = 2 pi beta rho; reduces to 2 pi (1 + M)."""

    beta: float
    quadratic = False

    def __post_init__(self) -> None:
        if not 0 < self.beta <= 1:
            raise ValueError(f"beta must be in (0, 1], got {self.beta}")

    def coefficient(self) -> float:
        return 2.0 * math.pi * (1.0 + m_factor(self.beta))

    def energy_density(self, rho: np.ndarray) -> np.ndarray:
        return _self_field_energy_density(self.beta, rho)


@dataclass(frozen=True)
class ExtendedLDA(CoefficientModel):
    alpha: float
    R: float
    shape: str = "sym_lower"
    constants: Tuple[float, float, float, float, float] = (1.0, 1.0, 1.0, 1.0, 1.0)
    quadratic = False

    def __post_init__(self) -> None:
        if self.R <= 0:
            raise ValueError(f"R must be > 0, got {self.R}")
        if self.shape not in ("sym_lower", "asym_lower"):
            raise ValueError(f"unknown extended-gas shape {self.shape!r}")

    def energy(self, rho: RadialDensity, trap: TrapPotential) -> float:
        return extended_lda_energy(self.alpha, self.R, rho, trap, self.shape, self.constants)


class TFSolution(NamedTuple):
    density: RadialDensity
    energy: float
    chemical_potential: float


class AMTFSolution(NamedTuple):
    density: RadialDensity
    energy: float
    chemical_potential: float
    unreduced_energy: float


# ---------------------------------------------------------------------------
# Quadratic TF engine
# ---------------------------------------------------------------------------


def _coefficient_of(model: Union[CoefficientModel, float]) -> float:
    if isinstance(model, CoefficientModel):
        if not model.quadratic:
            raise TypeError(f"{type(model).__name__} is not a quadratic energy density")
        c = model.coefficient()
    else:
        c = float(model)
    if not c > 0:
        raise ValueError(f"TF coefficient must be > 0, got {c}")
    return c


def tf_density_at(
    c: float, trap: TrapPotential, lam: float, r: Union[float, np.ndarray]
) -> np.ndarray:
    """Closed-form TF density (lambda - V(r))_+ / (2c) at arbitrary radii."""
    return np.maximum(lam - trap(r), 0.0) / (2.0 * c)


def tf_minimize(
    model: Union[CoefficientModel, float], trap: TrapPotential, N: float, grid: RadialGrid
) -> TFSolution:
    """Minimize int (c rho^2 + V rho) over radial densities of mass N.

    Args:
        model: a quadratic CoefficientModel, or the coefficient c itself.
        trap: confining potential.
        N: mass, > 0.
        grid: radial grid; the support must end inside 90% of its extent.

    Returns:
        TFSolution(density, energy, chemical_potential).
    """
    c = _coefficient_of(model)
    if not N > 0:
        raise ValueError(f"mass N must be > 0, got {N}")
    V = trap(grid.r)
    if not np.all(np.isfinite(V)):
        raise ValueError("trap potential is not finite on the grid")

    def mass(lam: float) -> float:
        return grid.integrate(np.maximum(lam - V, 0.0)) / (2.0 * c)

    lo = float(V.min())
    hi = lo + 2.0 * c * N / math.pi + float(V[-1])
    for _ in range(64):
        if mass(hi) >= N:
            break
        hi = lo + 2.0 * (hi - lo)
    else:
        raise ConvergenceError("could not bracket the chemical potential")

    for _ in range(BISECTION_ITERS):
        mid = 0.5 * (lo + hi)
        m = mass(mid)
        if abs(m - N) <= MASS_TOL * N:
            lo = hi = mid
            break
        if m < N:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)

    rho = np.maximum(lam - V, 0.0) / (2.0 * c)
    # mass is linear in lambda on a fixed support; finish exactly
    active = rho > 0
    w_active = float(grid.weights[active].sum())
    if w_active > 0:
        lam_exact = (2.0 * c * N + float(np.dot(grid.weights[active], V[active]))) / w_active
        rho_exact = np.maximum(lam_exact - V, 0.0) / (2.0 * c)
        if np.array_equal(rho_exact > 0, active):
            lam, rho = lam_exact, rho_exact

    density = RadialDensity(grid, rho, float(N))
    if density.support_radius > SUPPORT_FRACTION * grid.r_max:
        raise ValueError(
            f"grid too small: support radius {density.support_radius:.4g} exceeds "
            f"{SUPPORT_FRACTION:.0%} of r_max={grid.r_max:.4g}"
        )
    energy = grid.integrate(c * rho * rho + V * rho)
    return TFSolution(density, energy, float(lam))


def tf_closed_form(c: float, trap: TrapPotential, N: float) -> Optional[Tuple[float, float]]:
    """(energy, lambda) of the quadratic TF problem for a homogeneous trap s*r^k, else None."""
    if trap.degree is None or trap.scale is None:
        return None
    if not c > 0 or not N > 0:
        raise ValueError("c and N must be > 0")
    k, s = trap.degree, trap.scale
    # N = pi k lambda^{1+2/k} s^{-2/k} / (2c(k+2))
    lam = (2.0 * c * (k + 2.0) * N * s ** (2.0 / k) / (math.pi * k)) ** (k / (k + 2.0))
    R2 = (lam / s) ** (2.0 / k)
    energy = math.pi / (2.0 * c) * lam * lam * R2 * k / (2.0 * (k + 1.0))
    return energy, lam


def constant_field_harmonic_energy(alpha: float, N: float, trap: HarmonicTrap) -> float:
    """Closed-form constant-field energy (sqrt(8)/3) sqrt(alpha) hbar*omega N^{3/2}."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    return math.sqrt(8.0) / 3.0 * math.sqrt(alpha) * trap.omega * N**1.5


# ---------------------------------------------------------------------------
# Magnetic TF
# ---------------------------------------------------------------------------


def _fractional_part(x: float) -> float:
    n = round(x)
    if abs(x - n) <= 1e-12 * max(1.0, abs(x)):
        return 0.0
    return x - math.floor(x)


def m_factor(beta: float) -> float:
    """M(beta) = beta^2 (1 - {1/beta}) {1/beta}."""
    if not beta > 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    f = _fractional_part(1.0 / beta)
    return beta * beta * (1.0 - f) * f


def m_factor_envelope(beta: float) -> float:
    return beta * beta / 4.0


def mtf_curve(betas: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """(M(beta), beta^2/4) sampled on ``betas``."""
    b = np.asarray(betas, dtype=float)
    return np.array([m_factor(x) for x in b]), b * b / 4.0


def mtf_energy_density(B: float, rho: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Landau-level filling energy j_B(rho).

    Levels |B|(2n+1), each holding |B|/(2 pi) per unit area, filled from the bottom.
    """
    if B == 0:
        raise ValueError("mtf_energy_density needs B != 0")
    r = np.asarray(rho, dtype=float)
    if np.any(r < 0):
        raise ValueError("density must be nonnegative")
    b = abs(B)
    d = b / (2.0 * math.pi)
    full = np.floor(r / d)
    rest = r - full * d
    out = b * d * full * full + b * (2.0 * full + 1.0) * rest
    return float(out) if np.ndim(rho) == 0 else out


def landau_filling_energy_bruteforce(B: float, rho: float, n_levels: int = 64) -> float:
    """min sum_n |B|(2n+1) f_n subject to sum f_n = rho, 0 <= f_n <= |B|/2pi (linear program)."""
    if B == 0:
        raise ValueError("B must be nonzero")
    b = abs(B)
    d = b / (2.0 * math.pi)
    if rho < 0 or rho > n_levels * d:
        raise ValueError(f"rho={rho} does not fit in {n_levels} levels")
    cost = b * (2.0 * np.arange(n_levels) + 1.0)
    res = optimize.linprog(
        cost,
        A_eq=np.ones((1, n_levels)),
        b_eq=[rho],
        bounds=[(0.0, d)] * n_levels,
        method="highs",
    )
    if not res.success:
        raise ConvergenceError(f"filling LP failed: {res.message}")
    return float(res.fun)


def _self_field_energy_density(beta: float, rho: np.ndarray) -> np.ndarray:
    """j_{2 pi beta rho}(rho) pointwise, 0 where rho = 0."""
    r = np.asarray(rho, dtype=float)
    out = np.zeros_like(r)
    pos = r > 0
    for i in np.flatnonzero(pos):
        out.flat[i] = mtf_energy_density(2.0 * math.pi * beta * r.flat[i], r.flat[i])
    return out


def amtf_minimize(beta: float, trap: TrapPotential, N: float, grid: RadialGrid) -> AMTFSolution:
    """Reduced magnetic TF with self-generated field: c = 2 pi (1 + M(beta)).

    The unreduced energy int j_{2 pi beta rho}(rho) + V rho is evaluated at the minimizer and
    must not fall below the reduced one.
    """
    if not 0 < beta <= 1:
        raise ValueError(f"beta must be in (0, 1], got {beta}")
    model = MagneticSelf(beta)
    sol = tf_minimize(model.coefficient(), trap, N, grid)
    rho = sol.density.values
    V = trap(grid.r)
    unreduced = grid.integrate(model.energy_density(rho) + V * rho)
    if unreduced < sol.energy - 1e-8 * max(1.0, abs(sol.energy)):
        raise ConvergenceError(
            f"unreduced energy {unreduced} below reduced energy {sol.energy}", result=sol
        )
    return AMTFSolution(sol.density, sol.energy, sol.chemical_potential, unreduced)


# ---------------------------------------------------------------------------
# Extended-gas local density approximation
# ---------------------------------------------------------------------------


def _alpha_infinity_value(alpha: Union[float, Fraction, StatisticsParameter]) -> float:
    if isinstance(alpha, (Fraction, StatisticsParameter)):
        return float(alpha_infinity(alpha))
    frac = Fraction(float(alpha)).limit_denominator(1000)
    if abs(float(frac) - float(alpha)) > 1e-12:
        return 0.0  # treated as irrational
    return float(alpha_infinity(frac))


def _smoothstep(x: np.ndarray) -> np.ndarray:
    t = np.clip(x, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def extended_gas_energy_shape(
    alpha: Union[float, Fraction, StatisticsParameter],
    gamma_bar: np.ndarray,
    regime_model: str,
    constants: Sequence[float] = (1.0, 1.0, 1.0, 1.0, 1.0),
) -> np.ndarray:
    """Lower-bound shape e(alpha, gamma_bar), blended across gamma_bar in [0.5, 2]."""
    c1, c2, c3, c4, c5 = (float(c) for c in constants)
    a = float(alpha.alpha) if isinstance(alpha, StatisticsParameter) else float(alpha)
    g = np.asarray(gamma_bar, dtype=float)
    s = _smoothstep((g - BLEND_LO) / (BLEND_HI - BLEND_LO))
    if regime_model == "sym_lower":
        # dilute-Bose log term frozen at the blending edge
        g_small = np.minimum(g, BLEND_LO)
        with np.errstate(divide="ignore"):
            log_term = np.where(g_small > 0, c1 / np.abs(np.log(g_small)), 0.0)
        small = log_term + c2 * _alpha_infinity_value(alpha)
        large = np.full_like(g, c3 * abs(a))
    elif regime_model == "asym_lower":
        small = np.full_like(g, c4 * float(alpha_two(a)))
        large = np.full_like(g, c5)
    else:
        raise ValueError(f"unknown regime model {regime_model!r}")
    return (1.0 - s) * small + s * large


def extended_lda_energy(
    alpha: Union[float, Fraction, StatisticsParameter],
    R: float,
    rho: RadialDensity,
    trap: TrapPotential,
    regime_model: str = "sym_lower",
    constants: Sequence[float] = (1.0, 1.0, 1.0, 1.0, 1.0),
) -> float:
    """int e(alpha, R rho^{1/2}) rho^2 + V rho with the chosen lower-bound shape."""
    if R <= 0:
        raise ValueError(f"R must be > 0, got {R}")
    if len(constants) != 5 or any(c < 0 for c in constants):
        raise ValueError("constants must be five nonnegative numbers")
    values = rho.values
    e = extended_gas_energy_shape(alpha, R * np.sqrt(values), regime_model, constants)
    V = trap(rho.grid.r)
    return rho.grid.integrate(e * values * values + V * values)


# ---------------------------------------------------------------------------
# Self-generated field and the Vlasov limit
# ---------------------------------------------------------------------------


def a_of_rho_radial(rho: RadialDensity, r: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Azimuthal self field A_phi(r) = (1/r) int_0^r 2 pi rho(s) s ds."""
    rr = np.asarray(r, dtype=float)
    if np.any(rr < 0):
        raise ValueError("r must be >= 0")
    grid = rho.grid
    flux = 2.0 * math.pi * rho.values * grid.r
    enclosed = integrate.cumulative_trapezoid(flux, grid.r, initial=0.0)
    m = np.interp(rr, grid.r, enclosed, right=enclosed[-1])
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(rr > 0, m / np.where(rr > 0, rr, 1.0), 0.0)
    return float(out) if np.ndim(r) == 0 else out


def vlasov_minimize(
    trap: TrapPotential, N: float, grid: RadialGrid, beta: Optional[float] = None
) -> TFSolution:
    """Spatial density of the semiclassical Vlasov minimizer: (lambda - V)_+ / (4 pi).

    The spatial problem does not depend on beta; the argument is accepted for symmetry with
    vlasov_momentum_density.
    """
    return tf_minimize(Fermion(), trap, N, grid)


class MomentumProfile(NamedTuple):
    p: np.ndarray
    t: np.ndarray
    mass: float


def _angular_measure(p: float, a: np.ndarray, k2: np.ndarray) -> np.ndarray:
    """Measure of theta in [0, 2pi) with p^2 + a^2 - 2 p a sin(theta) <= k2."""
    lhs = p * p + a * a - k2
    pa = 2.0 * p * a
    out = np.where(lhs <= 0, 2.0 * math.pi, 0.0)
    nz = np.abs(pa) > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(nz, lhs / np.where(nz, pa, 1.0), 0.0)
    # pa > 0: sin >= s; pa < 0: sin <= s, same measure as sin >= -s
    s = np.where(pa < 0, -s, s)
    partial = math.pi - 2.0 * np.arcsin(np.clip(s, -1.0, 1.0))
    return np.where(nz, partial, out)


def vlasov_momentum_density(beta: float, rho: RadialDensity, p_grid: RadialGrid) -> MomentumProfile:
    """Radial momentum density t(p) = (2 pi)^-2 area{x : |p + beta A(x)|^2 <= 4 pi rho(x)}.

    The angular part of the area is exact; the radial part uses the density grid. The
    result is already independent of the direction of p.
    """
    grid = rho.grid
    a = beta * np.asarray(a_of_rho_radial(rho, grid.r))
    k2 = 4.0 * math.pi * rho.values
    t = np.empty_like(p_grid.r)
    for i, p in enumerate(p_grid.r):
        # empty Fermi disks carry no area even where the inequality holds with equality
        theta = np.where(k2 > 0, _angular_measure(float(p), a, k2), 0.0)
        # theta / 2pi times the 2 pi r dr weights gives area
        t[i] = grid.integrate(theta / (2.0 * math.pi)) / (2.0 * math.pi) ** 2
    mass = p_grid.integrate(t)
    if abs(mass - rho.mass) > MOMENTUM_NORM_TOL * rho.mass:
        raise ValueError(
            f"p_grid too coarse: momentum density integrates to {mass:.6g}, expected {rho.mass:.6g}"
        )
    return MomentumProfile(p_grid.r, t, mass)
