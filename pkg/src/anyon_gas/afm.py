"""
Almost-bosonic average-field functional on a square grid.

E[psi] = int |(-i grad + beta A[|psi|^2]) psi|^2 + V |psi|^2, with the self-generated
potential A[rho](x) = int (x - y)^perp / |x - y|^2 rho(y) dy.

Discretization: cell-centred nodes, Peierls phases on nearest-neighbour links (the link
phase is beta*h times the mean of A at its two ends), open boundary. The self field is a
zero-padded FFT convolution with the analytic kernel, the singular cell set to zero.
"""

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import fft, ndimage, optimize, spatial
from tqdm import tqdm

from .dft import RadialGrid, TrapPotential, tf_closed_form, tf_density_at, tf_minimize
from .errors import ConvergenceError

MASS_TOL = 1e-10
PLATEAU_WINDOW = 50
LINE_SEARCH_HALVINGS = 40
ARMIJO = 1e-4


@dataclass(frozen=True)
class Grid2D:
    """Square of side L centred at the origin, n cell-centred nodes per side."""

    L: float
    n: int

    def __post_init__(self) -> None:
        if self.L <= 0:
            raise ValueError(f"grid extent L must be > 0, got {self.L}")
        if self.n < 64 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 64, got {self.n}")

    @property
    def h(self) -> float:
        return self.L / self.n

    @property
    def axis(self) -> np.ndarray:
        return -0.5 * self.L + (np.arange(self.n) + 0.5) * self.h

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.axis, self.axis, indexing="ij")

    def radius(self) -> np.ndarray:
        X, Y = self.mesh()
        return np.hypot(X, Y)


@dataclass(frozen=True)
class WaveField2D:
    grid: Grid2D
    values: np.ndarray

    def __post_init__(self) -> None:
        psi = np.array(self.values, dtype=complex)
        if psi.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"field shape {psi.shape} does not match the grid")
        if abs(_mass(psi, self.grid.h) - 1.0) > MASS_TOL:
            raise ValueError("wave field must have unit mass")
        psi.setflags(write=False)
        object.__setattr__(self, "values", psi)

    @classmethod
    def normalized(cls, grid: Grid2D, values: np.ndarray) -> "WaveField2D":
        psi = np.asarray(values, dtype=complex)
        m = _mass(psi, grid.h)
        if not m > 0:
            raise ValueError("cannot normalize a zero field")
        return cls(grid, psi / math.sqrt(m))

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    @property
    def mass(self) -> float:
        return _mass(self.values, self.grid.h)


@dataclass(frozen=True)
class MinimizerConfig:
    step: float = 0.5
    max_iters: int = 5000
    energy_tol: float = 1e-8
    seed: int = 0
    beta: float = 0.0
    refresh_every: int = 1
    grad_tol: float = 1e-4
    precond_shift: Optional[float] = None
    plateau_window: int = PLATEAU_WINDOW
    log_every: int = 10
    verbose: bool = False

    def __post_init__(self) -> None:
        # preconditioned kinetic eigenvalues k^2/(k^2 + shift) are below 1
        if not 0 < self.step < 1:
            raise ValueError(f"step must lie in (0, 1) for a stable flow, got {self.step}")
        if self.max_iters < 1 or self.refresh_every < 1 or self.plateau_window < 1:
            raise ValueError("max_iters, refresh_every and plateau_window must be >= 1")
        if self.energy_tol <= 0 or self.grad_tol <= 0:
            raise ValueError("energy_tol and grad_tol must be > 0")
        if self.precond_shift is not None and self.precond_shift <= 0:
            raise ValueError("precond_shift must be > 0")


class AFEnergy(NamedTuple):
    total: float
    kinetic: float
    potential: float
    modulus: float
    phase: float


class AFResult(NamedTuple):
    wave: WaveField2D
    energy: float
    iterations: int
    history: List[float]
    # relative projected gradient norm at the returned state
    gradient_norm: float = math.nan


@dataclass(frozen=True)
class VortexReport:
    vortices: Tuple[Tuple[Tuple[float, float], int], ...]
    total_winding: int = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "total_winding", int(sum(w for _, w in self.vortices)))

    @property
    def positions(self) -> np.ndarray:
        return np.array([p for p, _ in self.vortices], dtype=float).reshape(-1, 2)


def _mass(psi: np.ndarray, h: float) -> float:
    return float(h * h * np.sum(np.abs(psi) ** 2))


# ---------------------------------------------------------------------------
# Self-generated field
# ---------------------------------------------------------------------------


@lru_cache(maxsize=8)
def _kernel(n: int, h: float) -> Tuple[np.ndarray, np.ndarray]:
    m = np.arange(-(n - 1), n) * h
    dx, dy = np.meshgrid(m, m, indexing="ij")
    r2 = dx * dx + dy * dy
    r2[n - 1, n - 1] = 1.0
    kx, ky = -dy / r2, dx / r2
    kx[n - 1, n - 1] = 0.0
    ky[n - 1, n - 1] = 0.0
    return kx, ky


@lru_cache(maxsize=8)
def _kernel_spectrum(n: int, h: float) -> Tuple[int, np.ndarray, np.ndarray]:
    # linear convolution of an n-grid with a (2n-1)-kernel needs 3n-2 points per side
    size = fft.next_fast_len(3 * n - 2, real=True)
    kx, ky = _kernel(n, h)
    return size, fft.rfft2(kx, s=(size, size)), fft.rfft2(ky, s=(size, size))


def _convolve(f: np.ndarray, grid: Grid2D) -> Tuple[np.ndarray, np.ndarray]:
    """h^2 sum_y K(x - y) f(y) for both kernel components; f is real."""
    n = grid.n
    size, sx, sy = _kernel_spectrum(n, grid.h)
    spec = fft.rfft2(f, s=(size, size))
    window = (slice(n - 1, 2 * n - 1), slice(n - 1, 2 * n - 1))
    h2 = grid.h * grid.h
    return (
        h2 * fft.irfft2(spec * sx, s=(size, size))[window],
        h2 * fft.irfft2(spec * sy, s=(size, size))[window],
    )


def self_field(rho: np.ndarray, grid: Grid2D) -> Tuple[np.ndarray, np.ndarray]:
    """A[rho] on the grid nodes as (A_x, A_y)."""
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (grid.n, grid.n):
        raise ValueError("density shape does not match the grid")
    if np.any(rho < 0):
        raise ValueError("density must be nonnegative")
    total = grid.h * grid.h * float(rho.sum())
    if abs(total - 1.0) > 1e-8:
        raise ValueError(f"density must have unit mass, got {total}")
    return _convolve(rho, grid)


# ---------------------------------------------------------------------------
# Energy and gradient
# ---------------------------------------------------------------------------


def _link_phases(
    ax: np.ndarray, ay: np.ndarray, beta: float, h: float
) -> Tuple[np.ndarray, np.ndarray]:
    tx = 0.5 * beta * h * (ax[:-1, :] + ax[1:, :])
    ty = 0.5 * beta * h * (ay[:, :-1] + ay[:, 1:])
    return tx, ty


def _link_differences(
    psi: np.ndarray, tx: np.ndarray, ty: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    wx = np.exp(1j * tx) * psi[1:, :] - psi[:-1, :]
    wy = np.exp(1j * ty) * psi[:, 1:] - psi[:, :-1]
    return wx, wy


def _field_of(psi: np.ndarray, grid: Grid2D, beta: float) -> Tuple[np.ndarray, np.ndarray]:
    if beta == 0:
        zero = np.zeros((grid.n, grid.n))
        return zero, zero
    return _convolve(np.abs(psi) ** 2, grid)


def _energy_terms(
    psi: np.ndarray, grid: Grid2D, beta: float, V: np.ndarray
) -> Tuple[float, float, np.ndarray, np.ndarray]:
    ax, ay = _field_of(psi, grid, beta)
    tx, ty = _link_phases(ax, ay, beta, grid.h)
    wx, wy = _link_differences(psi, tx, ty)
    kinetic = float(np.sum(np.abs(wx) ** 2) + np.sum(np.abs(wy) ** 2))
    potential = float(grid.h * grid.h * np.sum(V * np.abs(psi) ** 2))
    return kinetic, potential, ax, ay


def af_functional(values: np.ndarray, grid: Grid2D, beta: float, trap: TrapPotential) -> float:
    """Discrete functional on raw node values (no mass constraint)."""
    psi = np.asarray(values, dtype=complex)
    kinetic, potential, _, _ = _energy_terms(psi, grid, beta, trap(grid.radius()))
    return kinetic + potential


def af_energy(psi: WaveField2D, beta: float, trap: TrapPotential) -> AFEnergy:
    """Energy with its kinetic/potential split and the modulus/phase split of the kinetic part."""
    grid = psi.grid
    kinetic, potential, _, _ = _energy_terms(psi.values, grid, beta, trap(grid.radius()))
    mod = np.abs(psi.values)
    modulus = float(np.sum(np.diff(mod, axis=0) ** 2) + np.sum(np.diff(mod, axis=1) ** 2))
    return AFEnergy(kinetic + potential, kinetic, potential, modulus, kinetic - modulus)


def _gradient_parts(
    psi: np.ndarray, grid: Grid2D, beta: float, ax: np.ndarray, ay: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Direct link gradient d/dconj(psi) at fixed A, and the back-reaction potential dE/drho."""
    h = grid.h
    tx, ty = _link_phases(ax, ay, beta, h)
    ux, uy = np.exp(1j * tx), np.exp(1j * ty)
    wx = ux * psi[1:, :] - psi[:-1, :]
    wy = uy * psi[:, 1:] - psi[:, :-1]

    g = np.zeros_like(psi)
    g[:-1, :] -= wx
    g[1:, :] += np.conj(ux) * wx
    g[:, :-1] -= wy
    g[:, 1:] += np.conj(uy) * wy

    if beta == 0:
        return g, np.zeros(psi.shape)
    # dE/dtheta on each link, spread to the two end nodes of A
    jx = 2.0 * np.imag(np.conj(psi[:-1, :]) * ux * psi[1:, :])
    jy = 2.0 * np.imag(np.conj(psi[:, :-1]) * uy * psi[:, 1:])
    gx = np.zeros(psi.shape)
    gy = np.zeros(psi.shape)
    half = 0.5 * beta * h
    gx[:-1, :] += half * jx
    gx[1:, :] += half * jx
    gy[:, :-1] += half * jy
    gy[:, 1:] += half * jy
    # kernel is odd: the adjoint of the convolution is minus the convolution
    cx, _ = _convolve(gx, grid)
    _, cy = _convolve(gy, grid)
    return g, -(cx + cy)


def af_gradient(psi: WaveField2D, beta: float, trap: TrapPotential) -> np.ndarray:
    """Exact Wirtinger gradient dE/dconj(psi_node) of af_functional, self field included."""
    return _full_gradient(np.asarray(psi.values), psi.grid, beta, trap(psi.grid.radius()))


def _full_gradient(psi: np.ndarray, grid: Grid2D, beta: float, V: np.ndarray) -> np.ndarray:
    ax, ay = _field_of(psi, grid, beta)
    direct, w = _gradient_parts(psi, grid, beta, ax, ay)
    return direct + (w + grid.h * grid.h * V) * psi


# ---------------------------------------------------------------------------
# Minimizer
# ---------------------------------------------------------------------------


def _initial_field(grid: Grid2D, beta: float, rng: np.random.Generator) -> np.ndarray:
    """Gaussian modulus, smooth random phase and round(|beta|) seeded vortices."""
    X, Y = grid.mesh()
    width = (1.0 + abs(beta)) ** 0.25
    modulus = np.exp(-(X * X + Y * Y) / (2.0 * width * width))
    noise = ndimage.gaussian_filter(rng.normal(size=(grid.n, grid.n)), sigma=grid.n / 16)
    noise *= math.pi / max(float(np.abs(noise).max()), 1e-300)
    psi = modulus * np.exp(1j * noise)
    n_seeds = int(round(abs(beta)))
    if n_seeds:
        orientation = -1.0 if beta > 0 else 1.0
        radii = width * np.sqrt(rng.uniform(0.0, 1.0, n_seeds))
        angles = rng.uniform(0.0, 2.0 * math.pi, n_seeds)
        Z = X + 1j * Y
        for r, a in zip(radii, angles):
            d = Z - r * np.exp(1j * a)
            phase = d / np.where(np.abs(d) > 0, np.abs(d), 1.0)
            psi = psi * (phase if orientation > 0 else np.conj(phase))
    return psi


class AverageFieldMinimizer:
    """
    Preconditioned projected gradient descent for the average-field functional.

    - Preconditioner (-Laplacian_h + shift)^-1 applied in Fourier space.
    - Descent direction projected onto the unit-mass sphere in the preconditioned metric.
    - Armijo backtracking line search on the exact energy.
    - The self-field back-reaction in the gradient is refreshed every ``refresh_every`` steps.
    - A failed search restarts from the exact gradient at the full step, then from plain
      steepest descent; if that fails too the state must pass the grad_tol test.
    """

    def __init__(
        self,
        trap: TrapPotential,
        grid: Grid2D,
        cfg: MinimizerConfig,
        initial: Optional[WaveField2D] = None,
    ):
        self.trap = trap
        self.grid = grid
        self.cfg = cfg
        self.beta = cfg.beta
        self.rng = np.random.default_rng(cfg.seed)
        self.V = trap(grid.radius())
        if initial is not None:
            if initial.grid != grid:
                raise ValueError("initial field lives on a different grid")
            psi = np.array(initial.values)
        else:
            psi = _initial_field(grid, self.beta, self.rng)
        self.psi = WaveField2D.normalized(grid, psi).values.copy()
        self.energy = self._energy(self.psi)
        self.history: List[float] = [self.energy]
        self.iteration = 0
        self.restarts = 0
        self._t = cfg.step
        self._stationary = False
        self._cached: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = None

        k = 2.0 * math.pi * fft.fftfreq(grid.n, d=grid.h)
        kx, ky = np.meshgrid(k, k, indexing="ij")
        h = grid.h
        lap = (4.0 / (h * h)) * (np.sin(0.5 * kx * h) ** 2 + np.sin(0.5 * ky * h) ** 2)
        shift = cfg.precond_shift if cfg.precond_shift is not None else max(self.energy, 1.0)
        self._precond = 1.0 / (lap + shift)

    def _energy(self, psi: np.ndarray) -> float:
        kinetic, potential, _, _ = _energy_terms(psi, self.grid, self.beta, self.V)
        return kinetic + potential

    def _normalize(self, psi: np.ndarray) -> np.ndarray:
        return psi / math.sqrt(_mass(psi, self.grid.h))

    def _gradient(self, psi: np.ndarray, refresh: bool) -> np.ndarray:
        """L2 gradient (Wirtinger gradient over h^2); cached back-reaction unless refresh."""
        if refresh or self._cached is None:
            ax, ay = _field_of(psi, self.grid, self.beta)
            _, w = _gradient_parts(psi, self.grid, self.beta, ax, ay)
            self._cached = (ax, ay, w)
        ax, ay, w = self._cached
        direct, _ = _gradient_parts(psi, self.grid, self.beta, ax, ay)
        return (direct + (w + self.grid.h**2 * self.V) * psi) / self.grid.h**2

    def _apply_precond(self, f: np.ndarray) -> np.ndarray:
        return fft.ifft2(self._precond * fft.fft2(f))

    def _inner(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(self.grid.h**2 * np.real(np.vdot(a, b)))

    def _direction(self, g: np.ndarray, precondition: bool = True) -> np.ndarray:
        """-(P g - mu P psi), tangent to the unit-mass sphere; P = 1 without precondition."""
        psi = self.psi
        if precondition:
            pg, ppsi = self._apply_precond(g), self._apply_precond(psi)
        else:
            pg, ppsi = g, psi
        mu = self._inner(psi, pg) / self._inner(psi, ppsi)
        return -(pg - mu * ppsi)

    def _line_search(
        self, g: np.ndarray, d: np.ndarray, t: float
    ) -> Optional[Tuple[np.ndarray, float, float]]:
        slope = 2.0 * self._inner(g, d)
        if not slope < 0:
            return None
        e0 = self.energy
        for _ in range(LINE_SEARCH_HALVINGS):
            trial = self._normalize(self.psi + t * d)
            e1 = self._energy(trial)
            if not math.isfinite(e1):
                raise ConvergenceError("average-field energy diverged", result=self.result())
            if e1 <= e0 + ARMIJO * t * slope:
                return trial, e1, t
            t *= 0.5
        return None

    def gradient_norm(self) -> float:
        """
        Projected gradient norm of the exact gradient in the preconditioned metric, relative
        to max(|E|, 1). Zero exactly at critical points of E on the unit-mass sphere.
        """
        g = self._gradient(self.psi, refresh=True)
        d = self._direction(g)
        return math.sqrt(max(-self._inner(g, d), 0.0) / max(abs(self.energy), 1.0))

    def step(self) -> Dict[str, float]:
        """One accepted descent step, or a verified stationary point. Returns stats dict."""
        cfg = self.cfg
        fresh = self._cached is None or self.iteration % cfg.refresh_every == 0
        g = self._gradient(self.psi, refresh=fresh)
        found = self._line_search(g, self._direction(g), self._t)
        restarts = 0
        if found is None and not fresh:
            # stale back-reaction: exact gradient, full step
            g = self._gradient(self.psi, refresh=True)
            found = self._line_search(g, self._direction(g), cfg.step)
            restarts += 1
        if found is None:
            found = self._line_search(g, self._direction(g, precondition=False), cfg.step)
            restarts += 1
        self.restarts += restarts

        self.iteration += 1
        if found is None:
            norm = self.gradient_norm()
            if norm > cfg.grad_tol:
                raise ConvergenceError(
                    f"line search failed at iteration {self.iteration} with projected gradient "
                    f"norm {norm:.3e} > grad_tol={cfg.grad_tol:g}",
                    result=self.result(),
                )
            self._stationary = True
            t = 0.0
        else:
            self.psi, self.energy, t = found
            self._t = min(2.0 * t, cfg.step)
        self.history.append(self.energy)
        return {
            "iteration": self.iteration,
            "energy": self.energy,
            "step": t,
            "accepted": found is not None,
            "restarts": restarts,
        }

    def is_converged(self) -> bool:
        """Relative energy drop over the plateau window below energy_tol, or a stationary state."""
        if self._stationary:
            return True
        w = self.cfg.plateau_window
        if len(self.history) <= w:
            return False
        drop = self.history[-w - 1] - self.history[-1]
        return drop <= self.cfg.energy_tol * max(abs(self.history[-1]), 1e-300)

    def result(self) -> AFResult:
        field_ = WaveField2D.normalized(self.grid, self.psi)
        return AFResult(
            field_, self.energy, self.iteration, list(self.history), self.gradient_norm()
        )

    def run(self) -> AFResult:
        cfg = self.cfg
        if cfg.verbose:
            print(f"🚀 average-field minimizer: beta={self.beta:g} n={self.grid.n}")
        for _ in tqdm(range(cfg.max_iters), desc="af minimize", disable=not cfg.verbose):
            stats = self.step()
            if cfg.verbose and stats["restarts"]:
                print(f"[dbg] iter={stats['iteration']} line search restarted")
            if cfg.verbose and stats["iteration"] % cfg.log_every == 0:
                it, energy = stats["iteration"], stats["energy"]
                print(f"[dbg] iter={it} energy={energy:.12g} step={stats['step']:.3g}")
            if self.is_converged():
                res = self.result()
                if self._stationary and cfg.verbose:
                    print("⚠️ no descent step left; gradient norm below grad_tol")
                if cfg.verbose:
                    print(
                        f"🏁 converged after {self.iteration} iterations: {self.energy:.12g}"
                        f" (gradient norm {res.gradient_norm:.2e})"
                    )
                return res
        if cfg.verbose:
            print(f"❌ no energy plateau after {cfg.max_iters} iterations")
        raise ConvergenceError(f"max_iters={cfg.max_iters} exceeded", result=self.result())


def minimize_af(
    beta: float,
    trap: TrapPotential,
    grid: Grid2D,
    cfg: Optional[MinimizerConfig] = None,
    initial: Optional[WaveField2D] = None,
) -> AFResult:
    """Minimize the average-field functional at unit mass; ``beta`` overrides cfg.beta."""
    cfg = replace(cfg or MinimizerConfig(), beta=beta)
    return AverageFieldMinimizer(trap, grid, cfg, initial=initial).run()


# ---------------------------------------------------------------------------
# Vortices and profiles
# ---------------------------------------------------------------------------


def detect_vortices(
    psi: WaveField2D, density_floor: float = 0.05, smoothing: float = 2.0
) -> VortexReport:
    """Plaquette windings of the phase where all four corners carry enough density.

    The density mask uses the density smoothed with a Gaussian of ``smoothing`` cells
    (0 keeps the raw corner values). Positions are plaquette centres.
    """
    values = psi.values
    rho = psi.density
    if smoothing > 0:
        rho = ndimage.gaussian_filter(rho, sigma=smoothing)
    floor = density_floor * float(rho.max())
    ok = (
        (rho[:-1, :-1] > floor)
        & (rho[1:, :-1] > floor)
        & (rho[1:, 1:] > floor)
        & (rho[:-1, 1:] > floor)
    )

    def dphase(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.angle(b * np.conj(a))

    # counterclockwise: (i,j) -> (i+1,j) -> (i+1,j+1) -> (i,j+1)
    c00, c10, c11, c01 = values[:-1, :-1], values[1:, :-1], values[1:, 1:], values[:-1, 1:]
    total = dphase(c00, c10) + dphase(c10, c11) + dphase(c11, c01) + dphase(c01, c00)
    winding = np.rint(total / (2.0 * math.pi)).astype(int)
    winding[~ok] = 0

    axis = psi.grid.axis
    mid = axis[:-1] + 0.5 * psi.grid.h
    found = []
    for i, j in zip(*np.nonzero(winding)):
        found.append(((float(mid[i]), float(mid[j])), int(winding[i, j])))
    return VortexReport(tuple(found))


def vortex_lattice_metrics(report: VortexReport) -> Dict[str, float]:
    """Nearest-neighbour distance statistics and hexatic order |psi_6| of the vortex positions."""
    pts = report.positions
    count = pts.shape[0]
    if count < 2:
        return {"count": float(count), "nn_mean": math.nan, "nn_std": math.nan, "hexatic": math.nan}
    tree = spatial.cKDTree(pts)
    k = min(7, count)
    dist, idx = tree.query(pts, k=k)
    nn = dist[:, 1]
    psi6 = []
    for i in range(count):
        rel = pts[idx[i, 1:]] - pts[i]
        psi6.append(np.mean(np.exp(6j * np.arctan2(rel[:, 1], rel[:, 0]))))
    return {
        "count": float(count),
        "nn_mean": float(nn.mean()),
        "nn_std": float(nn.std()),
        "hexatic": float(np.mean(np.abs(psi6))),
    }


class ProfileComparison(NamedTuple):
    l1_error: float
    r: np.ndarray
    numeric: np.ndarray
    reference: np.ndarray


def angular_average(psi: WaveField2D) -> Tuple[np.ndarray, np.ndarray]:
    """Density averaged over rings of width h out to L/2."""
    grid = psi.grid
    r = grid.radius()
    bins = np.floor(r / grid.h).astype(int)
    n_bins = grid.n // 2
    inside = bins < n_bins
    sums = np.bincount(bins[inside], weights=psi.density[inside], minlength=n_bins)
    counts = np.bincount(bins[inside], minlength=n_bins)
    centres = (np.arange(n_bins) + 0.5) * grid.h
    with np.errstate(invalid="ignore", divide="ignore"):
        avg = np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)
    return centres, avg


def profile_l1_error(r: np.ndarray, numeric: np.ndarray, reference: np.ndarray) -> float:
    """Relative L1 distance of two radial profiles with 2 pi r weights."""
    w = 2.0 * math.pi * np.asarray(r)
    denom = float(np.sum(w * np.abs(reference)))
    if denom == 0:
        raise ValueError("reference profile is identically zero")
    return float(np.sum(w * np.abs(np.asarray(numeric) - np.asarray(reference))) / denom)


def atf_energy(c: float, trap: TrapPotential, mass: float = 1.0) -> Tuple[float, float]:
    """(energy, chemical potential) of the quadratic TF problem, closed form when available."""
    closed = tf_closed_form(c, trap, mass)
    if closed is not None:
        return closed
    r_max = 4.0
    for _ in range(12):
        try:
            sol = tf_minimize(c, trap, mass, RadialGrid.uniform(r_max, 4096))
            return sol.energy, sol.chemical_potential
        except ValueError:
            r_max *= 2.0
    raise ConvergenceError("TF support does not fit on any tried radial grid")


def radial_profile_compare(
    psi: WaveField2D, beta: float, trap: TrapPotential, C: float
) -> ProfileComparison:
    """Angular average of |psi|^2 against the aTF minimizer with coefficient C|beta| and mass 1."""
    if beta == 0:
        raise ValueError("profile comparison needs beta != 0")
    if C <= 0:
        raise ValueError(f"C must be > 0, got {C}")
    c = C * abs(beta)
    _, lam = atf_energy(c, trap)
    r, numeric = angular_average(psi)
    reference = tf_density_at(c, trap, lam, r)
    return ProfileComparison(profile_l1_error(r, numeric, reference), r, numeric, reference)


class CATFEstimate(NamedTuple):
    c_atf: float
    residual: float


def estimate_c_atf(results: Sequence[Tuple[float, float, TrapPotential]]) -> CATFEstimate:
    """Least-squares fit of minimal energies E(beta) to the aTF energy with coefficient C|beta|.

    For homogeneous traps of degree k the aTF energy scales as c^{k/(k+2)} and the fit is
    linear in C^{k/(k+2)}; otherwise C is found by a bounded scalar search.
    Residual is the RMS relative misfit.
    """
    if len({abs(b) for b, _, _ in results}) < 2 or any(b == 0 for b, _, _ in results):
        raise ValueError("need at least two distinct nonzero |beta| values")
    betas = np.array([abs(b) for b, _, _ in results])
    energies = np.array([e for _, e, _ in results])
    traps = [t for _, _, t in results]
    degrees = {t.degree for t in traps}

    def model(C: float) -> np.ndarray:
        return np.array([atf_energy(C * b, t)[0] for b, t in zip(betas, traps)])

    if None not in degrees and len(degrees) == 1:
        k = float(next(iter(degrees)))
        p = k / (k + 2.0)
        unit = np.array([atf_energy(b, t)[0] for b, t in zip(betas, traps)])
        x = float(np.dot(unit, energies) / np.dot(unit, unit))
        if not x > 0:
            raise ValueError("degenerate fit: nonpositive scale")
        C = x ** (1.0 / p)
    else:
        res = optimize.minimize_scalar(
            lambda logc: float(np.sum((model(math.exp(logc)) - energies) ** 2)),
            bounds=(math.log(1e-3), math.log(1e3)),
            method="bounded",
            options={"xatol": 1e-10},
        )
        C = math.exp(res.x)
    misfit = (model(C) - energies) / energies
    return CATFEstimate(C, float(np.sqrt(np.mean(misfit**2))))
