"""
Statistics transmutation: the singular gauge phase U, Aharonov-Bohm vector potentials
(ideal point fluxes and extended disk fluxes), flux circulation along polygons, and the
dimensionless parameters of the extended anyon gas.

Points are real pairs (x, y), identified with z = x + iy. The perpendicular is the
+pi/2 rotation (x, y) -> (-y, x).
"""

import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from .errors import ConvergenceError

SINGULAR_MARGIN = 1e-9
CIRCULATION_TOL = 1e-8
MAX_SEGMENTS = 1 << 16


@dataclass(frozen=True)
class ParticleConfig:
    positions: np.ndarray

    def __post_init__(self) -> None:
        pts = np.array(self.positions, dtype=float).reshape(-1, 2)
        if pts.shape[0] < 1:
            raise ValueError("configuration needs at least one particle")
        if not np.all(np.isfinite(pts)):
            raise ValueError("positions must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "positions", pts)
        if pts.shape[0] >= 2 and self.min_separation <= 0:
            raise ValueError("particle positions must be pairwise distinct")

    @property
    def N(self) -> int:
        return int(self.positions.shape[0])

    @property
    def complex_positions(self) -> np.ndarray:
        return self.positions[:, 0] + 1j * self.positions[:, 1]

    @property
    def min_separation(self) -> float:
        z = self.complex_positions
        if z.size < 2:
            return math.inf
        d = np.abs(z[:, None] - z[None, :])
        return float(d[np.triu_indices(z.size, k=1)].min())

    def without(self, j: int) -> "ParticleConfig":
        return ParticleConfig(np.delete(self.positions, j, axis=0))


@dataclass(frozen=True)
class FluxModel:
    """Flux alpha attached to each particle; R = 0 point flux, R > 0 uniform disk of radius R."""

    alpha: float
    R: float = 0.0

    def __post_init__(self) -> None:
        if self.R < 0:
            raise ValueError(f"flux radius R must be >= 0, got {self.R}")


def perp(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def transmutation_phase(config: ParticleConfig) -> complex:
    """Product over pairs j < k of (z_j - z_k)/|z_j - z_k|."""
    if config.N < 2:
        raise ValueError("transmutation phase needs N >= 2")
    if config.min_separation <= 0:
        raise ValueError("coincident points")
    z = config.complex_positions
    j, k = np.triu_indices(z.size, k=1)
    d = z[j] - z[k]
    return complex(np.prod(d / np.abs(d)))


def _field_at(points: np.ndarray, sources: np.ndarray, R: float) -> np.ndarray:
    """Unscaled potential sum_k (x - x_k)^perp / |x - x_k|_R^2 at each point."""
    diff = points[:, None, :] - sources[None, :, :]
    dist2 = np.sum(diff * diff, axis=-1)
    if R > 0:
        dist2 = np.maximum(dist2, R * R)
    return np.sum(perp(diff) / dist2[..., None], axis=1)


def vector_potential(config: ParticleConfig, j: int, flux: FluxModel) -> np.ndarray:
    """A_j = sum_{k != j} (x_j - x_k)^perp / |x_j - x_k|_R^2, not multiplied by alpha."""
    if not 0 <= j < config.N:
        raise ValueError(f"particle index {j} out of range")
    others = np.delete(config.positions, j, axis=0)
    if others.size == 0:
        return np.zeros(2)
    if flux.R == 0:
        sep = np.linalg.norm(others - config.positions[j], axis=1)
        if np.any(sep == 0):
            raise ValueError("coincident points with ideal fluxes")
    return _field_at(config.positions[j : j + 1], others, flux.R)[0]


def _as_polygon(loop: np.ndarray) -> np.ndarray:
    poly = np.asarray(loop, dtype=float).reshape(-1, 2)
    if poly.shape[0] < 3:
        raise ValueError("a loop needs at least 3 vertices")
    if np.allclose(poly[0], poly[-1]):
        poly = poly[:-1]
    return poly


def _segment_distance(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    t = np.clip(((points - a) @ ab) / max(float(ab @ ab), 1e-300), 0.0, 1.0)
    closest = a + t[:, None] * ab
    return np.linalg.norm(points - closest, axis=1)


def points_inside(loop: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Even-odd rule for each point against the polygon."""
    poly = _as_polygon(loop)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    inside = np.zeros(pts.shape[0], dtype=bool)
    x, y = pts[:, 0], pts[:, 1]
    for a, b in zip(poly, np.roll(poly, -1, axis=0)):
        crosses = (a[1] > y) != (b[1] > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_cross = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
        inside ^= crosses & (x < x_cross)
    return inside


def enclosed_particles(config: ParticleConfig, loop: np.ndarray) -> int:
    return int(points_inside(loop, config.positions).sum())


def enclosed_flux_fraction(
    center: np.ndarray, R: float, loop: np.ndarray, n_radial: int = 200, n_angle: int = 400
) -> float:
    """Fraction of a uniform disk flux (radius R) lying inside the polygon."""
    poly = _as_polygon(loop)
    c = np.asarray(center, dtype=float)
    edges = zip(poly, np.roll(poly, -1, axis=0))
    nearest = min(float(_segment_distance(c[None, :], a, b)[0]) for a, b in edges)
    center_in = bool(points_inside(poly, c[None, :])[0])
    if R == 0 or nearest > R:
        return 1.0 if center_in else 0.0
    # midpoint polar quadrature, area weights r dr dtheta
    r = (np.arange(n_radial) + 0.5) * R / n_radial
    th = (np.arange(n_angle) + 0.5) * 2.0 * math.pi / n_angle
    rr, tt = np.meshgrid(r, th, indexing="ij")
    pts = np.stack([c[0] + rr * np.cos(tt), c[1] + rr * np.sin(tt)], axis=-1).reshape(-1, 2)
    weights = rr.reshape(-1)
    mask = points_inside(poly, pts)
    return float(weights[mask].sum() / weights.sum())


def _midpoint_circulation(poly: np.ndarray, sources: np.ndarray, R: float, n: int) -> float:
    total = 0.0
    t = (np.arange(n) + 0.5) / n
    for a, b in zip(poly, np.roll(poly, -1, axis=0)):
        pts = a + t[:, None] * (b - a)
        field = _field_at(pts, sources, R)
        total += float(np.sum(field @ (b - a))) / n
    return total


def circulation(
    flux: FluxModel, config: ParticleConfig, loop: np.ndarray, n_segments: int = 64
) -> float:
    """Line integral of alpha * A along the closed polygon ``loop``.

    Midpoint rule with n_segments per edge, doubled until two successive estimates differ
    by less than 1e-8.
    """
    poly = _as_polygon(loop)
    if n_segments < 1:
        raise ValueError("n_segments must be >= 1")
    if flux.R == 0:
        for a, b in zip(poly, np.roll(poly, -1, axis=0)):
            if np.any(_segment_distance(config.positions, a, b) < SINGULAR_MARGIN):
                raise ValueError("loop passes through an ideal flux")

    n = n_segments
    prev = _midpoint_circulation(poly, config.positions, flux.R, n)
    while n < MAX_SEGMENTS:
        n *= 2
        cur = _midpoint_circulation(poly, config.positions, flux.R, n)
        if abs(cur - prev) < CIRCULATION_TOL:
            return flux.alpha * cur
        prev = cur
    raise ConvergenceError(f"circulation did not settle with {n} segments per edge", result=prev)


def exchange_loop(config: ParticleConfig, j: int, k: int, n_points: int = 256) -> np.ndarray:
    """Counterclockwise circle traced by particle j around particle k (a double exchange)."""
    if j == k or not (0 <= j < config.N and 0 <= k < config.N):
        raise ValueError("exchange loop needs two distinct valid indices")
    center = config.positions[k]
    rel = config.positions[j] - center
    radius = float(np.hypot(*rel))
    start = math.atan2(rel[1], rel[0])
    th = start + 2.0 * math.pi * np.arange(n_points) / n_points
    return np.stack([center[0] + radius * np.cos(th), center[1] + radius * np.sin(th)], axis=-1)


# ---------------------------------------------------------------------------
# Gauge identity check
# ---------------------------------------------------------------------------


def _branch_phase_sum(positions: np.ndarray, reference: np.ndarray) -> float:
    """Sum over pairs of arg(z_j - z_k), continued from the reference configuration."""
    z = positions[:, 0] + 1j * positions[:, 1]
    z0 = reference[:, 0] + 1j * reference[:, 1]
    j, k = np.triu_indices(z.size, k=1)
    base = np.angle(z0[j] - z0[k])
    delta = np.angle((z[j] - z[k]) / (z0[j] - z0[k]))
    return float(np.sum(base + delta))


def gauge_identity_residual(
    alpha: float,
    config: ParticleConfig,
    j: int,
    test_field: Callable[[np.ndarray], complex],
    h: float = 1e-4,
) -> float:
    """Finite-difference residual of -i grad_j(U^alpha psi) = U^alpha (-i grad_j + alpha A_j) psi.

    ``test_field`` maps an (N, 2) array of positions to a complex value.
    """
    if not 0 <= j < config.N:
        raise ValueError(f"particle index {j} out of range")
    if h <= 0 or h >= 0.1 * config.min_separation:
        raise ValueError(f"step h={h} too large for min separation {config.min_separation}")
    ref = config.positions

    def u_alpha(pos: np.ndarray) -> complex:
        return complex(np.exp(1j * alpha * _branch_phase_sum(pos, ref)))

    def shifted(axis: int, sign: float) -> np.ndarray:
        pos = np.array(ref)
        pos[j, axis] += sign * h
        return pos

    a_j = vector_potential(config, j, FluxModel(alpha=alpha))
    u0 = u_alpha(ref)
    psi0 = complex(test_field(np.array(ref)))
    residual = np.zeros(2, dtype=complex)
    for axis in range(2):
        plus, minus = shifted(axis, 1.0), shifted(axis, -1.0)
        forward = u_alpha(plus) * test_field(plus)
        backward = u_alpha(minus) * test_field(minus)
        d_product = (forward - backward) / (2 * h)
        d_psi = (test_field(plus) - test_field(minus)) / (2 * h)
        lhs = -1j * d_product
        rhs = u0 * (-1j * d_psi + alpha * a_j[axis] * psi0)
        residual[axis] = lhs - rhs
    return float(np.linalg.norm(residual))


# ---------------------------------------------------------------------------
# Extended gas and parameter symmetries
# ---------------------------------------------------------------------------


def extended_gas_parameters(
    alpha: float, R: float, mean_density: float
) -> Tuple[float, float, float]:
    """(gamma_bar, W_height, strength) = (R sqrt(rho), 2|alpha|/R^2, |alpha|/gamma_bar^2)."""
    if R <= 0:
        raise ValueError(f"R must be > 0, got {R}")
    if mean_density <= 0:
        raise ValueError(f"mean_density must be > 0, got {mean_density}")
    gamma_bar = R * math.sqrt(mean_density)
    return gamma_bar, 2.0 * abs(alpha) / R**2, abs(alpha) / gamma_bar**2


def canonical_alpha(alpha: float) -> float:
    """Representative of alpha + 2Z in (-1, 1]."""
    return alpha - 2.0 * math.ceil((alpha - 1.0) / 2.0)


def conjugation_flag(alpha: float) -> bool:
    """True when the canonical alpha is negative, i.e. it is the conjugate of -alpha in [0, 1)."""
    return canonical_alpha(alpha) < 0

