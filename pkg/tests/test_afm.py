import math
import os
import sys

import numpy as np
import pytest
from scipy import sparse
from scipy.sparse.linalg import eigsh

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from anyon_gas import afm
from anyon_gas.afm import (
    AverageFieldMinimizer,
    Grid2D,
    MinimizerConfig,
    WaveField2D,
    af_energy,
    af_functional,
    af_gradient,
    atf_energy,
    detect_vortices,
    estimate_c_atf,
    minimize_af,
    radial_profile_compare,
    self_field,
    vortex_lattice_metrics,
)
from anyon_gas.dft import C_ATF_ESTIMATE, TrapPotential, tf_density_at
from anyon_gas.errors import ConvergenceError


def _gaussian(grid, width=1.0):
    X, Y = grid.mesh()
    return WaveField2D.normalized(grid, np.exp(-(X * X + Y * Y) / (2.0 * width * width)))


def _random_field(grid, seed=3):
    rng = np.random.default_rng(seed)
    X, Y = grid.mesh()
    envelope = np.exp(-(X * X + Y * Y) / 4.0)
    noise = rng.normal(size=X.shape) + 1j * rng.normal(size=X.shape)
    return WaveField2D.normalized(grid, envelope * (1.0 + 0.3 * noise))


def _discrete_ground_state(grid, trap):
    """Lowest eigenpair of the beta = 0 grid Hamiltonian (open-boundary link Laplacian + V)."""
    n, h = grid.n, grid.h
    edge = np.full(n, 2.0)
    edge[[0, -1]] = 1.0
    path = sparse.diags([-np.ones(n - 1), edge, -np.ones(n - 1)], [-1, 0, 1])
    eye = sparse.identity(n)
    H = (sparse.kron(path, eye) + sparse.kron(eye, path)) / (h * h)
    H = H + sparse.diags(trap(grid.radius()).ravel())
    vals, vecs = eigsh(H.tocsc(), k=1, sigma=0.0)
    return float(vals[0]), WaveField2D.normalized(grid, vecs[:, 0].reshape(n, n))


def test_grid_and_config_validation():
    with pytest.raises(ValueError):
        Grid2D(10.0, 100)
    with pytest.raises(ValueError):
        Grid2D(0.0, 64)
    with pytest.raises(ValueError):
        MinimizerConfig(step=1.0)
    with pytest.raises(ValueError):
        MinimizerConfig(energy_tol=0.0)
    with pytest.raises(ValueError):
        MinimizerConfig(grad_tol=0.0)
    assert MinimizerConfig().refresh_every == 1


def test_wave_field_needs_unit_mass():
    grid = Grid2D(8.0, 64)
    with pytest.raises(ValueError):
        WaveField2D(grid, np.ones((64, 64)))
    with pytest.raises(ValueError):
        WaveField2D.normalized(grid, np.zeros((64, 64)))
    assert _gaussian(grid).mass == pytest.approx(1.0, abs=1e-12)


def test_gradient_matches_finite_differences():
    """Real and imaginary node perturbations against the exact Wirtinger gradient."""
    grid = Grid2D(6.0, 64)
    trap = TrapPotential.harmonic(2.0)
    beta = 2.0
    psi = _random_field(grid)
    g = af_gradient(psi, beta, trap)
    eps = 1e-6
    for node in [(32, 32), (20, 41), (45, 17), (31, 33)]:
        for direction, part in ((1.0, np.real), (1j, np.imag)):
            plus = np.array(psi.values)
            minus = np.array(psi.values)
            plus[node] += eps * direction
            minus[node] -= eps * direction
            numeric = (
                af_functional(plus, grid, beta, trap) - af_functional(minus, grid, beta, trap)
            ) / (2.0 * eps)
            assert numeric == pytest.approx(2.0 * part(g[node]), rel=1e-5, abs=1e-8)


def test_gaussian_energy_without_field():
    """The harmonic ground state of -Laplacian + r^2 has energy 2."""
    grid = Grid2D(10.0, 128)
    parts = af_energy(_gaussian(grid), 0.0, TrapPotential.harmonic(2.0))
    assert parts.total == pytest.approx(2.0, rel=5e-3)
    assert parts.kinetic == pytest.approx(1.0, rel=5e-3)
    assert parts.potential == pytest.approx(1.0, rel=5e-3)
    assert parts.phase == pytest.approx(0.0, abs=1e-12)


def test_energy_symmetries():
    grid = Grid2D(6.0, 64)
    trap = TrapPotential.harmonic(2.0)
    psi = _random_field(grid)
    base = af_energy(psi, 3.0, trap).total
    rotated = WaveField2D(grid, psi.values * np.exp(0.7j))
    assert af_energy(rotated, 3.0, trap).total == pytest.approx(base, rel=1e-12)
    conjugate = WaveField2D(grid, np.conj(psi.values))
    assert af_energy(conjugate, -3.0, trap).total == pytest.approx(base, rel=1e-12)


def test_self_field_of_gaussian():
    """For rho = exp(-r^2)/pi the field is x^perp (1 - exp(-r^2)) / r^2."""
    grid = Grid2D(10.0, 128)
    X, Y = grid.mesh()
    r2 = X * X + Y * Y
    rho = np.exp(-r2)
    rho /= grid.h**2 * rho.sum()
    ax, ay = self_field(rho, grid)
    ring = (r2 > 0.25) & (r2 < 9.0)
    enclosed = 1.0 - np.exp(-r2[ring])
    assert np.max(np.abs(ax[ring] - (-Y[ring]) * enclosed / r2[ring])) < 1e-2
    assert np.max(np.abs(ay[ring] - X[ring] * enclosed / r2[ring])) < 1e-2
    with pytest.raises(ValueError):
        self_field(2.0 * rho, grid)


def test_minimizer_without_field_reaches_ground_state():
    grid = Grid2D(8.0, 64)
    trap = TrapPotential.harmonic(2.0)
    res = minimize_af(0.0, trap, grid, MinimizerConfig(seed=1))
    assert res.energy == pytest.approx(2.0, rel=2e-2)
    assert res.energy <= af_energy(_gaussian(grid), 0.0, trap).total + 1e-6
    assert all(b <= a for a, b in zip(res.history, res.history[1:]))
    assert res.wave.mass == pytest.approx(1.0, abs=1e-10)


def test_minimizer_reports_partial_result():
    grid = Grid2D(8.0, 64)
    with pytest.raises(ConvergenceError) as info:
        minimize_af(0.0, TrapPotential.harmonic(2.0), grid, MinimizerConfig(max_iters=1))
    assert info.value.result.iterations == 1


def test_minimizer_reaches_discrete_ground_state():
    grid = Grid2D(8.0, 64)
    trap = TrapPotential.harmonic(2.0)
    e0, _ = _discrete_ground_state(grid, trap)
    res = minimize_af(0.0, trap, grid, MinimizerConfig(seed=2))
    assert res.energy == pytest.approx(e0, rel=1e-4)
    assert res.energy >= e0 - 1e-9
    assert 0.0 <= res.gradient_norm < 1e-3


def test_exact_ground_state_is_stationary():
    grid = Grid2D(8.0, 64)
    trap = TrapPotential.harmonic(2.0)
    e0, psi = _discrete_ground_state(grid, trap)
    assert af_energy(psi, 0.0, trap).total == pytest.approx(e0, rel=1e-10)
    minimizer = AverageFieldMinimizer(trap, grid, MinimizerConfig(), initial=psi)
    assert minimizer.gradient_norm() < 1e-6
    res = minimizer.run()
    assert res.energy == pytest.approx(e0, rel=1e-10)
    assert res.gradient_norm < 1e-6


def test_failed_search_accepts_only_stationary_states(monkeypatch):
    grid = Grid2D(8.0, 64)
    trap = TrapPotential.harmonic(2.0)
    monkeypatch.setattr(afm, "LINE_SEARCH_HALVINGS", 0)

    _, psi = _discrete_ground_state(grid, trap)
    res = minimize_af(0.0, trap, grid, MinimizerConfig(), initial=psi)
    assert res.iterations == 1
    assert res.gradient_norm < 1e-6

    start = _random_field(grid)
    with pytest.raises(ConvergenceError) as info:
        minimize_af(0.0, trap, grid, MinimizerConfig(), initial=start)
    partial = info.value.result
    assert partial.iterations == 1
    assert partial.gradient_norm > MinimizerConfig().grad_tol
    assert partial.energy == pytest.approx(af_energy(start, 0.0, trap).total)


def test_stale_back_reaction_keeps_energy_monotone():
    grid = Grid2D(8.0, 64)
    trap = TrapPotential.harmonic(2.0)
    cfg = MinimizerConfig(beta=2.0, refresh_every=7, seed=4)
    minimizer = AverageFieldMinimizer(trap, grid, cfg)
    start = minimizer.gradient_norm()
    for _ in range(30):
        stats = minimizer.step()
        assert stats["accepted"]
    history = minimizer.history
    assert all(b <= a for a, b in zip(history, history[1:]))
    assert history[-1] < history[0]
    assert minimizer.gradient_norm() < start


def test_detect_vortices_on_synthetic_phase():
    grid = Grid2D(10.0, 64)
    X, Y = grid.mesh()
    Z = X + 1j * Y
    z_plus, z_minus, z_far = 0.53 - 0.71j, -1.37 + 0.92j, 4.5 + 0.1j
    phase = (Z - z_plus) / np.abs(Z - z_plus)
    phase *= np.conj(Z - z_minus) / np.abs(Z - z_minus)
    phase *= (Z - z_far) / np.abs(Z - z_far)
    psi = WaveField2D.normalized(grid, np.exp(-(X * X + Y * Y) / 8.0) * phase)

    report = detect_vortices(psi)
    assert len(report.vortices) == 2
    assert report.total_winding == 0
    by_winding = {w: np.array(p) for p, w in report.vortices}
    assert np.hypot(*(by_winding[1] - [z_plus.real, z_plus.imag])) < grid.h
    assert np.hypot(*(by_winding[-1] - [z_minus.real, z_minus.imag])) < grid.h

    metrics = vortex_lattice_metrics(report)
    assert metrics["count"] == 2.0
    assert metrics["nn_mean"] == pytest.approx(abs(z_plus - z_minus), abs=2 * grid.h)


def test_lattice_metrics_need_two_vortices():
    grid = Grid2D(8.0, 64)
    metrics = vortex_lattice_metrics(detect_vortices(_gaussian(grid)))
    assert metrics["count"] == 0.0
    assert math.isnan(metrics["hexatic"])


def test_profile_compare_on_tf_profile():
    grid = Grid2D(10.0, 128)
    trap = TrapPotential.harmonic(2.0)
    beta = 5.0
    c = C_ATF_ESTIMATE * beta
    _, lam = atf_energy(c, trap)
    rho = tf_density_at(c, trap, lam, grid.radius())
    psi = WaveField2D.normalized(grid, np.sqrt(rho))
    cmp = radial_profile_compare(psi, beta, trap, C_ATF_ESTIMATE)
    assert cmp.l1_error < 0.05
    with pytest.raises(ValueError):
        radial_profile_compare(psi, 0.0, trap, C_ATF_ESTIMATE)


def test_estimate_c_atf_recovers_synthetic_constant():
    harmonic = TrapPotential.harmonic(2.0)
    C = 6.5
    data = [(b, atf_energy(C * b, harmonic)[0], harmonic) for b in (2.0, 5.0, 10.0)]
    fit = estimate_c_atf(data)
    assert fit.c_atf == pytest.approx(C, rel=1e-10)
    assert fit.residual < 1e-10

    custom = TrapPotential(lambda r: r**4 + r**2)
    data = [(b, atf_energy(C * b, custom)[0], custom) for b in (2.0, 5.0)]
    assert estimate_c_atf(data).c_atf == pytest.approx(C, rel=1e-5)

    with pytest.raises(ValueError):
        estimate_c_atf([(2.0, 1.0, harmonic)])


@pytest.mark.slow
def test_desk_run_at_beta_ten():
    """beta = 10 on a 128^2 grid in V = r^2: lattice of ~10 vortices, aTF profile and constant."""
    grid = Grid2D(10.0, 128)
    trap = TrapPotential.harmonic(2.0)
    runs = {b: minimize_af(b, trap, grid, MinimizerConfig(seed=0)) for b in (6.0, 10.0, 14.0)}
    res = runs[10.0]
    assert res.energy < res.history[0]
    assert res.gradient_norm < 1e-3

    report = detect_vortices(res.wave)
    assert 8 <= abs(report.total_winding) <= 12
    cmp = radial_profile_compare(res.wave, 10.0, trap, C_ATF_ESTIMATE)
    assert cmp.l1_error <= 0.10

    fit = estimate_c_atf([(b, r.energy, trap) for b, r in runs.items()])
    assert 2.0 * math.pi <= fit.c_atf <= 8.5
