import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from anyon_gas.gauge_transmute import (
    FluxModel,
    ParticleConfig,
    canonical_alpha,
    circulation,
    conjugation_flag,
    enclosed_flux_fraction,
    enclosed_particles,
    exchange_loop,
    extended_gas_parameters,
    gauge_identity_residual,
    perp,
    points_inside,
    transmutation_phase,
    vector_potential,
)


def _square(half, center=(0.0, 0.0)):
    cx, cy = center
    return np.array(
        [
            [cx - half, cy - half],
            [cx + half, cy - half],
            [cx + half, cy + half],
            [cx - half, cy + half],
        ]
    )


def _test_field(pos):
    """Smooth complex test function of all positions."""
    x = pos[:, 0]
    y = pos[:, 1]
    return complex(np.exp(-0.1 * np.sum(x * x + y * y)) * (1.0 + 0.3j * x[0] - 0.2 * y[1]))


def test_config_validation():
    with pytest.raises(ValueError):
        ParticleConfig(np.array([[0.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        ParticleConfig(np.array([[np.nan, 0.0]]))
    assert ParticleConfig(np.array([[0.0, 0.0], [3.0, 4.0]])).min_separation == 5.0


def test_perp_rotates_counterclockwise():
    assert perp(np.array([1.0, 0.0])) == pytest.approx([0.0, 1.0])


def test_transmutation_phase_two_particles():
    config = ParticleConfig(np.array([[0.0, 0.0], [1.0, 0.0]]))
    assert transmutation_phase(config) == pytest.approx(-1.0)


def test_vector_potential_single_partner():
    config = ParticleConfig(np.array([[1.0, 0.0], [0.0, 0.0]]))
    assert vector_potential(config, 0, FluxModel(0.5)) == pytest.approx([0.0, 1.0])
    # inside an extended flux the potential is linear in the distance
    config = ParticleConfig(np.array([[0.5, 0.0], [0.0, 0.0]]))
    assert vector_potential(config, 0, FluxModel(0.5, R=1.0)) == pytest.approx([0.0, 0.5])


def test_circulation_around_one_flux():
    config = ParticleConfig(np.array([[0.0, 0.0], [1.0, 0.0]]))
    loop = exchange_loop(config, 1, 0, 256)
    alpha = 0.37
    value = circulation(FluxModel(alpha), config.without(1), loop)
    assert value == pytest.approx(2.0 * math.pi * alpha, abs=1e-6)


def test_circulation_is_additive():
    points = np.array([[0.1, 0.2], [-0.5, 0.4], [0.3, -0.6], [5.0, 5.0]])
    config = ParticleConfig(points)
    loop = _square(1.5)
    assert enclosed_particles(config, loop) == 3
    value = circulation(FluxModel(0.25), config, loop)
    assert value == pytest.approx(3 * 2.0 * math.pi * 0.25, abs=1e-6)


def test_exchange_loop_encloses_extra_particles():
    """Double exchange around k with p further particles inside gives 2 pi alpha (1 + p)."""
    config = ParticleConfig(np.array([[0.0, 0.0], [2.0, 0.0], [0.5, 0.3], [4.0, 0.0]]))
    loop = exchange_loop(config, 1, 0, 512)
    others = config.without(1)
    assert enclosed_particles(others, loop) == 2
    alpha = 0.3
    value = circulation(FluxModel(alpha), others, loop)
    assert value == pytest.approx(2.0 * math.pi * alpha * 2, abs=1e-6)


def test_exchange_loop_validation():
    config = ParticleConfig(np.array([[0.0, 0.0], [1.0, 0.0]]))
    with pytest.raises(ValueError):
        exchange_loop(config, 0, 0)
    with pytest.raises(ValueError):
        exchange_loop(config, 0, 2)


def test_loop_through_ideal_flux_rejected():
    config = ParticleConfig(np.array([[1.0, -1.0]]))
    with pytest.raises(ValueError):
        circulation(FluxModel(0.5), config, _square(1.0))


def test_transmutation_phase_odd_under_label_swap():
    points = np.array([[0.0, 0.0], [1.0, 0.3], [-0.7, 1.2], [0.4, -1.5]])
    phase = transmutation_phase(ParticleConfig(points))
    swapped = points[[2, 1, 0, 3]]
    assert transmutation_phase(ParticleConfig(swapped)) == pytest.approx(-phase)
    cycled = points[[1, 2, 0, 3]]
    assert transmutation_phase(ParticleConfig(cycled)) == pytest.approx(phase)
    assert abs(phase) == pytest.approx(1.0)


def test_circulation_flips_with_loop_orientation():
    config = ParticleConfig(np.array([[0.2, -0.1], [-0.4, 0.5], [3.0, 0.0]]))
    loop = _square(1.0)
    forward = circulation(FluxModel(0.4), config, loop)
    backward = circulation(FluxModel(0.4), config, loop[::-1])
    assert forward == pytest.approx(2 * 2.0 * math.pi * 0.4, abs=1e-6)
    assert backward == pytest.approx(-forward, abs=1e-9)


def test_circulation_adds_lobes_with_their_orientation():
    """Figure-eight loop: right lobe counterclockwise, left lobe clockwise."""
    t = 2.0 * math.pi * np.arange(1024) / 1024
    loop = np.stack([2.0 * np.cos(t), np.sin(2.0 * t)], axis=-1)
    config = ParticleConfig(np.array([[0.8, 0.1], [1.2, -0.1], [-1.0, 0.0], [5.0, 5.0]]))
    alpha = 0.3
    value = circulation(FluxModel(alpha), config, loop)
    assert value == pytest.approx(2.0 * math.pi * alpha * (2 - 1), abs=1e-6)
    left_only = circulation(FluxModel(alpha), config.without(0).without(0), loop)
    assert left_only == pytest.approx(-2.0 * math.pi * alpha, abs=1e-6)


def test_points_inside_square():
    inside = points_inside(_square(1.0), np.array([[0.0, 0.0], [2.0, 0.0], [0.9, -0.9]]))
    assert inside.tolist() == [True, False, True]


def test_extended_flux_fraction_and_circulation():
    """A loop through the centre of a disk flux encloses half of it."""
    loop = np.array([[0.0, -3.0], [3.0, -3.0], [3.0, 3.0], [0.0, 3.0]])
    center = np.array([0.0, 0.0])
    frac = enclosed_flux_fraction(center, 1.0, loop)
    assert frac == pytest.approx(0.5, abs=1e-2)
    assert enclosed_flux_fraction(center, 1.0, _square(2.0)) == 1.0
    assert enclosed_flux_fraction(center, 1.0, _square(1.0, center=(5.0, 0.0))) == 0.0

    alpha = 0.5
    config = ParticleConfig(center[None, :])
    value = circulation(FluxModel(alpha, R=1.0), config, loop)
    assert value == pytest.approx(2.0 * math.pi * alpha * frac, abs=1e-2)


def test_gauge_identity_residual_small():
    config = ParticleConfig(np.array([[0.0, 0.0], [1.3, 0.2], [-0.4, 1.1]]))
    for j in range(3):
        assert gauge_identity_residual(0.4, config, j, _test_field, h=1e-4) < 1e-6


def test_gauge_identity_second_order():
    config = ParticleConfig(np.array([[0.0, 0.0], [1.3, 0.2], [-0.4, 1.1]]))
    coarse = gauge_identity_residual(0.4, config, 0, _test_field, h=2e-2)
    fine = gauge_identity_residual(0.4, config, 0, _test_field, h=1e-2)
    assert coarse / fine == pytest.approx(4.0, rel=0.2)


def test_gauge_identity_step_validation():
    config = ParticleConfig(np.array([[0.0, 0.0], [1.0, 0.0]]))
    with pytest.raises(ValueError):
        gauge_identity_residual(0.4, config, 0, _test_field, h=0.5)


def test_extended_gas_parameters():
    gamma_bar, height, strength = extended_gas_parameters(1.0, 0.5, 4.0)
    assert gamma_bar == pytest.approx(1.0)
    assert height == pytest.approx(8.0)
    assert strength == pytest.approx(1.0)
    with pytest.raises(ValueError):
        extended_gas_parameters(1.0, 0.0, 1.0)


def test_canonical_alpha_and_conjugation():
    assert canonical_alpha(1.5) == pytest.approx(-0.5)
    assert canonical_alpha(1.0) == pytest.approx(1.0)
    assert canonical_alpha(-1.0) == pytest.approx(1.0)
    assert canonical_alpha(2.25) == pytest.approx(0.25)
    assert conjugation_flag(1.5)
    assert not conjugation_flag(0.5)
