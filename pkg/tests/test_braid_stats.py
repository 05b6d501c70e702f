import math
import os
import sys
from fractions import Fraction

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from anyon_gas.braid_stats import (
    PHI,
    Abelian,
    Burau3,
    ExchangeRep,
    Fibonacci,
    Ising,
    StatisticsParameter,
    alpha_infinity,
    alpha_N,
    alpha_Nn,
    alpha_two,
    beta_Np,
    braid_word_from_string,
    build_rep,
    dim_sequence,
    exchange_phase,
    exchange_spectrum,
    pair_exchange_operator,
    popcorn_table,
    rep_of_word,
    verify_braid_relations,
)


def _phase_set(u):
    return sorted(exchange_spectrum(u).phases)


def test_alpha_two_examples():
    """Distance to the nearest even integer, exact for fractions."""
    assert alpha_two(0) == 0
    assert alpha_two(1) == 1
    assert alpha_two(2.5) == pytest.approx(0.5, abs=1e-15)
    assert alpha_two(-0.3) == pytest.approx(0.3, abs=1e-15)
    assert alpha_two(Fraction(7, 3)) == Fraction(1, 3)


def test_alpha_two_rejects_nonfinite():
    with pytest.raises(ValueError):
        alpha_two(math.inf)


def test_alpha_N_examples():
    assert alpha_N(1, 5) == 1
    assert alpha_N(Fraction(2, 3), 3) == 0
    assert alpha_N(Fraction(1, 3), 4) == Fraction(1, 3)
    with pytest.raises(ValueError):
        alpha_N(0.5, 1)


def test_alpha_infinity_examples():
    assert alpha_infinity(Fraction(1, 3)) == Fraction(1, 3)
    assert alpha_infinity(Fraction(2, 3)) == 0
    assert alpha_infinity(Fraction(3, 5)) == Fraction(1, 5)
    assert alpha_infinity(StatisticsParameter(math.sqrt(2) - 1, irrational=True)) == 0


def test_alpha_infinity_needs_exact_value():
    with pytest.raises(ValueError):
        alpha_infinity(StatisticsParameter(0.3))


def test_alpha_infinity_matches_finite_N_oracle():
    """alpha_infinity(mu/nu) equals alpha_N at N = nu + 2, exactly, for nu <= 25."""
    for nu in range(1, 26):
        for mu in range(0, 2 * nu):
            frac = Fraction(mu, nu)
            if frac.denominator != nu:
                continue
            assert alpha_infinity(frac) == alpha_N(frac, nu + 2), frac


def test_statistics_parameter_from_fraction_reduces():
    param = StatisticsParameter.from_fraction(2, -6)
    assert param.as_rational == Fraction(-1, 3)
    assert param.alpha_2 == pytest.approx(1.0 / 3.0)


def test_popcorn_table_small():
    rows = popcorn_table(3)
    fracs = [f for f, _ in rows]
    assert fracs == [Fraction(0), Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(1)]
    values = dict(rows)
    assert values[Fraction(1, 3)] == Fraction(1, 3)
    assert values[Fraction(2, 3)] == 0
    assert values[Fraction(1)] == 1


def test_exchange_phase_encircling():
    assert exchange_phase(0.5, 0) == pytest.approx(1j)
    assert exchange_phase(0.5, 1) == pytest.approx(-1j)
    with pytest.raises(ValueError):
        exchange_phase(0.5, -1)


def test_abelian_fermion_generators():
    rep = build_rep(Abelian(1.0), 3)
    assert rep.dim == 1
    for g in rep.generators:
        assert g[0, 0] == pytest.approx(-1.0)


def test_rep_of_word_identities():
    """Empty word and sigma sigma^-1 give the identity; abelian words give e^{i writhe alpha pi}."""
    rep = build_rep(Fibonacci(), 4)
    assert np.allclose(rep_of_word(rep, braid_word_from_string("", 4)), np.eye(rep.dim))
    assert np.allclose(rep_of_word(rep, braid_word_from_string("2 -2", 4)), np.eye(rep.dim))

    ab = build_rep(Abelian(0.3), 4)
    word = braid_word_from_string("1 2 -3 1", 4)
    assert word.writhe == 2
    assert rep_of_word(ab, word)[0, 0] == pytest.approx(np.exp(2j * math.pi * 0.3))


def test_braid_word_parsing_errors():
    with pytest.raises(ValueError):
        braid_word_from_string("0", 3)
    with pytest.raises(ValueError):
        braid_word_from_string("3", 3)


def test_fibonacci_dimensions_grow_like_golden_ratio():
    dims = dim_sequence(Fibonacci(), 30)
    assert dims[:4] == [2, 3, 5, 8]
    assert dims[-1] / dims[-2] == pytest.approx(PHI, abs=1e-10)
    assert build_rep(Fibonacci(), 4).dim == 5


def test_ising_dimensions():
    assert dim_sequence(Ising(), 9) == [2 ** (N // 2) for N in range(2, 10)]


def test_braid_relations_hold():
    """Unitarity, Yang-Baxter and far commutation for N <= 9."""
    for N in range(2, 10):
        for model in (Ising(), Fibonacci(), Ising("-"), Fibonacci("-")):
            report = verify_braid_relations(build_rep(model, N))
            assert report.passed, (model, N, report)
    assert verify_braid_relations(build_rep(Abelian(0.37), 6), tol=1e-12).passed
    assert verify_braid_relations(build_rep(Burau3.from_alpha(0.2), 3)).passed


def test_perturbed_generator_fails_relations():
    rep = build_rep(Fibonacci(), 4)
    bad = list(rep.generators)
    bad[1] = bad[1] @ np.diag(np.exp(1j * np.linspace(0.0, 0.01, rep.dim)))
    broken = ExchangeRep(N=rep.N, dim=rep.dim, generators=tuple(bad), model=rep.model)
    report = verify_braid_relations(broken)
    assert not report.passed
    assert report.yang_baxter > report.tol


def test_exchange_spectrum_examples():
    spec = exchange_spectrum(np.eye(3))
    assert spec.phases == (0.0,)
    assert spec.multiplicities == (3,)
    spec = exchange_spectrum(np.diag([1j, -1j]))
    assert spec.phases == pytest.approx((-0.5, 0.5))
    assert spec.multiplicities == (1, 1)
    with pytest.raises(ValueError):
        exchange_spectrum(np.array([[2.0]]))


def test_abelian_pair_exchange():
    rep = build_rep(Abelian(0.3), 5)
    for p in range(4):
        u = pair_exchange_operator(rep, p)
        assert u[0, 0] == pytest.approx(np.exp(1j * math.pi * (2 * p + 1) * 0.3))
    assert beta_Np(rep, 0) == pytest.approx(0.3)


def test_ising_pair_spectra():
    for N in range(3, 8):
        rep = build_rep(Ising(), N)
        assert _phase_set(pair_exchange_operator(rep, 0)) == pytest.approx([-1 / 8, 3 / 8])
        assert beta_Np(rep, 0) == pytest.approx(1 / 8, abs=1e-9)
        for p in range(N - 1):
            assert beta_Np(rep, p) >= 1 / 8 - 1e-9
        for n in range(2, N + 1):
            assert alpha_Nn(rep, n) == pytest.approx(1 / 8, abs=1e-9)


def test_fibonacci_pair_spectra():
    rep = build_rep(Fibonacci(), 3)
    assert _phase_set(pair_exchange_operator(rep, 0)) == pytest.approx([-0.6, 0.8], abs=1e-9)
    assert _phase_set(pair_exchange_operator(rep, 1)) == pytest.approx(
        [-0.2, 0.2, 0.8], abs=1e-9
    )
    for N in range(3, 8):
        rep = build_rep(Fibonacci(), N)
        assert beta_Np(rep, 0) == pytest.approx(0.6, abs=1e-9)
        assert alpha_Nn(rep, 2) == pytest.approx(0.6, abs=1e-9)
        for n in range(3, N + 1):
            assert alpha_Nn(rep, n) == pytest.approx(0.2, abs=1e-9)


ISING_PHASES = {
    "zero": [-1 / 8, 3 / 8],
    "odd": [-1 / 8, 7 / 8],
    "even": [-5 / 8, -1 / 8, 3 / 8, 7 / 8],
}
FIBONACCI_PHASES = {
    "zero": [-0.6, 0.8],
    "one": [-0.2, 0.2, 0.8],
    "many": [-0.6, -0.2, 0.2, 0.8],
}


def _ising_expected(p):
    if p == 0:
        return ISING_PHASES["zero"]
    return ISING_PHASES["odd"] if p % 2 else ISING_PHASES["even"]


def _fibonacci_expected(p):
    if p == 0:
        return FIBONACCI_PHASES["zero"]
    return FIBONACCI_PHASES["one"] if p == 1 else FIBONACCI_PHASES["many"]


def test_ising_pair_spectra_every_p():
    for N in range(2, 10):
        rep = build_rep(Ising(), N)
        for p in range(N - 1):
            got = _phase_set(pair_exchange_operator(rep, p))
            assert got == pytest.approx(_ising_expected(p), abs=1e-9), (N, p)


def test_fibonacci_pair_spectra_every_p():
    for N in range(2, 10):
        rep = build_rep(Fibonacci(), N)
        for p in range(N - 1):
            got = _phase_set(pair_exchange_operator(rep, p))
            assert got == pytest.approx(_fibonacci_expected(p), abs=1e-9), (N, p)


def test_opposite_chirality_gives_conjugate_spectra():
    for model, expected in ((Ising("-"), _ising_expected), (Fibonacci("-"), _fibonacci_expected)):
        for N in (3, 6, 9):
            rep = build_rep(model, N)
            for p in range(N - 1):
                got = _phase_set(pair_exchange_operator(rep, p))
                conjugate = sorted(-x for x in expected(p))
                assert got == pytest.approx(conjugate, abs=1e-9), (model, N, p)


def test_burau3_spectra():
    """spec U_{3,0} = {1, -w^2}, spec U_{3,1} = {w^3, -w^3}, alpha_{3,2} = 0."""
    for a in (-0.3, 0.1, 0.25):
        rep = build_rep(Burau3.from_alpha(a), 3)

        def wrap(x):
            return x - 2.0 * math.ceil((x - 1.0) / 2.0)

        u0 = _phase_set(pair_exchange_operator(rep, 0))
        assert u0 == pytest.approx(sorted([0.0, wrap(2 * a + 1)]), abs=1e-9)
        u1 = _phase_set(pair_exchange_operator(rep, 1))
        assert u1 == pytest.approx(sorted([wrap(3 * a), wrap(3 * a + 1)]), abs=1e-9)
        assert alpha_Nn(rep, 2) == pytest.approx(0.0, abs=1e-12)


def test_burau3_parameter_range():
    with pytest.raises(ValueError):
        Burau3.from_alpha(0.5)
    with pytest.raises(ValueError):
        build_rep(Burau3.from_alpha(0.1), 4)
