import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

try:
    from importlib.resources import files
except ImportError:
    # Fallback for Python < 3.9
    from importlib_resources import files

from . import afm, braid_stats, dft, gauge_transmute, polaron, spectra_bounds
from .errors import AnyonGasError, ConfigError
from .output import FORMATS, Columns, OutputRecord, emit_error, emit_output, make_provenance

COMMON_DEFAULTS: Dict[str, Any] = {"out": None, "format": "json", "seed": 0, "verbose": False}


class Param(NamedTuple):
    kind: str
    default: Any = None
    help: str = ""
    required: bool = False


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    params: Dict[str, Any] = field(default_factory=dict)
    out: Optional[str] = None
    fmt: str = "json"
    seed: int = 0
    verbose: bool = False

    @property
    def out_path(self) -> str:
        return self.out or f"{self.subcommand}.{self.fmt}"


Tables = Dict[str, Columns]
Handler = Callable[[Dict[str, Any], RunConfig], Tuple[Columns, Tables]]


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------


def _anyon_model(p: Dict[str, Any]) -> braid_stats.AnyonModel:
    name = p["model"]
    if name == "abelian":
        return braid_stats.Abelian(p["alpha"])
    if name == "burau3":
        return braid_stats.Burau3.from_alpha(p["alpha"])
    if name == "ising":
        return braid_stats.Ising(p["chirality"])
    if name == "fibonacci":
        return braid_stats.Fibonacci(p["chirality"])
    raise ValueError(f"model must be abelian, burau3, ising or fibonacci, got {name!r}")


def _run_fractionality(p: Dict[str, Any], cfg: RunConfig) -> Tuple[Columns, Tables]:
    if p["alpha_den"] == 0:
        raise ValueError("alpha_den must be nonzero")
    param = braid_stats.StatisticsParameter.from_fraction(p["alpha_num"], p["alpha_den"])
    frac = param.as_rational
    assert frac is not None
    Ns = list(range(2, p["n_max"] + 1))
    if not Ns:
        raise ValueError(f"n_max must be >= 2, got {p['n_max']}")
    values = [braid_stats.alpha_N(frac, N) for N in Ns]
    columns = {
        "N": Ns,
        "alpha_N": [float(v) for v in values],
        "alpha_N_numerator": [v.numerator for v in values],
        "alpha_N_denominator": [v.denominator for v in values],
    }
    limit = braid_stats.alpha_infinity(frac)
    summary = {
        "alpha": [float(frac)],
        "alpha_2": [param.alpha_2],
        "alpha_infinity": [float(limit)],
        "alpha_infinity_denominator": [limit.denominator],
    }
    return columns, {"summary": summary}


def _run_popcorn(p: Dict[str, Any], cfg: RunConfig) -> Tuple[Columns, Tables]:
    rows = braid_stats.popcorn_table(p["max_den"])
    columns = {
        "alpha": [float(a) for a, _ in rows],
        "numerator": [a.numerator for a, _ in rows],
        "denominator": [a.denominator for a, _ in rows],
        "alpha_infinity": [float(v) for _, v in rows],
    }
    return columns, {}


def _run_braid(p: Dict[str, Any], cfg: RunConfig) -> Tuple[Columns, Tables]:
    rep = braid_stats.build_rep(_anyon_model(p), p["n_strands"])
    word = braid_stats.braid_word_from_string(p["word"], rep.N)
    spec = braid_stats.exchange_spectrum(braid_stats.rep_of_word(rep, word))
    report = braid_stats.verify_braid_relations(rep)
    columns = {"phase": list(spec.phases), "multiplicity": list(spec.multiplicities)}
    summary = {
        "dim": [rep.dim],
        "writhe": [word.writhe],
        "unitarity": [report.unitarity],
        "yang_baxter": [report.yang_baxter],
        "far_commutation": [report.far_commutation],
        "relations_passed": [report.passed],
    }
    return columns, {"summary": summary}


def _run_pair_spectrum(p: Dict[str, Any], cfg: RunConfig) -> Tuple[Columns, Tables]:
    model = _anyon_model(p)
    rep = braid_stats.build_rep(model, p["n_strands"])
    columns: Columns = {"p": [], "phase": [], "multiplicity": []}
    betas: Columns = {"p": [], "beta_Np": []}
    for k in range(rep.N - 1):
        spec = braid_stats.exchange_spectrum(braid_stats.pair_exchange_operator(rep, k))
        for phase, mult in zip(spec.phases, spec.multiplicities):
            columns["p"].append(k)
            columns["phase"].append(phase)
            columns["multiplicity"].append(mult)
        betas["p"].append(k)
        betas["beta_Np"].append(min(abs(g) for g in spec.phases))
    ns = list(range(2, rep.N + 1))
    exclusion = {"n": ns, "alpha_Nn": [braid_stats.alpha_Nn(rep, n) for n in ns]}
    dims = {"N": ns, "dim": braid_stats.dim_sequence(model, rep.N)}
    return columns, {"beta": betas, "exclusion": exclusion, "dims": dims}


def _alpha_sweep(p: Dict[str, Any]) -> np.ndarray:
    if p["alpha_steps"] < 1:
        raise ValueError(f"alpha_steps must be >= 1, got {p['alpha_steps']}")
    return np.linspace(p["alpha_min"], p["alpha_max"], p["alpha_steps"])


def _run_e2(p: Dict[str, Any], cfg: RunConfig) -> Tuple[Columns, Tables]:
    trap = spectra_bounds.HarmonicTrap(p["trap_omega"])
    alphas = _alpha_sweep(p)
    columns = {
        "alpha": alphas.tolist(),
        "e2": [spectra_bounds.e2_harmonic(a, trap) for a in alphas],
        "e2_relative": [spectra_bounds.e2_relative_harmonic(a, trap) for a in alphas],
        "effective_dimension": [spectra_bounds.effective_dimension(a) for a in alphas],
        "chitra_sen": [
            spectra_bounds.chitra_sen_bound(
                2, spectra_bounds.optimal_angular_momentum(2, a), a, trap
            )
            for a in alphas
        ],
    }
    return columns, {}


def _run_bounds(p: Dict[str, Any], cfg: RunConfig) -> Tuple[Columns, Tables]:
    N = p["n_particles"]
    if N < 2:
        raise ValueError(f"n_particles must be >= 2, got {N}")
    trap = spectra_bounds.HarmonicTrap(p["trap_omega"])
    names = (
        "alpha alpha_2 alpha_N boson_lower chitra_sen harmonic_lt_lower hardy_coefficient "
        "neumann_many_lower homogeneous_lower homogeneous_upper near_boson_estimate "
        "near_fermion_estimate"
    ).split()
    columns: Columns = {name: [] for name in names}
    for a in _alpha_sweep(p):
        a = float(a)
        L = spectra_bounds.optimal_angular_momentum(N, a)
        lower, upper = spectra_bounds.homogeneous_bounds(a, N)
        near_boson, near_fermion = spectra_bounds.chitra_sen_estimates(N, a, trap)
        row = (
            a,
            float(braid_stats.alpha_two(a)),
            float(braid_stats.alpha_N(a, N)),
            spectra_bounds.boson_lower_bound(N, trap),
            spectra_bounds.chitra_sen_bound(N, L, a, trap),
            spectra_bounds.harmonic_lt_lower(N, a, trap, p["lt_constant"]),
            spectra_bounds.hardy_coefficient(N, a),
            spectra_bounds.neumann_many_lower(N, a),
            lower,
            upper,
            near_boson,
            near_fermion,
        )
        for name, value in zip(names, row):
            columns[name].append(value)
    summary = {"fermion_neumann_lower": [spectra_bounds.fermion_neumann_lower(N)]}
    return columns, {"summary": summary}


def _run_gauge(p: Dict[str, Any], cfg: RunConfig) -> Tuple[Columns, Tables]:
    pos = p["positions"]
    if len(pos) < 4 or len(pos) % 2:
        raise ValueError("positions must hold an even number (>= 4) of coordinates")
    config = gauge_transmute.ParticleConfig(np.reshape(pos, (-1, 2)))
    j, k = p["j"], p["k"]
    loop = gauge_transmute.exchange_loop(config, j, k, p["n_points"])
    others = config.without(j)
    flux = gauge_transmute.FluxModel(p["alpha"], p["R"])
    circ = gauge_transmute.circulation(flux, others, loop)
    fraction = sum(
        gauge_transmute.enclosed_flux_fraction(x, flux.R, loop) for x in others.positions
    )
    phase = gauge_transmute.transmutation_phase(config)
    columns = {
        "circulation": [circ],
        "expected": [2.0 * math.pi * p["alpha"] * fraction],
        "enclosed": [gauge_transmute.enclosed_particles(others, loop)],
        "enclosed_flux": [fraction],
        "transmutation_phase_real": [phase.real],
        "transmutation_phase_imag": [phase.imag],
    }
    return columns, {"loop": {"x": loop[:, 0].tolist(), "y": loop[:, 1].tolist()}}


def _radial_setup(p: Dict[str, Any]) -> Tuple[dft.TrapPotential, dft.RadialGrid]:
    return dft.TrapPotential.harmonic(p["trap_omega"]), dft.RadialGrid.uniform(
        p["r_max"], p["n_nodes"]
    )


def _tf_model(p: Dict[str, Any]) -> dft.CoefficientModel:
    name = p["model"]
    if name == "fermion":
        return dft.Fermion()
    if name == "constant_field":
        return dft.ConstantField(p["alpha"])
    if name == "avg_field":
        return dft.AvgField(p["beta"], p["c_atf"])
    raise ValueError(f"model must be fermion, constant_field or avg_field, got {name!r}")


def _run_tf(p: Dict[str, Any], cfg: RunConfig) -> Tuple[Columns, Tables]:
    trap, grid = _radial_setup(p)
    model = _tf_model(p)
    sol = dft.tf_minimize(model, trap, p["n_particles"], grid)
    closed = dft.tf_closed_form(model.coefficient(), trap, p["n_particles"])
    summary: Columns = {
        "energy": [sol.energy],
        "chemical_potential": [sol.chemical_potential],
        "support_radius": [sol.density.support_radius],
        "closed_form_energy": [closed[0] if closed else math.nan],
        "closed_form_chemical_potential": [closed[1] if closed else math.nan],
    }
    if p["lda_R"] > 0:
        summary["extended_lda_energy"] = [
            dft.extended_lda_energy(p["alpha"], p["lda_R"], sol.density, trap, p["lda_shape"])
        ]
    columns = {"r": grid.r.tolist(), "rho": sol.density.values.tolist()}
    return columns, {"summary": summary}


def _run_mtf(p: Dict[str, Any], cfg: RunConfig) -> Tuple[Columns, Tables]:
    lo, hi, step = p["beta_min"], p["beta_max"], p["beta_step"]
    if not 0 < lo <= hi or step <= 0:
        raise ValueError("need 0 < beta_min <= beta_max and beta_step > 0")
    count = int(round((hi - lo) / step)) + 1
    betas = lo + step * np.arange(count)
    M, envelope = dft.mtf_curve(betas)
    return {"beta": betas.tolist(), "m_factor": M.tolist(), "envelope": envelope.tolist()}, {}


def _run_amtf(p: Dict[str, Any], cfg: RunConfig) -> Tuple[Columns, Tables]:
    trap, grid = _radial_setup(p)
    sol = dft.amtf_minimize(p["beta"], trap, p["n_particles"], grid)
    fermion = dft.tf_minimize(dft.Fermion(), trap, p["n_particles"], grid)
    summary = {
        "energy": [sol.energy],
        "unreduced_energy": [sol.unreduced_energy],
        "chemical_potential": [sol.chemical_potential],
        "m_factor": [dft.m_factor(p["beta"])],
        "fermion_energy": [fermion.energy],
    }
    columns = {"r": grid.r.tolist(), "rho": sol.density.values.tolist()}
    return columns, {"summary": summary}


def _run_vlasov(p: Dict[str, Any], cfg: RunConfig) -> Tuple[Columns, Tables]:
    trap, grid = _radial_setup(p)
    sol = dft.vlasov_minimize(trap, p["n_particles"], grid, p["beta"])
    p_max = p["p_max"]
    if p_max <= 0:
        a_max = float(np.max(dft.a_of_rho_radial(sol.density, grid.r)))
        k_max = math.sqrt(4.0 * math.pi * sol.density.values.max())
        p_max = 1.25 * (k_max + abs(p["beta"]) * a_max)
    momentum = dft.vlasov_momentum_density(
        p["beta"], sol.density, dft.RadialGrid.uniform(p_max, p["p_nodes"])
    )
    columns = {"p": momentum.p.tolist(), "t": momentum.t.tolist()}
    tables = {
        "density": {"r": grid.r.tolist(), "rho": sol.density.values.tolist()},
        "summary": {
            "energy": [sol.energy],
            "chemical_potential": [sol.chemical_potential],
            "momentum_mass": [momentum.mass],
        },
    }
    return columns, tables


def _run_afm(p: Dict[str, Any], cfg: RunConfig) -> Tuple[Columns, Tables]:
    trap = dft.TrapPotential.harmonic(p["trap_omega"])
    grid = afm.Grid2D(p["box"], p["n"])
    mcfg = afm.MinimizerConfig(
        step=p["step"],
        max_iters=p["max_iters"],
        energy_tol=p["energy_tol"],
        seed=cfg.seed,
        refresh_every=p["refresh_every"],
        grad_tol=p["grad_tol"],
        verbose=cfg.verbose,
    )
    res = afm.minimize_af(p["beta"], trap, grid, mcfg)
    parts = afm.af_energy(res.wave, p["beta"], trap)
    vortices = afm.detect_vortices(res.wave, p["density_floor"], p["smoothing"])
    metrics = afm.vortex_lattice_metrics(vortices)
    columns = {"iteration": list(range(len(res.history))), "energy": res.history}

    summary: Columns = {
        "energy": [res.energy],
        "kinetic": [parts.kinetic],
        "potential": [parts.potential],
        "iterations": [res.iterations],
        "gradient_norm": [res.gradient_norm],
        "total_winding": [vortices.total_winding],
        "nn_mean": [metrics["nn_mean"]],
        "hexatic": [metrics["hexatic"]],
        "l1_error": [math.nan],
        "c_atf_fit": [math.nan],
    }
    tables: Tables = {
        "vortices": {
            "x": vortices.positions[:, 0].tolist(),
            "y": vortices.positions[:, 1].tolist(),
            "winding": [w for _, w in vortices.vortices],
        }
    }
    if p["beta"] != 0:
        cmp = afm.radial_profile_compare(res.wave, p["beta"], trap, p["c_atf"])
        summary["l1_error"] = [cmp.l1_error]
        tables["profile"] = {
            "r": cmp.r.tolist(),
            "numeric": cmp.numeric.tolist(),
            "reference": cmp.reference.tolist(),
        }
    if p["fit_betas"]:
        runs = [(p["beta"], res.energy, trap)]
        for b in p["fit_betas"]:
            runs.append((b, afm.minimize_af(b, trap, grid, mcfg).energy, trap))
        summary["c_atf_fit"] = [afm.estimate_c_atf(runs).c_atf]
        tables["fit"] = {"beta": [b for b, _, _ in runs], "energy": [e for _, e, _ in runs]}
    tables["summary"] = summary
    return columns, tables


def _run_polaron(p: Dict[str, Any], cfg: RunConfig) -> Tuple[Columns, Tables]:
    trunc = polaron.FockTruncation(
        n_boson_max=p["n_boson_max"],
        n_radial_max=p["n_radial_max"],
        l_min=p["l_min"],
        parity=p["parity"],
    )
    table = polaron.transmutation_scan(
        p["gamma"],
        p["omegas"],
        trunc,
        trap_omega=p["trap_omega"],
        mode=p["mode"],
        band=p["band"],
        verbose=cfg.verbose,
    )
    return dict(table), {}


# ---------------------------------------------------------------------------
# Schemas and dispatch
# ---------------------------------------------------------------------------

_RADIAL = {
    "n_particles": Param("float", 10.0, "mass N of the density"),
    "trap_omega": Param("float", 2.0, "harmonic trap hbar*omega; 2 gives V = r^2"),
    "r_max": Param("float", 8.0, "radial grid extent"),
    "n_nodes": Param("int", 10000, "radial grid nodes"),
}
_MODEL = {
    "model": Param("str", "fibonacci", "abelian, burau3, ising or fibonacci"),
    "n_strands": Param("int", 4, "number of strands N"),
    "alpha": Param("float", 0.25, "statistics parameter (abelian, burau3 w = e^{i pi alpha})"),
    "chirality": Param("str", "+", "'+' or '-' (ising, fibonacci)"),
}
_SWEEP = {
    "alpha_min": Param("float", 0.0, "first alpha of the sweep"),
    "alpha_max": Param("float", 2.0, "last alpha of the sweep"),
    "alpha_steps": Param("int", 201, "number of alpha samples"),
}

DISPATCH: Dict[str, Tuple[Dict[str, Param], Handler, str]] = {
    "fractionality": (
        {
            "alpha_num": Param("int", None, "numerator of alpha", required=True),
            "alpha_den": Param("int", None, "denominator of alpha", required=True),
            "n_max": Param("int", 50, "largest N"),
        },
        _run_fractionality,
        "alpha_N for N = 2..n_max and the limit alpha_infinity",
    ),
    "popcorn": (
        {"max_den": Param("int", 20, "largest reduced denominator")},
        _run_popcorn,
        "popcorn function over reduced fractions in [0, 1]",
    ),
    "braid": (
        dict(_MODEL, word=Param("str", "1 2 1", "signed generator indices, e.g. '1 -2 1'")),
        _run_braid,
        "eigenphases of a braid word and braid-relation residuals",
    ),
    "pair-spectrum": (
        dict(_MODEL),
        _run_pair_spectrum,
        "pair-exchange spectra, beta_Np and alpha_Nn",
    ),
    "e2": (
        dict(_SWEEP, trap_omega=Param("float", 1.0, "harmonic trap hbar*omega")),
        _run_e2,
        "two-anyon ground energy in a harmonic trap",
    ),
    "bounds": (
        dict(
            _SWEEP,
            alpha_max=Param("float", 1.0, "last alpha of the sweep"),
            alpha_steps=Param("int", 101, "number of alpha samples"),
            n_particles=Param("int", 10, "particle number N"),
            trap_omega=Param("float", 1.0, "harmonic trap hbar*omega"),
            lt_constant=Param("float", 1.0, "constant of the degeneracy-pressure bound"),
        ),
        _run_bounds,
        "many-anyon energy bounds across alpha",
    ),
    "gauge": (
        {
            "alpha": Param("float", 0.5, "statistics parameter"),
            "R": Param("float", 0.0, "flux radius; 0 for ideal point fluxes"),
            "positions": Param("float_list", [0.0, 0.0, 1.0, 0.0, 3.0, 0.0], "x0,y0,x1,y1,..."),
            "j": Param("int", 1, "moving particle"),
            "k": Param("int", 0, "particle encircled"),
            "n_points": Param("int", 256, "polygon vertices of the loop"),
        },
        _run_gauge,
        "circulation of the statistics field along a double-exchange loop",
    ),
    "tf": (
        dict(
            _RADIAL,
            model=Param("str", "fermion", "fermion, constant_field or avg_field"),
            alpha=Param("float", 0.5, "statistics parameter (constant_field, extended LDA)"),
            beta=Param("float", 1.0, "self-field strength (avg_field)"),
            c_atf=Param("float", dft.C_ATF_ESTIMATE, "average-field TF constant"),
            lda_R=Param("float", 0.0, "extended-anyon radius; > 0 adds the LDA energy"),
            lda_shape=Param("str", "sym_lower", "sym_lower or asym_lower"),
        ),
        _run_tf,
        "Thomas-Fermi density and energy",
    ),
    "mtf": (
        {
            "beta_min": Param("float", 0.001, "first beta"),
            "beta_max": Param("float", 1.0, "last beta"),
            "beta_step": Param("float", 0.001, "beta increment"),
        },
        _run_mtf,
        "magnetic TF factor M(beta) and its envelope",
    ),
    "amtf": (
        dict(
            _RADIAL,
            n_nodes=Param("int", 4096, "radial grid nodes"),
            beta=Param("float", 0.5, "self-field strength in (0, 1]"),
        ),
        _run_amtf,
        "magnetic TF in the self-generated field",
    ),
    "vlasov": (
        dict(
            _RADIAL,
            n_nodes=Param("int", 4096, "radial grid nodes"),
            beta=Param("float", 0.5, "self-field strength"),
            p_max=Param("float", 0.0, "momentum grid extent; <= 0 picks one from the density"),
            p_nodes=Param("int", 2048, "momentum grid nodes"),
        ),
        _run_vlasov,
        "semiclassical Vlasov minimizer: spatial and momentum densities",
    ),
    "afm": (
        {
            "beta": Param("float", 10.0, "self-field strength"),
            "box": Param("float", 10.0, "side length L of the square box"),
            "n": Param("int", 128, "grid points per side (power of two)"),
            "trap_omega": Param("float", 2.0, "harmonic trap hbar*omega; 2 gives V = r^2"),
            "step": Param("float", 0.5, "initial step in (0, 1)"),
            "max_iters": Param("int", 5000, "iteration cap"),
            "energy_tol": Param("float", 1e-8, "plateau tolerance"),
            "refresh_every": Param("int", 1, "back-reaction refresh period in steps"),
            "grad_tol": Param("float", 1e-4, "projected gradient norm accepted at a stall"),
            "c_atf": Param("float", dft.C_ATF_ESTIMATE, "TF constant of the reference profile"),
            "density_floor": Param("float", 0.05, "vortex mask, fraction of the peak density"),
            "smoothing": Param("float", 2.0, "vortex mask smoothing width in cells"),
            "fit_betas": Param("float_list", [], "extra betas for a C_aTF fit"),
        },
        _run_afm,
        "average-field minimizer: energy trace, profile and vortices",
    ),
    "polaron": (
        {
            "gamma": Param("float", 0.5, "coupling gamma"),
            "omegas": Param("float_list", [10.0, 100.0, 1000.0], "increasing boson frequencies"),
            "trap_omega": Param("float", 1.0, "relative oscillator hbar*omega"),
            "n_boson_max": Param("int", 40, "boson cutoff"),
            "n_radial_max": Param("int", 30, "radial quantum number cutoff"),
            "l_min": Param("int", -4, "lowest angular momentum kept"),
            "parity": Param("str", "boson", "boson (even l) or all"),
            "mode": Param("str", "isometric", "isometric, flux, vortex or all"),
            "band": Param("int", 0, "boson band to follow"),
        },
        _run_polaron,
        "statistics transmutation scan of the polaron toy model",
    ),
}


def schema_markdown() -> str:
    """Markdown tables of every subcommand schema."""
    lines = []
    for name, (schema, _, doc) in DISPATCH.items():
        lines += [f"### `{name}`", "", doc, ""]
        lines += ["| key | flag | type | default | required | description |"]
        lines += ["|---|---|---|---|---|---|"]
        for key, prm in schema.items():
            default = "" if prm.required else json.dumps(prm.default)
            flag = "--" + key.replace("_", "-")
            req = "yes" if prm.required else ""
            lines.append(f"| `{key}` | `{flag}` | {prm.kind} | {default} | {req} | {prm.help} |")
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _coerce(key: str, value: Any, kind: str) -> Any:
    """Check a JSON value against a schema type."""
    ok = True
    if kind == "float":
        ok = _is_number(value)
        value = float(value) if ok else value
    elif kind == "int":
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif kind == "str":
        ok = isinstance(value, str)
    elif kind == "bool":
        ok = isinstance(value, bool)
    elif kind == "float_list":
        ok = isinstance(value, list) and all(_is_number(v) for v in value)
        value = [float(v) for v in value] if ok else value
    elif kind == "int_list":
        ok = isinstance(value, list) and all(
            isinstance(v, int) and not isinstance(v, bool) for v in value
        )
    if not ok:
        raise ConfigError(
            f"type mismatch for key '{key}': expected {kind}, got {value!r}", key, "type_mismatch"
        )
    return value


def _from_text(key: str, text: str, kind: str) -> Any:
    """Parse a command-line value for a schema type."""
    try:
        if kind == "float":
            return float(text)
        if kind == "int":
            return int(text)
        if kind == "bool":
            lowered = text.lower()
            if lowered not in ("true", "false", "1", "0"):
                raise ValueError(text)
            return lowered in ("true", "1")
        if kind == "float_list":
            return [float(t) for t in text.split(",") if t.strip()]
        if kind == "int_list":
            return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(
            f"type mismatch for key '{key}': cannot read {text!r} as {kind}", key, "type_mismatch"
        ) from None
    return text


def _is_comment(key: str) -> bool:
    return key.startswith("_") or key.startswith("//")


def _apply_layer(
    layer: Dict[str, Any], source: str, common: Dict[str, Any], sections: Dict[str, Dict[str, Any]]
) -> Optional[str]:
    """Fold one JSON layer into ``common`` and ``sections``; returns its subcommand, if any."""
    if not isinstance(layer, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    chosen = None
    for key, value in layer.items():
        if _is_comment(key):
            continue
        if key == "subcommand":
            if value not in DISPATCH:
                raise ConfigError(
                    f"{source}: unknown subcommand {value!r}", "subcommand", "unknown_subcommand"
                )
            chosen = value
        elif key in COMMON_DEFAULTS:
            kind = {"out": "str", "format": "str", "seed": "int", "verbose": "bool"}[key]
            common[key] = _coerce(key, value, kind)
        elif key in DISPATCH:
            if not isinstance(value, dict):
                raise ConfigError(
                    f"{source}: section '{key}' must be an object", key, "type_mismatch"
                )
            schema = DISPATCH[key][0]
            for sub_key, sub_value in value.items():
                if _is_comment(sub_key):
                    continue
                if sub_key not in schema:
                    raise ConfigError(
                        f"{source}: unknown key '{key}.{sub_key}'", sub_key, "unknown_key"
                    )
                sections[key][sub_key] = _coerce(sub_key, sub_value, schema[sub_key].kind)
        else:
            raise ConfigError(f"{source}: unknown key '{key}'", key, "unknown_key")
    return chosen


def load_preset(name: str) -> Dict[str, Any]:
    """Load a preset configuration from the package."""
    preset_path = files("anyon_gas.presets") / f"{name}.json"
    try:
        return json.loads(preset_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"unknown preset {name!r}", "preset") from None


def list_presets() -> List[str]:
    return sorted(
        p.name[: -len(".json")]
        for p in files("anyon_gas.presets").iterdir()
        if p.name.endswith(".json")
    )


def _load_file(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}", "config")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}", "config")


def _add_common(ap: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    ap.add_argument("--config", type=str, default=S, help="Path to JSON config")
    ap.add_argument("--preset", type=str, default=S, help="Use a built-in preset")
    ap.add_argument("--out", type=str, default=S, help="Output file")
    ap.add_argument("--format", type=str, default=S, choices=FORMATS, help="csv or json")
    ap.add_argument("--seed", type=int, default=S, help="Random seed")
    ap.add_argument("--verbose", action="store_true", default=S, help="Print progress")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="anyon-gas", description="Numerical experiments on two-dimensional anyon gases."
    )
    _add_common(ap)
    ap.add_argument("--list-presets", action="store_true", help="List available presets")
    ap.add_argument("--schema", action="store_true", help="Print the configuration schema")
    sub = ap.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
    for name, (schema, _, doc) in DISPATCH.items():
        sp = sub.add_parser(name, help=doc, description=doc)
        _add_common(sp)
        for key, prm in schema.items():
            sp.add_argument(
                "--" + key.replace("_", "-"),
                dest=f"param_{key}",
                type=str,
                default=argparse.SUPPRESS,
                metavar=prm.kind.upper(),
                help=prm.help,
            )
    return ap


def config_from_namespace(ns: argparse.Namespace, file: Optional[str] = None) -> RunConfig:
    """Merge schema defaults < preset < config file < flags into a RunConfig."""
    common = dict(COMMON_DEFAULTS)
    sections: Dict[str, Dict[str, Any]] = {name: {} for name in DISPATCH}
    chosen = None

    preset = getattr(ns, "preset", None)
    if preset:
        chosen = _apply_layer(load_preset(preset), f"preset {preset}", common, sections) or chosen
    path = file or getattr(ns, "config", None)
    if path:
        chosen = _apply_layer(_load_file(path), path, common, sections) or chosen
    if getattr(ns, "subcommand", None):
        chosen = ns.subcommand
    if chosen is None:
        raise ConfigError(
            "no subcommand given (flag, config file or preset)", "subcommand", "missing_key"
        )

    for key in COMMON_DEFAULTS:
        if hasattr(ns, key):
            common[key] = getattr(ns, key)
    if common["format"] not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}, got {common['format']!r}", "format")

    schema = DISPATCH[chosen][0]
    params = {key: prm.default for key, prm in schema.items()}
    params.update(sections[chosen])
    for key, prm in schema.items():
        flag = getattr(ns, f"param_{key}", None)
        if flag is not None:
            params[key] = _from_text(key, flag, prm.kind)
    for key, prm in schema.items():
        if prm.required and params[key] is None:
            raise ConfigError(f"missing required key '{key}' for {chosen}", key, "missing_key")
    return RunConfig(
        subcommand=chosen,
        params=params,
        out=common["out"],
        fmt=common["format"],
        seed=common["seed"],
        verbose=common["verbose"],
    )


def parse_config(args: Sequence[str], file: Optional[str] = None) -> RunConfig:
    """Parse command-line ``args`` (and an optional config file) into a RunConfig.

    Argument errors exit with status 2 through argparse; bad values raise ConfigError.
    """
    return config_from_namespace(build_parser().parse_args(list(args)), file)


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------


def run_experiment(cfg: RunConfig) -> OutputRecord:
    if cfg.subcommand not in DISPATCH:
        raise ConfigError(
            f"unknown subcommand {cfg.subcommand!r}", "subcommand", "unknown_subcommand"
        )
    _, handler, _ = DISPATCH[cfg.subcommand]
    columns, tables = handler(cfg.params, cfg)
    parameters = dict(sorted(cfg.params.items()))
    return OutputRecord(
        subcommand=cfg.subcommand,
        parameters=parameters,
        columns=columns,
        provenance=make_provenance(cfg.subcommand, parameters, cfg.seed),
        tables=tables,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    ns = ap.parse_args(None if argv is None else list(argv))

    if ns.list_presets:
        print("Available presets:")
        for name in list_presets():
            print(f"  {name}")
        return 0
    if ns.schema:
        print(schema_markdown())
        return 0

    try:
        cfg = config_from_namespace(ns)
    except ConfigError as exc:
        print(f"❌ config error [{exc.kind}]: {exc}", file=sys.stderr)
        return exc.exit_code

    out = cfg.out_path
    if cfg.verbose:
        print(f"🚀 {cfg.subcommand} seed={cfg.seed} -> {out}")
    try:
        rec = run_experiment(cfg)
    except (ValueError, TypeError, AnyonGasError) as exc:
        print(f"❌ {cfg.subcommand} failed: {exc}", file=sys.stderr)
        if not emit_error(exc, out):
            print(f"⚠️ could not write error record to {out}", file=sys.stderr)
        return 3

    try:
        written = emit_output(rec, out, cfg.fmt)
    except OSError as exc:
        print(f"❌ cannot write {out}: {exc}", file=sys.stderr)
        return 4
    if cfg.verbose:
        print(f"🏁 {cfg.subcommand}: {rec.n_rows} rows -> {', '.join(str(p) for p in written)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
