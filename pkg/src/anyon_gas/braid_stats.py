"""
Braid-group data for anyons.

- Abelian exchange phases and the fractionality functions alpha_2, alpha_N, alpha_infinity
- Unitary braid representations: abelian, Burau (3 strands), Ising, Fibonacci
- Pair-exchange operators, their spectra and the exclusion parameters beta_Np / alpha_Nn

Phases are measured in units of pi throughout.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

Real = Union[float, int, Fraction]

PHI = (1.0 + math.sqrt(5.0)) / 2.0
RELATION_TOL = 1e-10
PHASE_TOL = 1e-9
MAX_DIM = 4096


# ---------------------------------------------------------------------------
# Statistics parameter and fractionality
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StatisticsParameter:
    """Abelian statistics parameter alpha, optionally carried as an exact fraction.

    ``irrational=True`` marks a value known to be irrational; alpha_infinity is then 0.
    """

    alpha: float
    as_rational: Optional[Fraction] = None
    irrational: bool = False

    def __post_init__(self) -> None:
        if not math.isfinite(self.alpha):
            raise ValueError(f"alpha must be finite, got {self.alpha}")
        if self.as_rational is not None:
            if self.irrational:
                raise ValueError("a parameter cannot be both rational and irrational")
            if abs(float(self.as_rational) - self.alpha) > 1e-12 * max(1.0, abs(self.alpha)):
                raise ValueError("as_rational does not match alpha")

    @classmethod
    def from_fraction(cls, numerator: int, denominator: int) -> "StatisticsParameter":
        frac = Fraction(numerator, denominator)  # reduces, sign on numerator
        return cls(alpha=float(frac), as_rational=frac)

    @property
    def alpha_2(self) -> float:
        return float(alpha_two(self.as_rational if self.as_rational is not None else self.alpha))


def _check_finite(alpha: Real) -> None:
    if isinstance(alpha, Fraction):
        return
    if not math.isfinite(float(alpha)):
        raise ValueError(f"alpha must be finite, got {alpha}")


def alpha_two(alpha: Real) -> Real:
    """Distance of alpha to the nearest even integer (2-periodized |alpha|).

    Exact when alpha is a Fraction.
    """
    _check_finite(alpha)
    if isinstance(alpha, Fraction):
        q = round(alpha / 2)
        return abs(alpha - 2 * q)
    a = float(alpha)
    return abs(a - 2.0 * round(a / 2.0))


def alpha_N(alpha: Real, N: int) -> Real:
    """N-fractionality: min over p in {0..N-2} of alpha_two((2p+1) alpha)."""
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    _check_finite(alpha)
    return min(alpha_two((2 * p + 1) * alpha) for p in range(N - 1))


def alpha_infinity(param: Union[StatisticsParameter, Fraction]) -> Fraction:
    """Odd-numerator popcorn function: 1/nu for reduced mu/nu with mu odd, else 0."""
    if isinstance(param, Fraction):
        frac: Optional[Fraction] = param
        irrational = False
    elif isinstance(param, StatisticsParameter):
        frac = param.as_rational
        irrational = param.irrational
    else:
        raise TypeError("alpha_infinity needs an exact rational or a StatisticsParameter")
    if frac is None:
        if irrational:
            return Fraction(0)
        raise ValueError("alpha_infinity requires an exact rational alpha or an irrational flag")
    if frac.numerator % 2 == 1:
        return Fraction(1, frac.denominator)
    return Fraction(0)


def exchange_phase(alpha: float, p: int) -> complex:
    """Abelian phase of the pair exchange that encircles p other particles."""
    if p < 0:
        raise ValueError(f"p must be >= 0, got {p}")
    return complex(np.exp(1j * math.pi * (2 * p + 1) * alpha))


def popcorn_table(max_denominator: int) -> List[Tuple[Fraction, Fraction]]:
    """All reduced mu/nu in [0, 1] with nu <= max_denominator, paired with alpha_infinity."""
    if max_denominator < 1:
        raise ValueError("max_denominator must be >= 1")
    seen = set()
    rows = []
    for nu in range(1, max_denominator + 1):
        for mu in range(0, nu + 1):
            frac = Fraction(mu, nu)
            if frac in seen:
                continue
            seen.add(frac)
            rows.append((frac, alpha_infinity(frac)))
    rows.sort(key=lambda row: row[0])
    return rows


# ---------------------------------------------------------------------------
# Models and representations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Abelian:
    alpha: float


@dataclass(frozen=True)
class Burau3:
    """Unitarized reduced Burau representation of B_3, w on the unit circle, |arg w| < pi/3."""

    w: complex

    def __post_init__(self) -> None:
        if abs(abs(self.w) - 1.0) > 1e-12:
            raise ValueError(f"Burau parameter must lie on the unit circle, got |w|={abs(self.w)}")
        if abs(np.angle(self.w)) >= math.pi / 3.0:
            raise ValueError("Burau parameter requires |arg w| < pi/3")

    @classmethod
    def from_alpha(cls, alpha: float) -> "Burau3":
        return cls(w=complex(np.exp(1j * math.pi * alpha)))


@dataclass(frozen=True)
class Ising:
    chirality: str = "+"

    def __post_init__(self) -> None:
        if self.chirality not in ("+", "-"):
            raise ValueError(f"chirality must be '+' or '-', got {self.chirality!r}")


@dataclass(frozen=True)
class Fibonacci:
    chirality: str = "+"

    def __post_init__(self) -> None:
        if self.chirality not in ("+", "-"):
            raise ValueError(f"chirality must be '+' or '-', got {self.chirality!r}")


AnyonModel = Union[Abelian, Burau3, Ising, Fibonacci]


@dataclass(frozen=True)
class BraidWord:
    """Braid word on ``strands`` strands; letters are (generator index j, sign)."""

    strands: int
    letters: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        if self.strands < 1:
            raise ValueError("strands must be positive")
        for j, sign in self.letters:
            if not 1 <= j < self.strands:
                raise ValueError(f"generator index {j} out of range for {self.strands} strands")
            if sign not in (1, -1):
                raise ValueError(f"letter sign must be +1 or -1, got {sign}")

    @property
    def writhe(self) -> int:
        return sum(sign for _, sign in self.letters)


def braid_word_from_string(text: str, strands: int) -> BraidWord:
    """Parse a word like ``"1 -2 1"`` (signed generator indices)."""
    letters = []
    for token in text.replace(",", " ").split():
        value = int(token)
        if value == 0:
            raise ValueError("generator index 0 is not valid")
        letters.append((abs(value), 1 if value > 0 else -1))
    return BraidWord(strands=strands, letters=tuple(letters))


@dataclass(frozen=True)
class ExchangeRep:
    N: int
    dim: int
    generators: Tuple[np.ndarray, ...] = field(repr=False)
    model: Optional[AnyonModel] = None


# Fusion data. Labels: "1" vacuum, "x" the anyon itself, "psi" the Ising fermion.
_FusionRules = Dict[Tuple[str, str], Tuple[str, ...]]

_FIB_RULES: _FusionRules = {
    ("1", "1"): ("1",),
    ("1", "x"): ("x",),
    ("x", "1"): ("x",),
    ("x", "x"): ("1", "x"),
}

_ISING_RULES: _FusionRules = {
    ("1", "1"): ("1",),
    ("1", "x"): ("x",),
    ("x", "1"): ("x",),
    ("1", "psi"): ("psi",),
    ("psi", "1"): ("psi",),
    ("psi", "psi"): ("1",),
    ("x", "psi"): ("x",),
    ("psi", "x"): ("x",),
    ("x", "x"): ("1", "psi"),
}


def _fusion_data(model: AnyonModel) -> Tuple[_FusionRules, Dict[str, complex], np.ndarray]:
    """Fusion rules, R^{xx}_c eigenvalues and the 2x2 F^{xxx}_x block for a model."""
    if isinstance(model, Fibonacci):
        r = {"1": np.exp(4j * math.pi / 5.0), "x": np.exp(-3j * math.pi / 5.0)}
        f = np.array(
            [[1.0 / PHI, 1.0 / math.sqrt(PHI)], [1.0 / math.sqrt(PHI), -1.0 / PHI]],
            dtype=complex,
        )
        return _FIB_RULES, r, f
    if isinstance(model, Ising):
        r = {"1": np.exp(-1j * math.pi / 8.0), "psi": np.exp(3j * math.pi / 8.0)}
        f = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)
        return _ISING_RULES, r, f
    raise TypeError(f"no fusion data for {type(model).__name__}")


def _fusion_paths(rules: _FusionRules, N: int) -> List[Tuple[str, ...]]:
    """Left-associated fusion-tree paths (x_1, ..., x_N) with x_1 = x, all total charges."""
    paths: List[Tuple[str, ...]] = [("x",)]
    for _ in range(N - 1):
        grown = []
        for path in paths:
            for nxt in rules[(path[-1], "x")]:
                grown.append(path + (nxt,))
        paths = grown
    return paths


def _fusion_dim(model: AnyonModel, N: int) -> int:
    if isinstance(model, (Abelian,)):
        return 1
    if isinstance(model, Burau3):
        return 2
    if isinstance(model, Fibonacci):
        a, b = 1, 1  # F_1, F_2
        for _ in range(N):
            a, b = b, a + b
        return a  # F_{N+1}
    return 2 ** (N // 2)


def dim_sequence(model: AnyonModel, N_max: int) -> List[int]:
    """D_N for N = 2..N_max without building matrices."""
    return [_fusion_dim(model, N) for N in range(2, N_max + 1)]


def _local_block(
    rules: _FusionRules, r: Dict[str, complex], f: np.ndarray, a: str, b: str
) -> Tuple[Tuple[str, ...], np.ndarray]:
    """Action of one exchange on the middle label m of (a -> m -> b), as F^dag R F."""
    middles = tuple(m for m in rules[(a, "x")] if b in rules[(m, "x")])
    channels = tuple(c for c in rules[("x", "x")] if b in rules.get((a, c), ()))
    if len(middles) == 1:
        return middles, np.array([[r[channels[0]]]], dtype=complex)
    diag = np.diag([r[c] for c in channels])
    return middles, f.conj().T @ diag @ f


def _fusion_generators(model: AnyonModel, N: int) -> List[np.ndarray]:
    rules, r, f = _fusion_data(model)
    paths = _fusion_paths(rules, N)
    index = {path: i for i, path in enumerate(paths)}
    dim = len(paths)
    gens = []
    for j in range(1, N):
        g = np.zeros((dim, dim), dtype=complex)
        for path, col in index.items():
            full = ("1",) + path  # prepend x_0 = vacuum
            a, b = full[j - 1], full[j + 1]
            middles, block = _local_block(rules, r, f, a, b)
            k = middles.index(full[j])
            for kk, m in enumerate(middles):
                new = full[:j] + (m,) + full[j + 1 :]
                g[index[new[1:]], col] += block[kk, k]
        if model.chirality == "-":  # type: ignore[union-attr]
            g = g.conj()
        gens.append(g)
    return gens


def _burau_generators(w: complex) -> List[np.ndarray]:
    alpha = float(np.angle(w)) / math.pi
    c = 1.0 / (2.0 * math.cos(math.pi * alpha))
    s = math.sqrt(max(0.0, 1.0 - c * c))
    f = np.array([[c, s], [s, -c]], dtype=complex)
    s1 = np.diag([-(w**2), 1.0]).astype(complex)
    return [s1, f @ s1 @ f]


def build_rep(model: AnyonModel, N: int, max_dim: int = MAX_DIM) -> ExchangeRep:
    """Unitary representation of B_N for ``model`` on N strands."""
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    if isinstance(model, Burau3) and N != 3:
        raise ValueError(f"Burau3 is only defined for N=3, got N={N}")
    dim = _fusion_dim(model, N)
    if dim > max_dim:
        raise ValueError(f"representation dimension {dim} exceeds max_dim={max_dim}")

    if isinstance(model, Abelian):
        phase = np.exp(1j * math.pi * model.alpha)
        gens = [np.array([[phase]], dtype=complex) for _ in range(N - 1)]
    elif isinstance(model, Burau3):
        gens = _burau_generators(model.w)
    elif isinstance(model, (Ising, Fibonacci)):
        gens = _fusion_generators(model, N)
        if N >= 7 and dim < N - 2:
            raise RuntimeError(f"nonabelian dimension {dim} too small for N={N}")
    else:
        raise TypeError(f"unknown anyon model {model!r}")

    for g in gens:
        g.setflags(write=False)
    return ExchangeRep(N=N, dim=dim, generators=tuple(gens), model=model)


def rep_of_word(rep: ExchangeRep, word: BraidWord) -> np.ndarray:
    """Ordered product of generator matrices (inverse = adjoint for negative letters)."""
    if word.strands != rep.N:
        raise ValueError(f"word has {word.strands} strands, representation has {rep.N}")
    out = np.eye(rep.dim, dtype=complex)
    for j, sign in word.letters:
        g = rep.generators[j - 1]
        out = out @ (g if sign > 0 else g.conj().T)
    return out


def pair_exchange_word(N: int, p: int) -> BraidWord:
    """sigma_1 ... sigma_p sigma_{p+1} sigma_p ... sigma_1."""
    if not 0 <= p <= N - 2:
        raise ValueError(f"p must lie in [0, {N - 2}], got {p}")
    up = [(j, 1) for j in range(1, p + 2)]
    down = [(j, 1) for j in range(p, 0, -1)]
    return BraidWord(strands=N, letters=tuple(up + down))


def pair_exchange_operator(rep: ExchangeRep, p: int) -> np.ndarray:
    return rep_of_word(rep, pair_exchange_word(rep.N, p))


@dataclass(frozen=True)
class ExchangeSpectrum:
    phases: Tuple[float, ...]
    multiplicities: Tuple[int, ...]

    @property
    def dim(self) -> int:
        return sum(self.multiplicities)


def _unitarity_residual(u: np.ndarray) -> float:
    return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]), 2))


def exchange_spectrum(u: np.ndarray, tol: float = PHASE_TOL) -> ExchangeSpectrum:
    """Eigenphases of a unitary in (-1, 1] (units of pi), clustered within tol."""
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError("exchange_spectrum needs a square matrix")
    residual = _unitarity_residual(u)
    if residual > max(tol, 1e-10) * max(1, u.shape[0]):
        raise ValueError(f"matrix is not unitary (residual {residual:.3e})")

    phases = np.angle(np.linalg.eigvals(u)) / math.pi
    phases = np.where(phases <= -1.0 + tol, 1.0, phases)
    phases.sort()

    clusters: List[List[float]] = []
    for value in phases:
        if clusters and value - clusters[-1][-1] <= tol:
            clusters[-1].append(float(value))
        else:
            clusters.append([float(value)])
    return ExchangeSpectrum(
        phases=tuple(float(np.mean(c)) for c in clusters),
        multiplicities=tuple(len(c) for c in clusters),
    )


def beta_Np(rep: ExchangeRep, p: int) -> float:
    """Arcwise distance (units of pi) from spec U_{N,p} to +1."""
    spec = exchange_spectrum(pair_exchange_operator(rep, p))
    return min(abs(g) for g in spec.phases)


def alpha_Nn(rep: ExchangeRep, n: int) -> float:
    if not 2 <= n <= rep.N:
        raise ValueError(f"n must lie in [2, {rep.N}], got {n}")
    return min(beta_Np(rep, p) for p in range(n - 1))


def lt_nonabelian_coefficient(rep: ExchangeRep) -> float:
    """Nearest-neighbour exchange parameter alpha_{N,2} setting the degeneracy pressure."""
    return alpha_Nn(rep, 2)


@dataclass(frozen=True)
class BraidRelationReport:
    unitarity: float
    yang_baxter: float
    far_commutation: float
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.unitarity, self.yang_baxter, self.far_commutation) <= self.tol


def verify_braid_relations(rep: ExchangeRep, tol: float = RELATION_TOL) -> BraidRelationReport:
    gens: Sequence[np.ndarray] = rep.generators
    unitarity = max((_unitarity_residual(g) for g in gens), default=0.0)
    yang_baxter = 0.0
    for a, b in zip(gens, gens[1:]):
        yang_baxter = max(yang_baxter, float(np.linalg.norm(a @ b @ a - b @ a @ b, 2)))
    far = 0.0
    for j in range(len(gens)):
        for k in range(j + 2, len(gens)):
            a, b = gens[j], gens[k]
            far = max(far, float(np.linalg.norm(a @ b - b @ a, 2)))
    return BraidRelationReport(
        unitarity=unitarity, yang_baxter=yang_baxter, far_commutation=far, tol=tol
    )
