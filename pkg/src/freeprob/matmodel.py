"""Seeded random-matrix realizations of two free copies of the 2x2 algebra.

A pair of orthogonal 2x2 matrix-unit systems, one fixed and one conjugated
by a Haar-random unitary, realizes the free product of two copies of
(M_2, half-trace) asymptotically: mixed traces of centered words vanish as
the dimension grows, while the purely algebraic relations (squares of
reflections, nilpotency of matrix units, the block identities tying the two
systems together) hold at machine precision in every realization.  These
models are the independent oracle the analytic modules are checked against.

Everything is driven by a single master seed.  Per-object generators are
derived by hashing the seed together with a stable label, so each object
gets an independent stream and rebuilding with the same seed is bitwise
reproducible.
"""

from __future__ import annotations

import hashlib
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import TOL
from .errors import (
    DimensionMismatchError,
    DomainError,
    EigensolveError,
    WordSpecError,
)
from .rdiagonal import OperatorTag

__all__ = [
    "MatrixModel",
    "FreeGroupModel",
    "SpectrumSample",
    "EmpiricalRadialCdf",
    "FactorizationGap",
    "derive_rng",
    "haar_unitary",
    "m2_generators",
    "build_m2_free_m2",
    "build_free_group",
    "realize",
    "f_blocks",
    "exact_identity_residuals",
    "spectrum",
    "empirical_radial_cdf",
    "ks_distance",
    "ntrace",
    "centered",
    "unitary_poly",
    "parse_word",
    "word_trace",
    "trace_factorization_check",
    "seed_average",
]


def derive_rng(master_seed: int, label: str) -> np.random.Generator:
    """Independent generator for (master_seed, label), stable across runs."""
    digest = hashlib.sha256(f"{master_seed}:{label}".encode()).digest()
    words = np.frombuffer(digest, dtype=np.uint32)
    return np.random.default_rng(np.random.SeedSequence(words.tolist()))


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary: QR of a complex Ginibre matrix, phase-fixed.

    Each column of Q is rescaled by the phase of the matching diagonal entry
    of R; without that correction the QR factorization is biased by the
    sign convention of the decomposition.
    """
    if dim < 1:
        raise DomainError(f"unitary dimension must be >= 1, got {dim}")
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g / math.sqrt(2.0))
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return q


def m2_generators() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """The four self-adjoint 2x2 generators: identity, sign flip, rotation, swap."""
    w0 = np.eye(2, dtype=complex)
    w1 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
    w2 = np.array([[0.0, -1.0], [1.0, 0.0]], dtype=complex)
    w3 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    return w0, w1, w2, w3


def _units_from(generators: tuple[np.ndarray, ...]) -> tuple[np.ndarray, ...]:
    g0, g1, g2, g3 = generators
    return (
        (g0 + g1) / 2.0,  # 11
        (g3 - g2) / 2.0,  # 12
        (g3 + g2) / 2.0,  # 21
        (g0 - g1) / 2.0,  # 22
    )


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


_UNIT_NAMES = ("11", "12", "21", "22")


@dataclass(frozen=True, eq=False)
class MatrixModel:
    """One seeded realization of the doubled 2x2 algebra at half_dim n.

    W_i = w_i (x) I_n act as the first copy; V_j = Q W_j Q* with Q Haar as
    the second.  E and F are the matrix-unit systems assembled from W and V.
    All arrays are read-only views owned by the model.
    """

    half_dim: int
    seed: int
    W: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    V: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    E: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    F: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    rotation: np.ndarray

    @property
    def dim(self) -> int:
        return 2 * self.half_dim

    def factor(self, name: str) -> np.ndarray:
        table = self._factor_table()
        if name not in table:
            raise WordSpecError(f"unknown factor {name!r} for a matrix model")
        return table[name]

    def is_unitary_factor(self, name: str) -> bool:
        return name[0] in ("W", "V")

    def _factor_table(self) -> dict[str, np.ndarray]:
        table = {f"W{i}": self.W[i] for i in range(4)}
        table.update({f"V{i}": self.V[i] for i in range(4)})
        table.update({f"E{u}": self.E[i] for i, u in enumerate(_UNIT_NAMES)})
        table.update({f"F{u}": self.F[i] for i, u in enumerate(_UNIT_NAMES)})
        return table


@dataclass(frozen=True, eq=False)
class FreeGroupModel:
    """Two independent Haar unitaries standing in for free group generators."""

    dim: int
    seed: int
    u_a: np.ndarray
    u_b: np.ndarray

    def factor(self, name: str) -> np.ndarray:
        if name == "Ua":
            return self.u_a
        if name == "Ub":
            return self.u_b
        raise WordSpecError(f"unknown factor {name!r} for a free-group model")

    def is_unitary_factor(self, name: str) -> bool:
        return True


def build_m2_free_m2(n: int, seed: int) -> MatrixModel:
    """Haar-rotate one copy of the doubled 2x2 algebra against another."""
    if n < 1:
        raise DomainError(f"half dimension must be >= 1, got {n}")
    eye = np.eye(n, dtype=complex)
    gens = m2_generators()
    w_big = tuple(_freeze(np.kron(g, eye)) for g in gens)
    q = haar_unitary(2 * n, derive_rng(seed, "m2-rotation"))
    v_big = tuple(_freeze(q @ w @ q.conj().T) for w in w_big)
    e_units = tuple(_freeze(u) for u in _units_from(w_big))
    f_units = tuple(_freeze(u) for u in _units_from(v_big))
    return MatrixModel(
        half_dim=n,
        seed=seed,
        W=w_big,
        V=v_big,
        E=e_units,
        F=f_units,
        rotation=_freeze(q),
    )


def build_free_group(dim: int, seed: int) -> FreeGroupModel:
    if dim < 1:
        raise DomainError(f"dimension must be >= 1, got {dim}")
    return FreeGroupModel(
        dim=dim,
        seed=seed,
        u_a=_freeze(haar_unitary(dim, derive_rng(seed, "free-group:a"))),
        u_b=_freeze(haar_unitary(dim, derive_rng(seed, "free-group:b"))),
    )


def realize(tag: OperatorTag | str, model: MatrixModel) -> np.ndarray:
    """The matrix realization of a catalogued operator in this model."""
    tag = OperatorTag(tag)
    w1 = model.W[1]
    e12 = model.E[1]
    f12 = model.F[1]
    if tag is OperatorTag.W1F12:
        return w1 @ f12
    if tag is OperatorTag.E12_plus_F12:
        return e12 + f12
    if tag is OperatorTag.E12_plus_F12_squared:
        s = e12 + f12
        return s @ s
    if tag is OperatorTag.W1_plus_F12:
        return w1 + f12
    s = w1 + f12
    return s @ s


def f_blocks(
    model: MatrixModel, matrix: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """n x n blocks of a matrix relative to the F matrix units.

    Rotating by the model's Haar unitary turns the F units into standard
    blocks, so the components are the blocks of Q* X Q, returned in reading
    order (11, 12, 21, 22).
    """
    n = model.half_dim
    if matrix.shape != (2 * n, 2 * n):
        raise DimensionMismatchError(
            f"expected a {2*n}x{2*n} matrix, got {matrix.shape}"
        )
    q = model.rotation
    y = q.conj().T @ matrix @ q
    return y[:n, :n], y[:n, n:], y[n:, :n], y[n:, n:]


def _maxabs(arr: np.ndarray) -> float:
    return float(np.max(np.abs(arr)))


def exact_identity_residuals(model: MatrixModel) -> dict[str, float]:
    """Max-abs residuals of the relations that hold in every realization.

    These are the algebra's defining relations and their block consequences;
    all of them are zero up to matrix-multiplication rounding, independent
    of the seed.
    """
    n = model.half_dim
    eye = np.eye(2 * n, dtype=complex)
    eye_n = np.eye(n, dtype=complex)
    w1, v1 = model.W[1], model.V[1]
    e12, f12 = model.E[1], model.F[1]

    a, b_adj, b, c = f_blocks(model, w1)

    nil_sum = e12 + f12
    shifted = w1 + f12
    u = w1 @ v1
    sym = u + u.conj().T

    res = {
        "w1_square_identity": _maxabs(w1 @ w1 - eye),
        "v1_square_identity": _maxabs(v1 @ v1 - eye),
        "e12_square_zero": _maxabs(e12 @ e12),
        "f12_square_zero": _maxabs(f12 @ f12),
        "unit_product_e": _maxabs(model.E[1] @ model.E[2] - model.E[0]),
        "unit_sum_identity": _maxabs(model.E[0] + model.E[3] - eye),
        "nilpotent_sum_square": _maxabs(
            nil_sum @ nil_sum - (e12 @ f12 + f12 @ e12)
        ),
        "shifted_square_expansion": _maxabs(
            shifted @ shifted - eye - w1 @ f12 - f12 @ w1
        ),
        "symmetrized_haar_commutes": _maxabs(sym @ w1 - w1 @ sym),
        "block_anticommutation": _maxabs(c @ b + b @ a),
    }

    # triangular block forms driving the catalog's squared-operator laws
    t1 = w1 @ f12 @ w1 + f12
    t1_sq = t1 @ t1
    p11, p12, p21, p22 = f_blocks(model, t1_sq)
    bb = b @ b
    res["nilpotent_triangular_lower"] = _maxabs(p21)
    res["nilpotent_triangular_diag"] = max(_maxabs(p11 - bb), _maxabs(p22 - bb))

    t2 = w1 @ v1 @ w1 + f12
    t2_sq = t2 @ t2
    q11, q12, q21, q22 = f_blocks(model, t2_sq)
    diag = eye_n + 2.0 * b @ a
    res["shifted_triangular_lower"] = _maxabs(q21)
    res["shifted_triangular_diag"] = max(_maxabs(q11 - diag), _maxabs(q22 - diag))
    return res


# -- spectra ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectrumSample:
    """All eigenvalues of one realized matrix, with provenance."""

    eigenvalues: np.ndarray
    source: str
    seed: int | None
    dimension: int
    norm: float  # normalized Frobenius norm of the source matrix

    def __post_init__(self) -> None:
        vals = np.asarray(self.eigenvalues, dtype=complex)
        object.__setattr__(self, "eigenvalues", vals)
        if vals.ndim != 1 or vals.size != self.dimension:
            raise DimensionMismatchError(
                f"expected {self.dimension} eigenvalues, got shape {vals.shape}"
            )


def spectrum(
    matrix: np.ndarray, source: str = "", seed: int | None = None
) -> SpectrumSample:
    """Dense non-symmetric eigensolve with failure diagnostics."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got {matrix.shape}")
    dim = matrix.shape[0]
    norm = float(np.linalg.norm(matrix, "fro")) / math.sqrt(dim)
    try:
        vals = np.linalg.eigvals(matrix)
    except np.linalg.LinAlgError as exc:
        row_sum = float(np.max(np.abs(matrix).sum(axis=1)))
        raise EigensolveError(
            f"eigensolve failed for {source or 'matrix'} (dim={dim}, "
            f"normalized Frobenius norm={norm:.3e}, max row sum={row_sum:.3e}): {exc}"
        ) from exc
    return SpectrumSample(
        eigenvalues=vals, source=source, seed=seed, dimension=dim, norm=norm
    )


@dataclass(frozen=True, eq=False)
class EmpiricalRadialCdf:
    """Step CDF of |eigenvalue - center| with an explicit atom at the center."""

    radii: np.ndarray
    cumulative: np.ndarray
    atom_fraction: float
    threshold: float
    # fraction of points that would join the atom if the threshold grew 10x;
    # a sharp kernel keeps this equal to atom_fraction
    sensitivity: float


def empirical_radial_cdf(
    sample: SpectrumSample,
    center: complex = 0j,
    zero_threshold: float | None = None,
) -> EmpiricalRadialCdf:
    """Empirical radial law about a center, atom counted below the threshold."""
    if sample.eigenvalues.size == 0:
        raise DomainError("empty spectrum sample")
    if zero_threshold is None:
        zero_threshold = 1e-8 * max(sample.norm, 1e-300)
    radii = np.abs(sample.eigenvalues - complex(center))
    radii = np.where(radii < zero_threshold, 0.0, radii)
    radii = np.sort(radii)
    n = radii.size
    cumulative = np.arange(1, n + 1, dtype=float) / n
    atom = float(np.count_nonzero(radii == 0.0)) / n
    wider = float(np.count_nonzero(radii < 10.0 * zero_threshold)) / n
    return EmpiricalRadialCdf(
        radii=radii,
        cumulative=cumulative,
        atom_fraction=atom,
        threshold=float(zero_threshold),
        sensitivity=wider,
    )


def ks_distance(empirical: EmpiricalRadialCdf | np.ndarray, cdf) -> float:
    """Kolmogorov-Smirnov distance between sampled radii and a model CDF.

    Tied radii (the atom at the center in particular) are treated as one
    jump of the empirical CDF, compared against the model's value and left
    limit at that radius; the left limit at radius 0 is 0.
    """
    radii = empirical.radii if isinstance(empirical, EmpiricalRadialCdf) else empirical
    radii = np.asarray(radii, dtype=float)
    n = radii.size
    if n == 0:
        raise DomainError("KS distance needs a nonempty sample")
    values, counts = np.unique(radii, return_counts=True)
    cum_hi = np.cumsum(counts) / n
    cum_lo = cum_hi - counts / n
    model = np.asarray(cdf(values), dtype=float)
    left_points = np.nextafter(values, -np.inf)
    model_left = np.asarray(cdf(left_points), dtype=float)
    model_left = np.where(values <= 0.0, 0.0, model_left)
    return float(
        max(np.max(np.abs(model - cum_hi)), np.max(np.abs(model_left - cum_lo)))
    )


# -- traces and words --------------------------------------------------------


def ntrace(matrix: np.ndarray) -> complex:
    """Normalized trace tr/dim."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got {matrix.shape}")
    return complex(np.trace(matrix)) / matrix.shape[0]


def centered(matrix: np.ndarray) -> np.ndarray:
    """Subtract the normalized trace times the identity."""
    matrix = np.asarray(matrix)
    return matrix - ntrace(matrix) * np.eye(matrix.shape[0], dtype=matrix.dtype)


def unitary_poly(u: np.ndarray, coeffs: dict[int, complex]) -> np.ndarray:
    """sum_k c_k u^k with negative powers read as powers of the adjoint."""
    dim = u.shape[0]
    out = np.zeros((dim, dim), dtype=complex)
    for power, coeff in coeffs.items():
        base = u if power >= 0 else u.conj().T
        out += coeff * np.linalg.matrix_power(base, abs(power))
    return out


_TOKEN_RE = re.compile(
    r"^(?:c\((?P<cname>[A-Za-z]\w*)(?:\^(?P<cexp>-?\d+))?\)"
    r"|(?P<name>[A-Za-z]\w*)(?:\^(?P<exp>-?\d+))?)$"
)


@dataclass(frozen=True)
class WordFactor:
    name: str
    power: int = 1
    center: bool = False


def parse_word(text: str) -> tuple[WordFactor, ...]:
    """Parse a whitespace-separated word like "c(W1) V1^2 c(F12)".

    Each token is NAME, NAME^k, or c(NAME[^k]); c() centers the factor by
    subtracting its normalized trace.  Negative powers are only meaningful
    for unitary factors and are validated at evaluation time.
    """
    tokens = text.split()
    if not tokens:
        raise WordSpecError("empty word")
    factors = []
    for token in tokens:
        m = _TOKEN_RE.match(token)
        if m is None:
            raise WordSpecError(f"cannot parse word token {token!r}")
        name = m.group("cname") or m.group("name")
        exp_text = m.group("cexp") if m.group("cname") else m.group("exp")
        power = int(exp_text) if exp_text is not None else 1
        if power == 0:
            raise WordSpecError(f"zero power in token {token!r}")
        factors.append(
            WordFactor(name=name, power=power, center=m.group("cname") is not None)
        )
    return tuple(factors)


def word_trace(model: MatrixModel | FreeGroupModel, word: str) -> complex:
    """Normalized trace of a word in the model's named factors."""
    factors = parse_word(word)
    dim = model.dim
    product = np.eye(dim, dtype=complex)
    for factor in factors:
        base = model.factor(factor.name)
        if factor.power < 0 and not model.is_unitary_factor(factor.name):
            raise WordSpecError(
                f"negative power of non-unitary factor {factor.name!r}"
            )
        mat = base if factor.power >= 0 else base.conj().T
        mat = np.linalg.matrix_power(mat, abs(factor.power))
        if factor.center:
            mat = centered(mat)
        product = product @ mat
    return ntrace(product)


# -- the trace factorization identity ----------------------------------------


@dataclass(frozen=True)
class FactorizationGap:
    """Both sides of the factorized-trace identity and their distance."""

    lhs: complex
    rhs: complex

    @property
    def gap(self) -> float:
        return abs(self.lhs - self.rhs)


def trace_factorization_check(
    a: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    d: np.ndarray,
    z: np.ndarray,
) -> FactorizationGap:
    """Compare tau((AZB)*(CZD)) with tau(A*C) tau(B*D) tau(Z*Z).

    The identity holds exactly when Z is a centered element free from the
    algebra generating A, B, C, D; in the matrix model it holds up to a
    finite-dimension correction.  A Haar unitary is centered only up to a
    trace of order 1/dim, so only grossly uncentered Z is rejected.
    """
    mats = [np.asarray(m, dtype=complex) for m in (a, b, c, d, z)]
    dim = mats[0].shape[0]
    for m in mats:
        if m.shape != (dim, dim):
            raise DimensionMismatchError("all five factors must share one square shape")
    a, b, c, d, z = mats
    scale = max(float(np.linalg.norm(z, "fro")) / math.sqrt(dim), 1e-300)
    if abs(ntrace(z)) > 0.1 * scale:
        raise DomainError(
            f"Z must be centered: normalized trace is {ntrace(z):.3e}"
        )
    left = a @ z @ b
    right = c @ z @ d
    lhs = ntrace(left.conj().T @ right)
    rhs = (
        ntrace(a.conj().T @ c)
        * ntrace(b.conj().T @ d)
        * ntrace(z.conj().T @ z)
    )
    return FactorizationGap(lhs=lhs, rhs=rhs)


def seed_average(fn, seeds, threads: int = 1):
    """Mean of fn(seed) over seeds, reduced in the given order.

    Tasks are independent; with threads > 1 they run on a pool but the
    reduction order (and so the floating-point result) stays fixed.
    """
    seeds = list(seeds)
    if not seeds:
        raise DomainError("seed_average needs at least one seed")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(fn, seeds))
    else:
        values = [fn(s) for s in seeds]
    return sum(values) / len(values)
