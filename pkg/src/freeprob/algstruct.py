"""Structure of matrix algebras: closure, commutant, radical, invariant
subspaces, and transitivity decisions.

A unital subalgebra of M_N either acts without proper invariant subspaces,
in which case it is all of M_N, or it leaves a subspace invariant that can
be produced constructively: the image of the trace radical when the algebra
is not semisimple, or an eigenspace of a non-scalar commutant element
otherwise.  Both discovery routes re-verify their answer against the raw
generators, and the "no subspace" branch cross-checks dim = N^2, so a wrong
decision surfaces as a hard internal failure instead of a quiet wrong
boolean.  The k-fold transitivity decision runs two independent routes
(ampliation lattice and orbit sampling) and treats any certified
disagreement the same way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SIZE, TOL
from .errors import DimensionMismatchError, DomainError, InternalInconsistencyError

__all__ = [
    "AlgebraSpan",
    "SubspaceReport",
    "BlockProjectionReport",
    "close_algebra",
    "commutant",
    "radical",
    "find_invariant_subspace",
    "is_transitive",
    "kfold_transitive",
    "block_projection_check",
    "normal_commutation_check",
]


# -- span plumbing -----------------------------------------------------------


def _orthonormal_rows(stack: np.ndarray, rtol: float) -> tuple[np.ndarray, bool]:
    """Orthonormal row basis of the row space, with borderline-gap flag.

    Rank is cut at rtol relative to the top singular value; if the ratio
    between the smallest kept and largest dropped singular value is below
    the configured gap ratio the cut is ambiguous and gets flagged.
    """
    if stack.size == 0:
        return stack.reshape(0, stack.shape[-1]), False
    _, s, vh = np.linalg.svd(stack, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return vh[:0], False
    keep = s > rtol * s[0]
    rank = int(keep.sum())
    flagged = (
        0 < rank < s.size and s[rank - 1] / max(s[rank], np.finfo(float).tiny)
        < TOL.gap_flag_ratio
    )
    return vh[:rank], bool(flagged)


def _as_matrices(rows: np.ndarray, n: int) -> tuple[np.ndarray, ...]:
    return tuple(row.reshape(n, n) for row in rows)


@dataclass(frozen=True, eq=False)
class AlgebraSpan:
    """Unital algebra presented by a trace-orthonormal basis.

    basis elements b satisfy trace(b_i^* b_j) = delta_ij; the identity lies
    in their span and the span is closed under products (largest relative
    projection residual recorded as closure_residual).  gap_flagged marks a
    borderline singular-value cut during orthonormalization.
    """

    ambient_dim: int
    basis: tuple[np.ndarray, ...]
    generators: tuple[np.ndarray, ...]
    closure_residual: float = 0.0
    gap_flagged: bool = False

    def __post_init__(self) -> None:
        n = self.ambient_dim
        if not self.basis:
            raise DomainError("algebra span needs at least one basis element")
        rows = np.array([b.ravel() for b in self.basis])
        gram = rows.conj() @ rows.T
        if np.abs(gram - np.eye(len(self.basis))).max() > 1e-8:
            raise DomainError("basis is not trace-orthonormal")
        ident = np.eye(n, dtype=complex).ravel()
        resid = ident - rows.T @ (rows.conj() @ ident)
        if np.linalg.norm(resid) > TOL.invariance_atol * np.sqrt(n):
            raise DomainError("identity does not lie in the span")

    @property
    def dim(self) -> int:
        return len(self.basis)

    def project_coefficients(self, matrix: np.ndarray) -> np.ndarray:
        """Coefficients of the trace-orthogonal projection onto the span."""
        rows = np.array([b.ravel() for b in self.basis])
        return rows.conj() @ np.asarray(matrix, dtype=complex).ravel()

    def contains(self, matrix: np.ndarray, rtol: float | None = None) -> bool:
        rtol = TOL.rank_rtol if rtol is None else rtol
        m = np.asarray(matrix, dtype=complex)
        coef = self.project_coefficients(m)
        rows = np.array([b.ravel() for b in self.basis])
        resid = np.linalg.norm(m.ravel() - rows.T @ coef)
        return resid <= rtol * max(1.0, np.linalg.norm(m))


def close_algebra(generators, ambient_dim: int | None = None) -> AlgebraSpan:
    """Smallest unital algebra containing the generators.

    Iterates pairwise products with rank-revealing re-orthonormalization
    until the dimension stabilizes; the final pass measures how far the
    last product set sticks out of the span, which is the closure residual.
    """
    gens = tuple(np.asarray(g, dtype=complex) for g in generators)
    for g in gens:
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise DimensionMismatchError(f"generator has shape {g.shape}")
    dims = {g.shape[0] for g in gens}
    if len(dims) > 1:
        raise DimensionMismatchError(f"generators of mixed sizes {sorted(dims)}")
    if gens:
        n = gens[0].shape[0]
        if ambient_dim is not None and ambient_dim != n:
            raise DimensionMismatchError(
                f"ambient_dim {ambient_dim} != generator size {n}"
            )
    elif ambient_dim is None:
        raise DomainError("need ambient_dim when the generator list is empty")
    else:
        n = ambient_dim
    if n < 1:
        raise DomainError("ambient dimension must be positive")

    seed = [np.eye(n, dtype=complex)] + list(gens)
    rows, flagged = _orthonormal_rows(np.array([m.ravel() for m in seed]), TOL.rank_rtol)
    # products of basis elements either grow the span or certify closure
    for _ in range(n * n + 1):
        mats = _as_matrices(rows, n)
        products = [a @ b for a in mats for b in mats]
        prows = np.array([p.ravel() for p in products])
        new_rows, pflag = _orthonormal_rows(np.vstack([rows, prows]), TOL.rank_rtol)
        flagged = flagged or pflag
        if new_rows.shape[0] == rows.shape[0]:
            resid_mat = prows - (prows @ rows.conj().T) @ rows
            norms = np.linalg.norm(prows, axis=1)
            resid = np.linalg.norm(resid_mat, axis=1) / np.maximum(norms, 1.0)
            return AlgebraSpan(
                ambient_dim=n,
                basis=mats,
                generators=gens,
                closure_residual=float(resid.max()) if resid.size else 0.0,
                gap_flagged=flagged,
            )
        rows = new_rows
    raise InternalInconsistencyError(
        "algebra closure failed to stabilize within the dimension bound"
    )


# -- commutant and radical ---------------------------------------------------


def commutant(span: AlgebraSpan) -> list[np.ndarray]:
    """Trace-orthonormal basis of {X : XB = BX for every B in the span}.

    Row-major vectorization turns X -> XB - BX into the linear map
    kron(I, B^T) - kron(B, I); the commutant is the stacked nullspace.
    """
    n = span.ambient_dim
    eye = np.eye(n, dtype=complex)
    blocks = [np.kron(eye, b.T) - np.kron(b, eye) for b in span.basis]
    system = np.vstack(blocks)
    # rows >= cols always holds here, so the reduced SVD still returns the
    # complete right-singular set
    _, s, vh = np.linalg.svd(system, full_matrices=False)
    cutoff = TOL.rank_rtol * (s[0] if s.size and s[0] > 0 else 1.0)
    null_rows = vh[np.sum(s > cutoff) :].conj()
    return [row.reshape(n, n) for row in null_rows]


def radical(span: AlgebraSpan) -> list[np.ndarray]:
    """Trace-orthonormal basis of {x in span : trace(x b) = 0 for all b}.

    Over the complex field this trace-form kernel is the Jacobson radical
    of the matrix algebra, so every returned element is nilpotent.
    """
    rows = np.array([b.ravel() for b in span.basis])
    # non-conjugated pairing trace(b_i b_j): bilinear, not sesquilinear
    gram = np.array([[np.trace(a @ b) for b in span.basis] for a in span.basis])
    _, s, vh = np.linalg.svd(gram)
    cutoff = TOL.rank_rtol * (s[0] if s.size and s[0] > 0 else 1.0)
    null = vh[np.sum(s > cutoff) :].conj()
    coef, _ = _orthonormal_rows(null, TOL.rank_rtol)
    n = span.ambient_dim
    return [(c @ rows).reshape(n, n) for c in coef]


# -- invariant subspaces -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SubspaceReport:
    """Outcome of invariant-subspace discovery.

    kind is "none", "radical_image", or "commutant_eigenspace"; basis holds
    orthonormal column vectors spanning the subspace (shape (N, m), empty
    for kind "none"); verified records that every original generator mapped
    the subspace into itself within tolerance, with the worst residual.
    """

    kind: str
    basis: np.ndarray
    verified: bool
    residual: float

    @property
    def dimension(self) -> int:
        return self.basis.shape[1]

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "dimension": self.dimension,
            "verified": self.verified,
            "residual": self.residual,
            "basis": [
                [[float(z.real), float(z.imag)] for z in self.basis[:, j]]
                for j in range(self.basis.shape[1])
            ],
        }


def _invariance_residual(generators, vectors: np.ndarray) -> float:
    """Worst relative norm of the part of g*V sticking out of span(V)."""
    worst = 0.0
    for g in generators:
        gv = g @ vectors
        out = gv - vectors @ (vectors.conj().T @ gv)
        scale = max(1.0, float(np.linalg.norm(g, 2)))
        worst = max(worst, float(np.linalg.norm(out, 2)) / scale)
    return worst


def _column_space(matrix: np.ndarray) -> np.ndarray:
    u, s, _ = np.linalg.svd(matrix, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return u[:, :0]
    return u[:, s > TOL.rank_rtol * s[0]]


def _is_scalar(matrix: np.ndarray) -> bool:
    n = matrix.shape[0]
    c = np.trace(matrix) / n
    return bool(
        np.abs(matrix - c * np.eye(n)).max()
        <= TOL.rank_rtol * max(1.0, float(np.abs(matrix).max()))
    )


def _eigenspace_candidates(x: np.ndarray):
    """Geometric eigenspaces of x, one per eigenvalue cluster.

    Defective eigenvalues of a numeric matrix scatter by far more than
    machine epsilon, so eigenvalues are clustered first and the nullspace
    cut is widened to the cluster radius.
    """
    n = x.shape[0]
    eigs = np.linalg.eigvals(x)
    scale = max(1.0, float(np.abs(eigs).max()))
    clusters: list[list[int]] = []
    for idx in range(n):
        for cluster in clusters:
            center = eigs[cluster].mean()
            if np.abs(eigs[idx] - center) <= TOL.cluster_rtol * scale:
                cluster.append(idx)
                break
        else:
            clusters.append([idx])
    clusters.sort(key=len)
    for cluster in clusters:
        if len(cluster) == n:
            continue
        lam = eigs[cluster].mean()
        radius = float(np.abs(eigs[cluster] - lam).max()) if len(cluster) > 1 else 0.0
        shifted = x - lam * np.eye(n)
        _, s, vh = np.linalg.svd(shifted)
        cut = max(TOL.rank_rtol * max(s[0], 1.0), 2.0 * radius)
        null = vh[s <= cut].conj().T
        if 0 < null.shape[1] < n:
            yield null


def _subspace_candidates(span: AlgebraSpan, rng: np.random.Generator):
    """Candidate proper invariant subspaces, strongest evidence first."""
    rad = radical(span)
    if rad:
        image = _column_space(np.hstack(rad))
        if 0 < image.shape[1] < span.ambient_dim:
            yield "radical_image", image
    comm = commutant(span)
    candidates = [x for x in comm if not _is_scalar(x)]
    if candidates:
        for _ in range(SIZE.commutant_draws):
            coef = rng.standard_normal(len(comm)) + 1j * rng.standard_normal(len(comm))
            mix = sum(c * m for c, m in zip(coef, comm))
            if not _is_scalar(mix):
                candidates.append(mix)
        for x in candidates:
            for vectors in _eigenspace_candidates(x):
                yield "commutant_eigenspace", vectors


def find_invariant_subspace(span: AlgebraSpan) -> SubspaceReport:
    """Produce a proper invariant subspace or certify there is none.

    Discovery order: image of the radical, then eigenspaces of non-scalar
    commutant elements.  Any candidate is re-verified against the original
    generators before being returned.  When nothing is found the span must
    be all of M_N; that cross-check failing is an implementation bug, not
    an input condition, and raises accordingly.
    """
    rng = np.random.default_rng(0)
    found_any = False
    for kind, vectors in _subspace_candidates(span, rng):
        found_any = True
        resid = _invariance_residual(span.generators, vectors)
        if resid <= TOL.invariance_atol:
            return SubspaceReport(kind=kind, basis=vectors, verified=True, residual=resid)
    if found_any:
        raise InternalInconsistencyError(
            "discovered invariant subspaces failed generator re-verification"
        )
    n = span.ambient_dim
    if span.dim != n * n:
        raise InternalInconsistencyError(
            f"no invariant subspace found but dim {span.dim} != {n * n}"
        )
    return SubspaceReport(
        kind="none",
        basis=np.zeros((n, 0), dtype=complex),
        verified=True,
        residual=0.0,
    )


def is_transitive(span: AlgebraSpan) -> bool:
    """True iff the span has no proper invariant subspace (iff dim = N^2)."""
    report = find_invariant_subspace(span)
    full = span.dim == span.ambient_dim**2
    if (report.kind == "none") != full:
        raise InternalInconsistencyError(
            "subspace search and dimension count disagree on transitivity"
        )
    return report.kind == "none"


# -- k-fold transitivity -------------------------------------------------------


def _ampliation_span(span: AlgebraSpan, k: int) -> AlgebraSpan:
    """The algebra {I_k tensor B} inside M_{kN}, re-normalized."""
    eye = np.eye(k, dtype=complex)
    scale = 1.0 / np.sqrt(k)
    basis = tuple(np.kron(eye, b) * scale for b in span.basis)
    gens = tuple(np.kron(eye, g) for g in span.generators) or basis
    return AlgebraSpan(
        ambient_dim=k * span.ambient_dim,
        basis=basis,
        generators=gens,
        closure_residual=span.closure_residual,
        gap_flagged=span.gap_flagged,
    )


def _blocks_scalar(projection: np.ndarray, k: int, n: int) -> bool:
    """Whether every N x N block of the projection is a scalar multiple of I."""
    for i in range(k):
        for j in range(k):
            block = projection[i * n : (i + 1) * n, j * n : (j + 1) * n]
            c = np.trace(block) / n
            if np.abs(block - c * np.eye(n)).max() > TOL.invariance_atol:
                return False
    return True


def _discover_verified_subspaces(span: AlgebraSpan, rng: np.random.Generator):
    """All distinct verified proper invariant subspaces the sampler can see."""
    found = []
    for kind, vectors in _subspace_candidates(span, rng):
        if _invariance_residual(span.generators, vectors) <= TOL.invariance_atol:
            found.append((kind, vectors))
    return found


def kfold_transitive(
    span: AlgebraSpan, k: int, rng: np.random.Generator | None = None
) -> bool:
    """Decide k-fold transitivity by two independent routes.

    Route one inspects the lattice of the ampliation algebra {I_k tensor B}:
    the span is k-fold transitive exactly when every discovered invariant
    subspace has a projection whose N x N blocks are all scalar.  Route two
    samples k-tuples of independent vectors (the standard-basis tuple plus
    random draws) and checks the orbit span has full dimension kN; a single
    deficient tuple is an exact certificate of failure.  A certified
    failure combined with a route-one pass falsifies the implementation.
    """
    n = span.ambient_dim
    if not 1 <= k <= n:
        raise DomainError(f"k must lie in [1, {n}], got {k}")
    rng = np.random.default_rng(0) if rng is None else rng

    amp = _ampliation_span(span, k)
    subspaces = _discover_verified_subspaces(amp, rng)
    if not subspaces and amp.dim != (k * n) ** 2:
        # nothing found although the ampliation cannot be all of M_{kN}
        raise InternalInconsistencyError(
            "ampliation subspace discovery came back empty on a proper algebra"
        )
    route_lattice = all(
        _blocks_scalar(v @ v.conj().T, k, n) for _, v in subspaces
    )

    basis_rows = np.array([b.ravel() for b in span.basis])
    tuples = [np.eye(n, k, dtype=complex)]
    draws = 0
    while draws < SIZE.orbit_tuples:
        xi = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
        if np.linalg.matrix_rank(xi) == k:
            tuples.append(xi)
            draws += 1
    orbit_full = True
    for xi in tuples:
        stack = np.array([(b @ xi).ravel() for b in span.basis])
        s = np.linalg.svd(stack, compute_uv=False)
        rank = int(np.sum(s > TOL.rank_rtol * (s[0] if s[0] > 0 else 1.0)))
        if rank < k * n:
            orbit_full = False
            break

    if not orbit_full and route_lattice:
        raise InternalInconsistencyError(
            "orbit sampling certified a deficient tuple but the ampliation "
            "lattice route judged the span k-fold transitive"
        )
    return route_lattice and orbit_full


# -- block-projection and normality checks ------------------------------------


@dataclass(frozen=True, eq=False)
class BlockProjectionReport:
    """What held for a projection against a block-diagonal operator.

    in_lattice is False when the projection's range is not invariant (a
    precondition failure, reported rather than raised); the two residuals
    measure invariance of range(T11) and null(I - T11) under the upper
    block; diagonal_blocks classifies each diagonal compression as "zero",
    "identity", or "injective_defect" ("indeterminate" if none holds).
    """

    in_lattice: bool
    range_residual: float
    null_residual: float
    diagonal_blocks: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return self.in_lattice and max(self.range_residual, self.null_residual) <= TOL.commutator_atol

    def to_json(self) -> dict:
        return {
            "in_lattice": self.in_lattice,
            "range_residual": self.range_residual,
            "null_residual": self.null_residual,
            "diagonal_blocks": list(self.diagonal_blocks),
            "passed": self.passed,
        }


def _classify_diagonal_block(block: np.ndarray) -> str:
    n = block.shape[0]
    if np.abs(block).max() <= TOL.projection_atol:
        return "zero"
    if np.abs(block - np.eye(n)).max() <= TOL.projection_atol:
        return "identity"
    defect = block - block @ block
    s = np.linalg.svd(defect, compute_uv=False)
    if s.min() > TOL.rank_rtol:
        return "injective_defect"
    return "indeterminate"


def block_projection_check(projection: np.ndarray, z: np.ndarray) -> BlockProjectionReport:
    """Check the half-projection consequences of lattice membership.

    For a self-adjoint projection P on a doubled space and block-diagonal
    Z = X (+) Y, membership of range(P) in Lat Z forces range(T11) and
    null(I - T11) to be X-invariant, where T11 is the upper-left block of
    P.  A P that is not in Lat Z is reported via in_lattice=False, not as
    a check failure.
    """
    p = np.asarray(projection, dtype=complex)
    z = np.asarray(z, dtype=complex)
    if p.shape != z.shape or p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise DimensionMismatchError(f"shapes {p.shape} and {z.shape} must match, square")
    m = p.shape[0]
    if m % 2 != 0:
        raise DomainError("block checks need an even ambient dimension")
    half = m // 2
    if np.abs(p @ p - p).max() > TOL.projection_atol or np.abs(p - p.conj().T).max() > TOL.projection_atol:
        raise DomainError("input is not a self-adjoint projection")
    if (
        np.abs(z[:half, half:]).max() > TOL.projection_atol
        or np.abs(z[half:, :half]).max() > TOL.projection_atol
    ):
        raise DomainError("operator is not block-diagonal in the given partition")

    diag_classes = (
        _classify_diagonal_block(p[:half, :half]),
        _classify_diagonal_block(p[half:, half:]),
    )
    scale = max(1.0, float(np.linalg.norm(z, 2)))
    if np.linalg.norm((np.eye(m) - p) @ z @ p, 2) > TOL.invariance_atol * scale:
        return BlockProjectionReport(
            in_lattice=False,
            range_residual=np.inf,
            null_residual=np.inf,
            diagonal_blocks=diag_classes,
        )

    x = z[:half, :half]
    t11 = p[:half, :half]
    range_basis = _column_space(t11)
    u, s, _ = np.linalg.svd(np.eye(half) - t11)
    null_basis = u[:, s <= TOL.rank_rtol * max(s[0], 1.0)] if s.size else u[:, :0]
    range_resid = (
        _invariance_residual((x,), range_basis) if range_basis.shape[1] else 0.0
    )
    null_resid = _invariance_residual((x,), null_basis) if null_basis.shape[1] else 0.0
    return BlockProjectionReport(
        in_lattice=True,
        range_residual=range_resid,
        null_residual=null_resid,
        diagonal_blocks=diag_classes,
    )


def normal_commutation_check(t: np.ndarray, e: np.ndarray) -> float:
    """Commutator norm ||ET - TE|| for a normal T and invariant projection E.

    Preconditions enforce normality of T, that E is a self-adjoint
    projection, and that range(E) is T-invariant; under those a normal T
    must commute with E outright, so the returned norm is expected below
    1e-8 and anything larger falsifies the inputs or the arithmetic.
    """
    t = np.asarray(t, dtype=complex)
    e = np.asarray(e, dtype=complex)
    if t.shape != e.shape or t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise DimensionMismatchError(f"shapes {t.shape} and {e.shape} must match, square")
    n = t.shape[0]
    if np.linalg.norm(t @ t.conj().T - t.conj().T @ t, 2) > TOL.normality_atol * max(
        1.0, float(np.linalg.norm(t, 2)) ** 2
    ):
        raise DomainError("operator is not normal within tolerance")
    if (
        np.abs(e @ e - e).max() > TOL.projection_atol
        or np.abs(e - e.conj().T).max() > TOL.projection_atol
    ):
        raise DomainError("second argument is not a self-adjoint projection")
    scale = max(1.0, float(np.linalg.norm(t, 2)))
    if np.linalg.norm((np.eye(n) - e) @ t @ e, 2) > TOL.normality_atol * scale:
        raise DomainError("range of the projection is not invariant under the operator")
    return float(np.linalg.norm(e @ t - t @ e, 2))
