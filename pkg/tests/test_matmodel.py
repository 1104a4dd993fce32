"""Matrix-model oracle: exact relations every seed, freeness in the limit."""

import math

import numpy as np
import pytest

from freeprob.errors import (
    DimensionMismatchError,
    DomainError,
    EigensolveError,
    WordSpecError,
)
from freeprob.matmodel import (
    EmpiricalRadialCdf,
    FreeGroupModel,
    MatrixModel,
    SpectrumSample,
    build_free_group,
    build_m2_free_m2,
    centered,
    derive_rng,
    empirical_radial_cdf,
    exact_identity_residuals,
    f_blocks,
    haar_unitary,
    ks_distance,
    m2_generators,
    ntrace,
    parse_word,
    realize,
    seed_average,
    spectrum,
    trace_factorization_check,
    unitary_poly,
    word_trace,
)
from freeprob.rdiagonal import OperatorTag, catalog_brown, pullback_radii

SEED = 20260822


@pytest.fixture(scope="module")
def model():
    return build_m2_free_m2(64, seed=SEED)


@pytest.fixture(scope="module")
def big_model():
    return build_m2_free_m2(256, seed=7)


@pytest.fixture(scope="module")
def freegroup():
    return build_free_group(512, seed=11)


class TestHaarUnitary:
    def test_dim_one_is_a_phase(self):
        u = haar_unitary(1, derive_rng(SEED, "phase"))
        assert abs(abs(u[0, 0]) - 1.0) < 1e-14

    def test_unitarity(self):
        u = haar_unitary(64, derive_rng(SEED, "unitarity"))
        assert np.max(np.abs(u.conj().T @ u - np.eye(64))) < 1e-12

    def test_mean_trace_over_seeds(self):
        # Haar columns make the normalized trace mean-zero with std 1/dim
        mean = seed_average(
            lambda s: np.trace(haar_unitary(256, derive_rng(s, "trace"))) / 256,
            range(50),
        )
        assert abs(mean) < 3.0 / 256

    def test_bad_dim_rejected(self):
        with pytest.raises(DomainError):
            haar_unitary(0, derive_rng(SEED, "bad"))

    def test_derived_streams_are_independent(self):
        a = derive_rng(SEED, "alpha").standard_normal(4)
        b = derive_rng(SEED, "beta").standard_normal(4)
        a2 = derive_rng(SEED, "alpha").standard_normal(4)
        assert np.array_equal(a, a2)
        assert not np.array_equal(a, b)


class TestModelConstruction:
    def test_exact_identities(self, model):
        res = exact_identity_residuals(model)
        for name, value in res.items():
            assert value < 1e-10, f"{name} residual {value}"

    def test_generator_relations(self):
        w0, w1, w2, w3 = m2_generators()
        assert np.array_equal(w1 @ w1, w0)
        assert np.array_equal(w3 @ w3, w0)
        assert np.max(np.abs(w2 @ w2 + w0)) == 0.0  # rotation squares to -1

    def test_unit_traces(self, model):
        assert ntrace(model.W[1]) == 0.0
        assert ntrace(model.E[1]) == 0.0
        assert abs(ntrace(model.V[1])) < 1e-10
        assert abs(ntrace(model.F[1])) < 1e-10

    def test_determinism_is_bitwise(self):
        a = build_m2_free_m2(32, seed=5)
        b = build_m2_free_m2(32, seed=5)
        assert all(np.array_equal(x, y) for x, y in zip(a.V, b.V))
        assert all(np.array_equal(x, y) for x, y in zip(a.F, b.F))

    def test_seeds_differ(self):
        a = build_m2_free_m2(32, seed=5)
        b = build_m2_free_m2(32, seed=6)
        assert not np.array_equal(a.V[1], b.V[1])

    def test_arrays_are_read_only(self, model):
        with pytest.raises(ValueError):
            model.W[1][0, 0] = 5.0

    def test_freeness_of_alternating_words(self):
        # mixed centered words vanish as the dimension grows
        mean = seed_average(
            lambda s: word_trace(build_m2_free_m2(128, s), "c(W1) c(V1) c(W1) c(V1)"),
            range(10),
        )
        assert abs(mean) < 0.1

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_product_unitary_moments_vanish(self, k):
        # W1 V1 behaves like a Haar unitary: all low moments near zero
        word = " ".join(["W1 V1"] * k)
        mean = seed_average(
            lambda s: word_trace(build_m2_free_m2(128, s), word), range(10)
        )
        assert abs(mean) < 0.1


class TestRealize:
    def test_rank_of_rotated_nilpotent(self):
        # the second factor of the product has rank exactly half the dimension
        tiny = build_m2_free_m2(1, seed=3)
        assert np.linalg.matrix_rank(realize(OperatorTag.W1F12, tiny)) <= 1
        small = build_m2_free_m2(2, seed=3)
        mat = realize(OperatorTag.W1F12, small)
        assert mat.shape == (4, 4)
        assert np.linalg.matrix_rank(mat) <= 2

    def test_nilpotent_sum_square_identity(self, model):
        s = realize(OperatorTag.E12_plus_F12, model)
        e12, f12 = model.E[1], model.F[1]
        assert np.max(np.abs(s @ s - (e12 @ f12 + f12 @ e12))) < 1e-12

    def test_shifted_square_expansion(self, model):
        t = realize(OperatorTag.W1_plus_F12, model)
        w1, f12 = model.W[1], model.F[1]
        eye = np.eye(model.dim)
        assert np.max(np.abs(t @ t - eye - w1 @ f12 - f12 @ w1)) < 1e-12

    def test_squared_tags_square_the_base(self, model):
        base = realize(OperatorTag.W1_plus_F12, model)
        assert np.array_equal(realize(OperatorTag.W1_plus_F12_squared, model), base @ base)

    def test_unknown_tag(self, model):
        with pytest.raises(ValueError):
            realize("NotATag", model)


class TestBlocks:
    def test_blocks_reassemble(self, model):
        w1 = model.W[1]
        a, b_adj, b, c = f_blocks(model, w1)
        n = model.half_dim
        q = model.rotation
        rebuilt = q @ np.block([[a, b_adj], [b, c]]) @ q.conj().T
        assert np.max(np.abs(rebuilt - w1)) < 1e-12

    def test_offdiagonal_blocks_are_adjoint(self, model):
        a, b_adj, b, c = f_blocks(model, model.W[1])
        assert np.max(np.abs(b_adj - b.conj().T)) < 1e-12

    def test_second_haar_copy_is_diagonal_in_own_frame(self, model):
        n = model.half_dim
        a, b_adj, b, c = f_blocks(model, model.V[1])
        assert np.max(np.abs(a - np.eye(n))) < 1e-12
        assert np.max(np.abs(c + np.eye(n))) < 1e-12
        assert np.max(np.abs(b)) < 1e-12

    def test_dimension_mismatch(self, model):
        with pytest.raises(DimensionMismatchError):
            f_blocks(model, np.eye(3))


class TestSpectrum:
    def test_jordan_block_is_nilpotent(self):
        j = np.diag(np.ones(2), k=1)
        sam = spectrum(j, source="jordan")
        assert np.max(np.abs(sam.eigenvalues)) < 1e-12

    def test_diagonal(self):
        sam = spectrum(np.diag([1.0, 2.0, 3.0]))
        assert sorted(sam.eigenvalues.real) == pytest.approx([1.0, 2.0, 3.0])

    def test_non_square_rejected(self):
        with pytest.raises(DimensionMismatchError):
            spectrum(np.ones((2, 3)))

    def test_sample_count_validated(self):
        with pytest.raises(DimensionMismatchError):
            SpectrumSample(
                eigenvalues=np.zeros(3, dtype=complex),
                source="t",
                seed=None,
                dimension=4,
                norm=1.0,
            )

    def test_kernel_fraction_of_rotated_product(self, big_model):
        sam = spectrum(realize(OperatorTag.W1F12, big_model), source="W1F12")
        emp = empirical_radial_cdf(sam)
        assert abs(emp.atom_fraction - 0.5) <= 0.02
        # the kernel is exact in this model, so the atom is insensitive to
        # widening the threshold
        assert emp.sensitivity == emp.atom_fraction


class TestEmpiricalCdf:
    def test_tiny_example(self):
        sam = SpectrumSample(
            eigenvalues=np.array([0.0, 0.0, 1.0], dtype=complex),
            source="t",
            seed=None,
            dimension=3,
            norm=1.0,
        )
        emp = empirical_radial_cdf(sam, center=0j, zero_threshold=1e-8)
        assert emp.atom_fraction == pytest.approx(2.0 / 3.0)
        assert emp.cumulative[-1] == 1.0
        assert emp.radii[-1] == 1.0

    def test_ks_of_exact_quantile_sample(self):
        cat = catalog_brown(OperatorTag.E12_plus_F12)
        n = 4096
        # quantile sample of the closed form: F(r) = r^2/(1-r^2)
        t = (np.arange(n) + 0.5) / n
        radii = np.sqrt(t / (1.0 + t))
        assert ks_distance(radii, cat.cdf) <= 0.5 / n + 1e-12

    def test_ks_handles_atoms(self):
        cat = catalog_brown(OperatorTag.W1F12)
        n = 2048
        half = n // 2
        t = (np.arange(half) + 0.5) / half
        # half the sample at the atom, half on the continuous quantiles
        cont = np.sqrt(1.0 - 1.0 / (1.0 + t))
        radii = np.concatenate([np.zeros(half), cont])
        assert ks_distance(radii, cat.cdf) <= 1.0 / n + 1e-12

    @pytest.mark.parametrize(
        "tag",
        [
            OperatorTag.W1F12,
            OperatorTag.E12_plus_F12,
            OperatorTag.E12_plus_F12_squared,
            OperatorTag.W1_plus_F12_squared,
        ],
    )
    def test_spectra_match_catalog(self, big_model, tag):
        cat = catalog_brown(tag)
        sam = spectrum(realize(tag, big_model), source=tag.value)
        emp = empirical_radial_cdf(sam, center=cat.center)
        assert ks_distance(emp, cat.cdf) <= 0.05

    def test_spectrum_matches_catalog_in_pullback_coordinate(self, big_model):
        sam = spectrum(realize(OperatorTag.W1_plus_F12, big_model), source="W1_plus_F12")
        rho = pullback_radii(OperatorTag.W1_plus_F12, sam.eigenvalues)
        assert ks_distance(rho, catalog_brown(OperatorTag.W1_plus_F12).cdf) <= 0.05

    def test_support_radius_bound(self, big_model):
        sam = spectrum(realize(OperatorTag.E12_plus_F12, big_model), source="e")
        emp = empirical_radial_cdf(sam)
        assert emp.radii.max() <= 1.0 / math.sqrt(2.0) + 0.05

    def test_two_atom_annulus_against_recipe(self, big_model):
        # Haar unitary times a deterministic positive diagonal: the recipe's
        # output is the oracle for the annulus law
        from freeprob.measures import ScalarMeasure
        from freeprob.rdiagonal import brown_rdiagonal

        dim = big_model.dim
        rng = derive_rng(97, "annulus-check")
        u = haar_unitary(dim, rng)
        h = np.diag(np.concatenate([np.full(dim // 2, 0.5), np.full(dim // 2, 1.5)]))
        sam = spectrum(u @ h, source="UH")
        law = brown_rdiagonal(ScalarMeasure(atoms=((0.5, 0.5), (1.5, 0.5))))
        emp = empirical_radial_cdf(sam)
        assert ks_distance(emp, law.cdf) <= 0.05


class TestWords:
    def test_parse_grammar(self):
        factors = parse_word("c(W1) V1^2 F12 c(V1^-1)")
        assert [f.name for f in factors] == ["W1", "V1", "F12", "V1"]
        assert [f.power for f in factors] == [1, 2, 1, -1]
        assert [f.center for f in factors] == [True, False, False, True]

    @pytest.mark.parametrize("bad", ["", "W1^0", "c(W1", "W1**2", "2W1", "W1 ^2"])
    def test_parse_rejects(self, bad):
        with pytest.raises(WordSpecError):
            parse_word(bad)

    def test_centered_single_generator_is_zero(self, model):
        assert word_trace(model, "c(W1)") == 0.0

    def test_unknown_name(self, model):
        with pytest.raises(WordSpecError):
            word_trace(model, "W9")

    def test_negative_power_of_matrix_unit_rejected(self, model):
        with pytest.raises(WordSpecError):
            word_trace(model, "E12^-1")

    def test_inverse_cancels(self, freegroup):
        assert word_trace(freegroup, "Ua^-1 Ua") == pytest.approx(1.0, abs=1e-12)

    def test_five_letter_alternating_word(self):
        mean = seed_average(
            lambda s: word_trace(
                build_m2_free_m2(256, s), "c(W1) c(V1) c(W1) c(V1) c(W1)"
            ),
            range(5),
        )
        assert abs(mean) < 0.1

    def test_haar_symmetrization_commutes(self, model):
        u = model.W[1] @ model.V[1]
        sym = u + u.conj().T
        comm = sym @ model.W[1] - model.W[1] @ sym
        assert np.max(np.abs(comm)) < 1e-12

    def test_unitary_poly(self, freegroup):
        u = freegroup.u_b
        p = unitary_poly(u, {0: 2.0, 1: 1.0, -2: 0.5})
        expected = 2.0 * np.eye(freegroup.dim) + u + 0.5 * np.linalg.matrix_power(
            u.conj().T, 2
        )
        assert np.max(np.abs(p - expected)) == 0.0


class TestTraceFactorization:
    def test_trivial_identity(self, freegroup):
        eye = np.eye(freegroup.dim, dtype=complex)
        out = trace_factorization_check(eye, eye, eye, eye, freegroup.u_a)
        assert out.lhs == pytest.approx(1.0, abs=1e-12)
        assert out.rhs == pytest.approx(1.0, abs=1e-12)

    def test_same_word_reduces_exactly(self, freegroup):
        ub = freegroup.u_b
        ub3 = np.linalg.matrix_power(ub, 3)
        z = centered(freegroup.u_a)
        out = trace_factorization_check(ub, ub3, ub, ub3, z)
        assert out.gap < 0.05
        assert out.lhs == pytest.approx(1.0, abs=0.05)

    def test_orthogonal_outer_words(self, freegroup):
        # tau(Ub* Ub^2) = tau(Ub) is a vanishing Haar moment, so both sides
        # are near zero; at finite dimension the right side is only O(1/dim)
        eye = np.eye(freegroup.dim, dtype=complex)
        ub2 = np.linalg.matrix_power(freegroup.u_b, 2)
        z = centered(freegroup.u_a)
        out = trace_factorization_check(freegroup.u_b, eye, ub2, eye, z)
        assert abs(out.lhs) < 0.05
        assert abs(out.rhs) < 0.05

    def test_gap_decreases_with_dimension(self):
        def gap(dim):
            def one(s):
                f = build_free_group(dim, s)
                eye = np.eye(dim, dtype=complex)
                ub2 = np.linalg.matrix_power(f.u_b, 2)
                out = trace_factorization_check(f.u_b, eye, ub2, eye, centered(f.u_a))
                return out.gap

            return seed_average(one, range(5))

        assert gap(512) < gap(128)

    def test_uncentered_rejected(self, freegroup):
        eye = np.eye(freegroup.dim, dtype=complex)
        with pytest.raises(DomainError):
            trace_factorization_check(eye, eye, eye, eye, eye)

    def test_shape_mismatch(self, freegroup):
        eye = np.eye(freegroup.dim, dtype=complex)
        with pytest.raises(DimensionMismatchError):
            trace_factorization_check(eye, eye, eye, np.eye(3, dtype=complex), eye)


class TestSeedAverage:
    def test_thread_count_does_not_change_result(self):
        fn = lambda s: word_trace(build_m2_free_m2(32, s), "W1 V1 W1 V1")
        sequential = seed_average(fn, range(8), threads=1)
        pooled = seed_average(fn, range(8), threads=4)
        assert sequential == pooled

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            seed_average(lambda s: s, [])
