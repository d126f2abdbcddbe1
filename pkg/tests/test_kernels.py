import numpy as np
import pytest

from oracles import loge_linear_gram, logm, random_spd
from spdkit.exceptions import ExpOverflowError, PSDCertificationError
from spdkit.kernels import (
    GramMatrix,
    KernelSpec,
    certify_psd,
    cross_gram,
    gram_matrix,
    kernel_eval,
    median_heuristic_beta,
)
from spdkit.textio import read_gram, write_gram

E = np.e
SPECS = [
    KernelSpec("loge_linear"),
    KernelSpec("loge_poly", (1.0, 1.0)),
    KernelSpec("loge_poly", (0.5, 2.0, 0.1)),
    KernelSpec("loge_exp", (0.2,)),
    KernelSpec("loge_exp", (0.1, 0.05)),
    KernelSpec("loge_gauss", beta=0.3),
]


def points(rng, m, n, cond=10.0):
    return np.stack([random_spd(rng, n, cond) for _ in range(m)])


class TestKernelSpec:
    def test_defaults(self):
        assert KernelSpec("loge_poly").coeffs == (1.0, 1.0)
        assert KernelSpec("loge_poly").degree == 2
        assert KernelSpec("loge_linear").degree == 1

    @pytest.mark.parametrize("kwargs", [
        {"kind": "rbf"},
        {"kind": "loge_poly", "coeffs": (1.0, 0.0)},
        {"kind": "loge_poly", "coeffs": ()},
        {"kind": "loge_exp", "coeffs": (-1.0,)},
        {"kind": "loge_gauss", "beta": 0.0},
        {"kind": "loge_gauss", "beta": -2.0},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            KernelSpec(**kwargs)

    @pytest.mark.parametrize("spec", SPECS)
    def test_params_string_round_trip(self, spec):
        assert KernelSpec.from_params_string(spec.kind, spec.params_string()) == spec


class TestKernelEval:
    @pytest.mark.parametrize("beta", [0.01, 1.0, 50.0])
    def test_gauss_self_is_one(self, rng, beta):
        x = random_spd(rng, 4)
        assert kernel_eval(KernelSpec("loge_gauss", beta=beta), x, x) == 1.0

    def test_linear_at_identity(self, rng):
        assert kernel_eval(KernelSpec("loge_linear"), np.eye(3), random_spd(rng, 3)) == 0.0

    def test_poly_example(self):
        x = np.diag([E, E])
        assert kernel_eval(KernelSpec("loge_poly", (1.0, 1.0)), x, x) == pytest.approx(6.0)

    def test_exp_and_gauss_values(self):
        x, y = np.diag([E, E**2]), np.diag([E**3, E])
        # <x, y> = 5, ||log x - log y||^2 = 4 + 1
        assert kernel_eval(KernelSpec("loge_exp", (0.1, 0.01)), x, y) == pytest.approx(
            np.exp(0.5 + 0.25))
        assert kernel_eval(KernelSpec("loge_gauss", beta=0.2), x, y) == pytest.approx(np.exp(-1.0))

    @pytest.mark.parametrize("spec", SPECS)
    def test_symmetric(self, rng, spec):
        x, y = random_spd(rng, 3), random_spd(rng, 3)
        assert kernel_eval(spec, x, y) == pytest.approx(kernel_eval(spec, y, x), rel=1e-12)

    def test_exp_overflow(self):
        x = np.diag([E**10, E**10])
        with pytest.raises(ExpOverflowError):
            kernel_eval(KernelSpec("loge_exp", (1.0, 1.0)), x, x)

    def test_gauss_needs_beta(self):
        with pytest.raises(ValueError, match="beta"):
            kernel_eval(KernelSpec("loge_gauss"), np.eye(2), np.eye(2))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            kernel_eval(KernelSpec(), np.eye(2), np.eye(3))


class TestGramMatrix:
    def test_single_point(self, rng):
        x = random_spd(rng, 3)
        spec = KernelSpec("loge_poly")
        g = gram_matrix(spec, [x], ["a"])
        assert g.entries.shape == (1, 1)
        assert g.entries[0, 0] == pytest.approx(kernel_eval(spec, x, x))
        assert g.point_ids == ("a",)

    def test_identity_points_give_zero_matrix(self):
        g = gram_matrix(KernelSpec("loge_linear"), [np.eye(3)] * 4)
        np.testing.assert_array_equal(g.entries, np.zeros((4, 4)))
        assert g.min_eig == 0.0

    def test_explicit_feature_oracle(self, rng):
        pts = points(rng, 12, 5, cond=1e3)
        g = gram_matrix(KernelSpec("loge_linear"), pts)
        assert np.max(np.abs(g.entries - loge_linear_gram(pts))) <= 1e-10

    @pytest.mark.parametrize("spec", SPECS)
    def test_entries_match_kernel_eval(self, rng, spec):
        pts = points(rng, 5, 3)
        g = gram_matrix(spec, pts).entries
        for i in range(5):
            for j in range(5):
                assert g[i, j] == pytest.approx(kernel_eval(spec, pts[i], pts[j]), rel=1e-12)
        np.testing.assert_array_equal(g, g.T)

    @pytest.mark.parametrize("spec", SPECS)
    def test_mercer(self, rng, spec):
        for _ in range(10):
            m, n = int(rng.integers(1, 51)), int(rng.integers(1, 11))
            g = gram_matrix(spec, points(rng, m, n))
            w = np.linalg.eigvalsh(g.entries)
            assert w[0] >= -1e-8 * np.max(np.abs(w))
            assert g.min_eig == pytest.approx(w[0], abs=1e-9 * np.max(np.abs(w)))

    def test_gauss_range(self, rng):
        g = gram_matrix(KernelSpec("loge_gauss", beta=0.7), points(rng, 20, 4)).entries
        np.testing.assert_array_equal(np.diag(g), np.ones(20))
        assert np.all(g > 0) and np.all(g <= 1)

    @pytest.mark.parametrize("spec", SPECS)
    def test_permutation(self, rng, spec):
        pts = points(rng, 7, 3)
        perm = rng.permutation(7)
        g = gram_matrix(spec, pts).entries
        np.testing.assert_allclose(gram_matrix(spec, pts[perm]).entries, g[np.ix_(perm, perm)],
                                   rtol=1e-12, atol=1e-12)

    def test_degree_one_poly_is_linear(self, rng):
        pts = points(rng, 6, 4)
        np.testing.assert_array_equal(gram_matrix(KernelSpec("loge_poly", (1.0,)), pts).entries,
                                      gram_matrix(KernelSpec("loge_linear"), pts).entries)

    def test_certification_failure(self):
        with pytest.raises(PSDCertificationError, match="loge_linear"):
            GramMatrix(np.array([[1.0, 2.0], [2.0, 1.0]]), ("a", "b"), KernelSpec())
        with pytest.raises(PSDCertificationError):
            certify_psd(np.diag([1.0, -1e-7]))
        assert certify_psd(np.diag([1.0, -1e-9])) == -1e-9

    def test_ids_length(self, rng):
        with pytest.raises(ValueError):
            gram_matrix(KernelSpec(), points(rng, 3, 2), ["a"])


class TestCrossGram:
    @pytest.mark.parametrize("spec", SPECS)
    def test_same_points(self, rng, spec):
        pts = points(rng, 5, 3)
        np.testing.assert_allclose(cross_gram(spec, pts, pts), gram_matrix(spec, pts).entries,
                                   rtol=1e-12, atol=1e-12)

    def test_identity_train(self, rng):
        out = cross_gram(KernelSpec(), [np.eye(3)], points(rng, 4, 3))
        np.testing.assert_array_equal(out, np.zeros((1, 4)))

    @pytest.mark.parametrize("spec", SPECS)
    def test_loop_oracle(self, rng, spec):
        train, test = points(rng, 2, 3), points(rng, 3, 3)
        out = cross_gram(spec, train, test)
        assert out.shape == (2, 3)
        for i in range(2):
            for j in range(3):
                assert out[i, j] == pytest.approx(kernel_eval(spec, train[i], test[j]), rel=1e-12)

    def test_linear_against_logm(self, rng):
        train, test = points(rng, 4, 3), points(rng, 5, 3)
        expected = np.array([[np.sum(logm(a) * logm(b)) for b in test] for a in train])
        np.testing.assert_allclose(cross_gram(KernelSpec(), train, test), expected, atol=1e-10)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError):
            cross_gram(KernelSpec(), points(rng, 2, 3), points(rng, 2, 4))


def test_median_heuristic(rng):
    pts = points(rng, 9, 3)
    d2 = [np.linalg.norm(logm(pts[i]) - logm(pts[j])) ** 2
          for i in range(9) for j in range(i + 1, 9)]
    assert median_heuristic_beta(pts) == pytest.approx(1 / np.median(d2), rel=1e-10)
    assert median_heuristic_beta([np.eye(2)] * 3) == 1.0


@pytest.mark.parametrize("spec", SPECS)
def test_gram_file_round_trip(tmp_path, rng, spec):
    g = gram_matrix(spec, points(rng, 4, 3), ["s1", "s2", "s3", "s4"])
    path = tmp_path / "g.txt"
    write_gram(path, g)
    assert path.read_text().splitlines()[0].startswith(f"GRAM v1 4 {spec.kind} ")
    back = read_gram(path)
    np.testing.assert_array_equal(back.entries, g.entries)
    assert back.kernel == spec
    assert back.point_ids == g.point_ids
