import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lqr_landscape.errors import DimensionError, PlantError
from lqr_landscape.lti_model import (
    FeedbackGain,
    Plant,
    as_gain,
    assumption1,
    image_inclusion,
    is_controllable,
    is_stable,
    pbh_detectable,
    pbh_stabilizable,
    psd_sqrt,
    random_plant,
    structural_report,
)


class TestPlant:
    def test_scalar_inputs_become_matrices(self):
        p = Plant(0, 0.5, 1, 1, 1)
        assert p.A.shape == (1, 1) and p.B.shape == (1, 1)
        assert (p.n, p.m) == (1, 1)

    def test_vector_B_is_a_column(self):
        p = Plant(np.eye(2), [1.0, 1.0], np.eye(2), 1.0, np.eye(2))
        assert p.B.shape == (2, 1)

    def test_arrays_are_frozen_copies(self):
        A = np.array([[-1.0]])
        p = Plant(A, 1, 1, 1, 1)
        A[0, 0] = 5.0
        assert p.A[0, 0] == -1.0
        with pytest.raises(ValueError):
            p.A[0, 0] = 2.0

    @pytest.mark.parametrize(
        "kwargs, err",
        [
            (dict(Q=0.0), PlantError),
            (dict(Q=-1.0), PlantError),
            (dict(R=0.0), PlantError),
            (dict(W=-1.0), PlantError),
            (dict(A=np.nan), PlantError),
            (dict(Q=np.eye(2)), DimensionError),
        ],
    )
    def test_rejects_invalid_weights(self, kwargs, err):
        data = dict(A=0.0, B=1.0, Q=1.0, R=1.0, W=1.0)
        data.update(kwargs)
        with pytest.raises(err):
            Plant(**data)

    def test_rejects_asymmetric_weight(self):
        with pytest.raises(PlantError):
            Plant(np.zeros((2, 2)), np.ones((2, 1)), [[1, 0.5], [0, 1]], 1, np.eye(2))

    def test_rejects_non_square_A(self):
        with pytest.raises(DimensionError):
            Plant(np.zeros((2, 3)), np.ones((2, 1)), np.eye(2), 1, np.eye(2))

    def test_psd_within_rounding_is_accepted(self):
        W = np.array([[1.0, -1.0], [-1.0, 1.0]]) + 1e-13 * np.array([[0, 1], [1, 0]])
        Plant(-np.eye(2), np.ones((2, 1)), np.eye(2), 1, 0.5 * (W + W.T))

    def test_with_W_and_closed_loop(self, si):
        assert si.with_W(4.0).W[0, 0] == 4.0
        assert si.closed_loop(-2.0)[0, 0] == -1.0


def test_gain_coercion(si, ex31):
    assert as_gain(-1, si).shape == (1, 1)
    assert as_gain(FeedbackGain([[1.0, 2.0]]), ex31).shape == (1, 2)
    with pytest.raises(DimensionError):
        as_gain(np.zeros((2, 2)), ex31)
    with pytest.raises(PlantError):
        FeedbackGain([[np.inf]])


class TestStability:
    def test_symmetric_stable(self):
        assert is_stable(np.array([[-1.0, 0.1], [0.1, -1.0]]))

    def test_zero_is_not_stable(self):
        assert not is_stable(np.zeros((1, 1)))

    def test_example_closed_loop(self):
        assert is_stable(np.array([[-2.0, -0.9], [-0.9, -2.0]]))

    def test_margin_is_absolute(self):
        assert not is_stable(np.array([[-1e-10]]))
        assert is_stable(np.array([[-1e-8]]))

    def test_non_square_rejected(self):
        with pytest.raises(DimensionError):
            is_stable(np.zeros((2, 3)))


class TestPBH:
    def test_integrator_stabilizable(self):
        assert pbh_stabilizable(0.0, 1.0)

    def test_unstable_unreachable(self):
        assert not pbh_stabilizable(1.0, 0.0)

    def test_example_4_3(self, ex43):
        assert pbh_stabilizable(ex43.A, ex43.B)
        assert is_controllable(ex43.A, ex43.B)

    def test_detectability_is_dual(self):
        A = np.diag([1.0, -1.0])
        assert not pbh_detectable(np.diag([0.0, 1.0]), A)
        assert pbh_detectable(np.diag([1.0, 0.0]), A)


class TestControllability:
    def test_scalar(self):
        assert is_controllable(0.0, 1.0)

    def test_decoupled_state(self):
        assert not is_controllable(np.eye(2), np.array([[1.0], [0.0]]))


class TestImageInclusion:
    def test_same(self):
        B = np.array([[1.0], [2.0]])
        assert image_inclusion(B, B)

    def test_full_image(self):
        assert image_inclusion(np.array([[1.0], [1.0]]), np.eye(2))

    def test_orthogonal(self):
        assert not image_inclusion(np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]]))


class TestStructuralReport:
    def test_pd_covariance_is_condition_a(self, si):
        r = structural_report(si)
        assert r.assumption1_holds and r.sufficient_condition == "a"

    def test_factored_covariance_is_condition_b(self, ex43):
        assert structural_report(ex43, B1=ex43.B).sufficient_condition == "b"

    def test_singular_covariance_without_factor(self, ex31):
        assert structural_report(ex31).sufficient_condition == "none"

    def test_psd_Q_gives_unknown(self):
        B = np.array([[1.0], [1.0]])
        p = Plant(np.array([[-10.0, 0.1], [0.1, -1.0]]), B, np.diag([1.0, 0.0]), 1.0, B @ B.T)
        assert structural_report(p, B1=B).sufficient_condition == "unknown"

    def test_assumption_failure(self):
        p = Plant(np.diag([1.0, -1.0]), np.ones((2, 1)), np.diag([0.0, 1.0]), 1.0, np.eye(2))
        r = structural_report(p)
        assert not r.assumption1_holds and r.sufficient_condition == "none"

    def test_B1_dimension_checked(self, ex43):
        with pytest.raises(DimensionError):
            structural_report(ex43, B1=np.ones((3, 1)))

    def test_deterministic(self, ex43):
        assert structural_report(ex43, ex43.B) == structural_report(ex43, ex43.B)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 5), m=st.integers(1, 3), seed=st.integers(0, 10_000))
def test_stable_A_is_stabilizable_for_any_B(n, m, seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n))
    A = M - (np.max(np.linalg.eigvals(M).real) + 0.1) * np.eye(n)
    B = rng.standard_normal((n, m)) * rng.integers(0, 2)
    assert pbh_stabilizable(A, B)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 5), m=st.integers(1, 3), seed=st.integers(0, 10_000))
def test_controllable_implies_stabilizable(n, m, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    B = rng.standard_normal((n, m))
    if is_controllable(A, B):
        assert pbh_stabilizable(A, B)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_detectability_invariant_under_orthogonal_refactorization(seed):
    rng = np.random.default_rng(seed)
    n = 3
    A = rng.standard_normal((n, n))
    G = rng.standard_normal((n, 2))
    C = psd_sqrt(G @ G.T)
    U, _ = np.linalg.qr(rng.standard_normal((n, n)))
    assert pbh_detectable(C, A) == pbh_detectable(U @ C, A)


def test_random_plant_is_deterministic_and_admissible():
    p1, p2 = random_plant(4, 2, 7), random_plant(4, 2, 7)
    assert np.array_equal(p1.A, p2.A) and np.array_equal(p1.W, p2.W)
    assert assumption1(p1)
    assert np.linalg.eigvalsh(p1.W)[0] > 0
    assert np.linalg.matrix_rank(random_plant(3, 1, 1, W_pd=False).W) == 1
