import tracemalloc
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_params
from oracles import LEMON_ROWS, max_rel_err, published_floats, ref_forward, ref_forward_params
from tinynose.model_io import load_published_model
from tinynose.net_core import (
    N_PARAMS,
    NetworkParams,
    Workspace,
    forward,
    forward_batch,
    forward_into,
    logsig,
    logsig_derivative,
    unit_forward,
)
from tinynose.sensing import Normalizer, SensorFrame, normalize

# 1 / (1 + e^-1) evaluated with mpmath at 40 digits, rounded to double.
LOGSIG_ONE = 0.7310585786300049


class TestLogsig:
    def test_symmetry_point(self):
        assert logsig(0.0) == 0.5

    def test_one(self):
        assert logsig(1.0) == pytest.approx(LOGSIG_ONE, abs=1e-16)

    @pytest.mark.parametrize("n", [-1000.0, -745.0, -700.0])
    def test_negative_saturation_is_finite(self, n):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            v = logsig(n)
        assert 0.0 <= v <= 1e-300

    @pytest.mark.parametrize("n", [700.0, 1000.0, 1e308])
    def test_positive_saturation_is_finite(self, n):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert logsig(n) == 1.0

    def test_array_input(self):
        n = np.array([-1000.0, -1.0, 0.0, 1.0, 1000.0])
        out = logsig(n)
        assert out.shape == n.shape
        assert np.all(np.isfinite(out))
        assert out[2] == 0.5

    def test_complement_symmetry(self):
        n = np.random.default_rng(0).uniform(-50, 50, 1000)
        assert np.max(np.abs(logsig(n) + logsig(-n) - 1.0)) <= 1e-15

    def test_scalar_and_vector_paths_agree_bitwise(self):
        n = np.random.default_rng(1).uniform(-40, 40, 200)
        vec = logsig(n)
        assert all(logsig(float(v)) == vec[i] for i, v in enumerate(n))


class TestDerivative:
    def test_peak(self):
        assert logsig_derivative(0.5) == 0.25

    def test_saturation(self):
        eps = 1e-12
        assert logsig_derivative(1.0 - eps) == pytest.approx(eps, rel=1e-3)

    def test_reference_value(self):
        # a(1-a) at a = logsig(1), mpmath.
        assert logsig_derivative(LOGSIG_ONE) == pytest.approx(0.19661193324148185, abs=1e-17)


@pytest.mark.parametrize(
    "p,w,b,expected",
    [(0.0, 3.7, 0.0, 0.5), (1.0, 0.0, 0.0, 0.5), (2.0, 1.0, -1.0, LOGSIG_ONE)],
)
def test_unit_forward(p, w, b, expected):
    assert unit_forward(p, w, b) == pytest.approx(expected, abs=1e-16)


class TestParams:
    def test_rejects_nan(self):
        flat = np.zeros(N_PARAMS)
        flat[7] = np.nan
        with pytest.raises(ValueError):
            NetworkParams.from_flat(flat)

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError):
            NetworkParams(np.zeros((4, 5)), np.zeros(5), np.zeros((3, 5)), np.zeros(3))

    def test_immutable(self):
        p = NetworkParams.zeros()
        with pytest.raises(ValueError):
            p.hidden_weights[0, 0] = 1.0

    def test_flat_round_trip(self, rng):
        p = random_params(rng)
        assert NetworkParams.from_flat(p.flat()) == p


class TestForward:
    def test_zero_params(self):
        acts = forward(NetworkParams.zeros(), [0.3, -2.0, 5.0, 0.0, 1.0])
        np.testing.assert_array_equal(acts.hidden_out, np.full(5, 0.5))
        np.testing.assert_array_equal(acts.output_net, np.zeros(3))
        np.testing.assert_array_equal(acts.output_out, np.full(3, 0.5))

    def test_published_params_zero_input(self):
        params = load_published_model().params
        got = forward(params, np.zeros(5)).output_out
        want = ref_forward(*published_floats(), [0.0] * 5)
        assert max_rel_err(got, want) <= 1e-12

    def test_published_params_first_lemon_row(self):
        params = load_published_model().params
        lo = np.min(LEMON_ROWS, axis=0)
        hi = np.max(LEMON_ROWS, axis=0)
        x = normalize(Normalizer(lo, hi), SensorFrame(0, LEMON_ROWS[0]))
        got = forward(params, x).output_out
        want = ref_forward(*published_floats(), x.tolist())
        assert max_rel_err(got, want) <= 1e-12

    def test_matches_oracle_on_random_pairs(self):
        rng = np.random.default_rng(99)
        worst = 0.0
        for _ in range(100):
            params = random_params(rng, scale=3.0)
            x = rng.uniform(-1, 2, 5)
            worst = max(worst, max_rel_err(forward(params, x).output_out, ref_forward_params(params, x)))
        assert worst <= 1e-12

    def test_activation_fields_consistent(self, rng):
        params = random_params(rng)
        acts = forward(params, rng.uniform(0, 1, 5))
        np.testing.assert_array_equal(acts.hidden_out, logsig(acts.hidden_net))
        np.testing.assert_array_equal(acts.output_out, logsig(acts.output_net))

    def test_deterministic(self, rng):
        params = random_params(rng)
        x = rng.uniform(0, 1, 5)
        a, b = forward(params, x), forward(params, x)
        assert a.output_out.tobytes() == b.output_out.tobytes()

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            forward(NetworkParams.zeros(), [0.0] * 4)
        with pytest.raises(ValueError):
            forward(NetworkParams.zeros(), [0.0, 0.0, np.inf, 0.0, 0.0])

    def test_batch_matches_single(self, rng):
        params = random_params(rng)
        xs = rng.uniform(0, 1, (20, 5))
        batch = forward_batch(params, xs)
        for x, row in zip(xs, batch):
            np.testing.assert_allclose(row, forward(params, x).output_out, rtol=1e-14)


@settings(max_examples=200, deadline=None)
@given(
    flat=arrays(np.float64, N_PARAMS, elements=st.floats(-5, 5)),
    x=arrays(np.float64, 5, elements=st.floats(-1, 1)),
)
def test_outputs_strictly_inside_unit_interval(flat, x):
    # |net| <= 30 here; logsig only rounds to exactly 1.0 beyond ~36.7.
    acts = forward(NetworkParams.from_flat(flat), x)
    assert np.all(acts.output_out > 0) and np.all(acts.output_out < 1)
    assert np.all(acts.hidden_out > 0) and np.all(acts.hidden_out < 1)


class TestWorkspace:
    def test_forward_into_writes_in_place(self, rng):
        params = random_params(rng)
        x = rng.uniform(0, 1, 5)
        ws = Workspace()
        buffers = [ws.hidden_net, ws.hidden_out, ws.output_net, ws.output_out]
        forward_into(params, x, ws)
        assert all(a is b for a, b in zip(buffers, [ws.hidden_net, ws.hidden_out, ws.output_net, ws.output_out]))
        acts = forward(params, x)
        assert ws.output_out.tobytes() == acts.output_out.tobytes()
        assert ws.hidden_out.tobytes() == acts.hidden_out.tobytes()

    def test_forward_into_does_not_grow_memory(self, rng):
        params = random_params(rng)
        x = rng.uniform(0, 1, 5)
        ws = Workspace()
        tracemalloc.start()
        try:
            # Warm-up under tracing so interpreter/ufunc caches are already counted.
            for _ in range(3000):
                forward_into(params, x, ws)
            before = tracemalloc.get_traced_memory()[0]
            for _ in range(5000):
                forward_into(params, x, ws)
            after = tracemalloc.get_traced_memory()[0]
        finally:
            tracemalloc.stop()
        # Results live only in the workspace; nothing accumulates across calls.
        assert after - before <= 64
