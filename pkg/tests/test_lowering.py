import numpy as np
import pytest

import unrectify as ur
from unrectify.lowering import IDENTITY_CPWL

from helpers import random_cpwl_spec

ABS_SPEC = ur.CpwlSpec(right=((1.0, 0.0),), left=((1.0, 0.0),))


def eval_fragment(net, xs):
    xs = np.asarray(xs, dtype=float).reshape(-1, net.input_dim)
    return ur.forward_batch(net, xs).output.ravel()


class TestCpwlLowering:
    def test_abs_value_two_relus(self):
        net = ur.lower_cpwl_to_relu(ABS_SPEC)
        relu_arcs = [a for a in net.arcs if a.op.has_pattern]
        assert len(relu_arcs) == 1
        assert relu_arcs[0].op.w.shape[0] == 2  # one relu row per hinge
        xs = np.linspace(-5, 5, 1000)
        np.testing.assert_allclose(eval_fragment(net, xs), np.abs(xs), atol=1e-12)

    def test_three_piece_fragment(self):
        # one rising hinge and two falling hinges: three relu rows
        spec = ur.CpwlSpec(right=((2.0, 1.0),), left=((1.0, -1.0), (0.5, 0.5)))
        net = ur.lower_cpwl_to_relu(spec)
        relu_rows = sum(a.op.w.shape[0] for a in net.arcs if a.op.has_pattern)
        assert relu_rows == 3
        xs = np.linspace(-4, 4, 500)
        np.testing.assert_allclose(
            eval_fragment(net, xs), ur.cpwl_eval(spec, xs), atol=1e-12
        )

    def test_random_specs_match_hinge_sum(self):
        rng = np.random.default_rng(17)
        for _ in range(8):
            spec = random_cpwl_spec(rng, max_terms=3)
            net = ur.lower_cpwl_to_relu(spec)
            xs = rng.uniform(-8, 8, size=400)
            np.testing.assert_allclose(
                eval_fragment(net, xs), ur.cpwl_eval(spec, xs), atol=1e-10
            )

    def test_empty_spec_is_zero(self):
        net = ur.lower_cpwl_to_relu(ur.CpwlSpec())
        assert eval_fragment(net, [3.0]).tolist() == [0.0]

    def test_fragments_validate(self):
        rng = np.random.default_rng(23)
        for _ in range(5):
            assert ur.validate(ur.lower_cpwl_to_relu(random_cpwl_spec(rng))) == []

    def test_activation_arcs_have_unit_bound(self):
        rng = np.random.default_rng(29)
        for net in (
            ur.lower_cpwl_to_relu(random_cpwl_spec(rng)),
            ur.lower_maxpool2(),
            ur.lower_maxpool_n(5),
        ):
            for arc in net.arcs:
                if arc.op.has_pattern:
                    assert ur.uniform_bound(arc.op) == 1.0


class TestMaxPoolLowering:
    def test_pair_examples(self):
        net = ur.lower_maxpool2()
        assert eval_fragment(net, [[3.0, 1.0]]).tolist() == [3.0]
        assert eval_fragment(net, [[-2.0, -5.0]]).tolist() == [-2.0]

    def test_tie(self):
        net = ur.lower_maxpool2()
        for x in np.linspace(-3, 3, 20):
            assert eval_fragment(net, [[x, x]])[0] == pytest.approx(x, abs=1e-12)

    def test_block4_example(self):
        net = ur.lower_maxpool_n(4)
        assert eval_fragment(net, [[1.0, 4.0, 2.0, 3.0]]).tolist() == [4.0]

    def test_block5_example(self):
        net = ur.lower_maxpool_n(5)
        assert eval_fragment(net, [[5.0, 1.0, 1.0, 1.0, 1.0]]).tolist() == [5.0]

    def test_random_blocks_exact(self):
        rng = np.random.default_rng(31)
        for k in range(2, 6):
            net = ur.lower_maxpool_n(k)
            xs = rng.normal(size=(500, k))
            got = ur.forward_batch(net, xs).output.ravel()
            np.testing.assert_allclose(got, xs.max(axis=1), atol=1e-12)

    def test_fragments_validate(self):
        for k in range(2, 7):
            assert ur.validate(ur.lower_maxpool_n(k)) == []

    def test_block_size_one_rejected(self):
        with pytest.raises(ValueError):
            ur.lower_maxpool_n(1)


def test_identity_cpwl_is_exact_identity():
    xs = np.linspace(-10, 10, 101)
    np.testing.assert_array_equal(ur.cpwl_eval(IDENTITY_CPWL, xs), xs)
    assert IDENTITY_CPWL.slope_bound() == 1.0
