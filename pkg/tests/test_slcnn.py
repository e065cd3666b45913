"""Sentence-level CNN: block-count law, width traces, shapes, and the
row-independence of the convolutional stack."""

import numpy as np
import pytest

from fakereal.nncore import Tensor
from fakereal.seeds import rng_for
from fakereal.slcnn import (
    CONV_BIAS_INIT,
    HcbBlock,
    HcbConfig,
    hcb_apply,
    hcb_forward,
    init_hcb_stack,
    init_slcnn,
    required_hcbs,
    slcnn_apply,
    slcnn_forward,
    stack_apply,
    width_trace,
)


class TestRequiredHcbs:
    def test_reference_widths(self):
        assert required_hcbs(46) == 4
        assert required_hcbs(13) == 2
        assert required_hcbs(11) == 2
        assert required_hcbs(10) == 2

    def test_small_widths(self):
        assert required_hcbs(1) == 0
        assert required_hcbs(4) == 1
        assert required_hcbs(5) == 1
        assert required_hcbs(12) == 2

    def test_stalling_widths(self):
        with pytest.raises(ValueError, match="width 8 cannot reduce to 1: recurrence stalls at 3"):
            required_hcbs(8)
        for w in (2, 3, 6, 7, 9):
            with pytest.raises(ValueError, match="cannot reduce to 1"):
                required_hcbs(w)

    def test_width_must_be_positive(self):
        with pytest.raises(ValueError, match="width must be >= 1"):
            required_hcbs(0)

    def test_width_trace_46(self):
        assert width_trace(46) == [46, 45, 44, 22, 21, 20, 10, 9, 8, 4, 3, 2, 1]

    def test_width_trace_follows_two_convs_then_pool(self):
        assert width_trace(10) == [10, 9, 8, 4, 3, 2, 1]
        assert width_trace(1) == [1]

    def test_trace_consistent_with_block_count(self):
        for w in (4, 5, 10, 11, 12, 13, 46):
            # every block contributes three width states after the start
            assert len(width_trace(w)) == 1 + 3 * required_hcbs(w)


class TestBlockConfig:
    def test_only_1x2_convolutions(self):
        with pytest.raises(ValueError, match="only 1x2 convolutions"):
            HcbConfig(conv_width=3)
        with pytest.raises(ValueError, match="only 1x2 convolutions"):
            HcbConfig(conv_height=2)

    def test_filter_count_positive(self):
        with pytest.raises(ValueError, match="filters_k must be >= 1"):
            HcbConfig(filters_k=0)


class TestInitStack:
    def test_structure(self):
        blocks = init_hcb_stack(46, 5, 8, rng_for(0, "init"))
        assert len(blocks) == 4
        assert blocks[0].full_depth and not any(b.full_depth for b in blocks[1:])
        assert blocks[0].conv1_w.data.shape == (8, 2, 5)
        for b in blocks[1:]:
            assert b.conv1_w.data.shape == (8, 2)
        for b in blocks:
            assert b.conv2_w.data.shape == (8, 2)
            assert np.all(b.conv1_b.data == CONV_BIAS_INIT)
            assert np.all(b.conv2_b.data == 0.0)

    def test_pair_kernels_start_positive(self):
        # per-channel kernels have no cross-channel mixing, so a kernel with
        # two non-positive taps would silence its channel permanently
        blocks = init_hcb_stack(46, 5, 8, rng_for(1, "init"))
        for b in blocks[1:]:
            assert np.all(b.conv1_w.data > 0.0)
        for b in blocks:
            assert np.all(b.conv2_w.data > 0.0)

    def test_deterministic_for_seed(self):
        a = init_hcb_stack(10, 3, 4, rng_for(7, "init"))
        b = init_hcb_stack(10, 3, 4, rng_for(7, "init"))
        for ba, bb in zip(a, b):
            assert np.array_equal(ba.conv1_w.data, bb.conv1_w.data)
            assert np.array_equal(ba.conv2_w.data, bb.conv2_w.data)


class TestForward:
    def test_block_width_arithmetic(self):
        rng = rng_for(0, "init")
        blocks = init_hcb_stack(46, 3, 2, rng)
        x = Tensor(np.random.default_rng(0).normal(size=(1, 5, 46, 3)))
        h = hcb_apply(blocks[0], x)
        assert h.data.shape == (1, 2, 5, 22)
        h = hcb_apply(blocks[1], h)
        assert h.data.shape == (1, 2, 5, 10)

    def test_block_rejects_narrow_input(self):
        blocks = init_hcb_stack(4, 1, 1, rng_for(0, "init"))
        with pytest.raises(ValueError, match="block cannot reduce input of width 3"):
            hcb_apply(blocks[0], Tensor(np.ones((1, 2, 3, 1))))

    def test_stack_output_width_one(self):
        blocks = init_hcb_stack(10, 3, 4, rng_for(2, "init"))
        out = stack_apply(blocks, Tensor(np.ones((2, 6, 10, 3))))
        assert out.data.shape == (2, 6, 4)

    def test_plain_block_form_matches_graph_form(self):
        rng = rng_for(3, "init")
        blocks = init_hcb_stack(10, 3, 4, rng)
        x = np.random.default_rng(1).normal(size=(5, 10, 3))
        plain = hcb_forward(x, blocks[0])
        graph = hcb_apply(blocks[0], Tensor(x[None]))
        assert plain.shape == (5, 4, 4)
        assert np.allclose(plain, np.transpose(graph.data[0], (1, 2, 0)))

    def test_latent_shape_politifact_sizes(self):
        model = init_slcnn(46, 4, 8, rng_for(0, "init"))
        latent = slcnn_forward(model, np.random.default_rng(2).normal(size=(281, 46, 4)))
        assert latent.shape == (281, 8)

    def test_rows_processed_independently(self):
        # shared weights and no row mixing: permuting input rows permutes
        # the latent rows and changes nothing else
        model = init_slcnn(10, 3, 4, rng_for(4, "init"))
        x = np.random.default_rng(3).normal(size=(7, 10, 3))
        perm = np.random.default_rng(4).permutation(7)
        assert np.allclose(slcnn_forward(model, x)[perm], slcnn_forward(model, x[perm]))

    def test_zero_input_zero_bias_gives_zero_latent(self):
        model = init_slcnn(10, 3, 4, rng_for(5, "init"))
        for b in model.blocks:
            b.conv1_b.data[...] = 0.0
            b.conv2_b.data[...] = 0.0
        latent = slcnn_forward(model, np.zeros((3, 10, 3)))
        assert np.all(latent == 0.0)

    def test_padding_rows_give_equal_latent_rows(self):
        model = init_slcnn(10, 3, 4, rng_for(6, "init"))
        x = np.zeros((4, 10, 3))
        x[0] = np.random.default_rng(5).normal(size=(10, 3))
        latent = slcnn_forward(model, x)
        assert np.array_equal(latent[1], latent[2])
        assert np.array_equal(latent[2], latent[3])

    def test_unreducible_t_s_rejected_at_init(self):
        with pytest.raises(ValueError, match="cannot reduce to 1"):
            init_slcnn(8, 4, 2, rng_for(0, "init"))

    def test_input_must_match_model(self):
        model = init_slcnn(10, 3, 4, rng_for(0, "init"))
        with pytest.raises(ValueError, match="does not match model"):
            slcnn_forward(model, np.ones((3, 9, 3)))
        with pytest.raises(ValueError, match="does not match model"):
            slcnn_forward(model, np.ones((3, 10, 2)))
        with pytest.raises(ValueError, match="must be 3D"):
            slcnn_forward(model, np.ones((10, 3)))

    def test_block_count_consistency_checked(self):
        model = init_slcnn(10, 3, 4, rng_for(0, "init"))
        model.blocks = model.blocks[:1]
        with pytest.raises(ValueError, match="block count does not match"):
            slcnn_forward(model, np.ones((3, 10, 3)))
