"""MLP initialization, forward pass, freezing, checkpoint round trips."""

import numpy as np
import pytest

from pinnload.network import (
    Checkpoint,
    CheckpointError,
    MlpParams,
    forward,
    freeze,
    init_mlp,
    load_checkpoint,
    save_checkpoint,
)

SIZES = (2, 30, 30, 30, 30, 30, 2)


class TestInit:
    def test_first_layer_bound(self):
        net = init_mlp(SIZES, seed=0)
        bound = 1.0 / np.sqrt(2.0)
        assert np.all(np.abs(net.weights[0]) <= bound)
        assert np.all(np.abs(net.biases[0]) <= bound)
        # hidden layers use their own fan-in
        assert np.all(np.abs(net.weights[1]) <= 1.0 / np.sqrt(30.0))

    def test_same_seed_is_bit_identical(self):
        a, b = init_mlp(SIZES, seed=7), init_mlp(SIZES, seed=7)
        for wa, wb in zip(a.weights, b.weights):
            assert np.array_equal(wa, wb)
        for ba, bb in zip(a.biases, b.biases):
            assert np.array_equal(ba, bb)

    def test_different_seeds_differ(self):
        a, b = init_mlp(SIZES, seed=1), init_mlp(SIZES, seed=2)
        assert any(not np.array_equal(wa, wb) for wa, wb in zip(a.weights, b.weights))

    def test_zero_sized_layer_rejected(self):
        with pytest.raises(ValueError):
            init_mlp((2, 0, 2), seed=0)
        with pytest.raises(ValueError):
            init_mlp((2,), seed=0)


class TestForward:
    def test_all_zero_parameters_give_zero(self):
        net = init_mlp(SIZES, seed=0)
        for w in net.weights:
            w[:] = 0.0
        for b in net.biases:
            b[:] = 0.0
        assert np.all(forward(net, np.random.default_rng(0).normal(size=(5, 2))) == 0.0)

    def test_identity_single_layer(self):
        net = MlpParams((3, 3), [np.eye(3)], [np.zeros(3)])
        x = np.random.default_rng(1).normal(size=(4, 3))
        np.testing.assert_array_equal(forward(net, x), x)

    def test_matches_straight_line_reimplementation(self, rng):
        net = init_mlp((2, 7, 5, 3), seed=5)
        x = rng.normal(size=(6, 2))

        def by_hand(xrow):
            h = xrow
            for l in range(net.n_layers):
                z = np.array(
                    [sum(net.weights[l][i, j] * h[j] for j in range(len(h)))
                     + net.biases[l][i]
                     for i in range(net.weights[l].shape[0])]
                )
                h = np.tanh(z) if l < net.n_layers - 1 else z
            return h

        got = forward(net, x)
        for n in range(len(x)):
            np.testing.assert_allclose(got[n], by_hand(x[n]), rtol=1e-12)

    def test_dimension_mismatch_rejected(self):
        net = init_mlp(SIZES, seed=0)
        with pytest.raises(ValueError):
            forward(net, np.zeros((4, 3)))

    def test_outputs_finite_for_extreme_inputs(self, rng):
        net = init_mlp(SIZES, seed=0)
        x = rng.normal(size=(10, 2)) * 1e6
        assert np.all(np.isfinite(forward(net, x)))


class TestFreeze:
    def test_zero_depth_freezes_nothing(self):
        net = freeze(init_mlp(SIZES, seed=0), 0)
        assert not any(net.frozen)

    def test_full_depth_allowed(self):
        net = freeze(init_mlp(SIZES, seed=0), 6)
        assert all(net.frozen)

    def test_out_of_range_rejected(self):
        net = init_mlp(SIZES, seed=0)
        with pytest.raises(ValueError):
            freeze(net, 7)
        with pytest.raises(ValueError):
            freeze(net, -1)

    def test_mask_prefix(self):
        net = freeze(init_mlp(SIZES, seed=0), 3)
        assert net.frozen == [True, True, True, False, False, False]


def _checkpoint(seed=0, alphas=(1.0, 1.1, 0.9, 1.3), loads=(2.0,)):
    params = freeze(init_mlp(SIZES, seed=seed), 2)
    return Checkpoint(
        params=params,
        alphas=np.array(alphas),
        loads=np.array(loads),
        problem="cylinder",
        epoch=123,
        seed=seed,
        task_names=("L1", "L2", "L3", "L4"),
        scales={"l_c": 5.0, "u_c": 0.0003},
    )


class TestCheckpoint:
    def test_round_trip_is_bit_exact(self, tmp_path, rng):
        ck = _checkpoint()
        path = tmp_path / "model.ckpt"
        save_checkpoint(ck, path)
        back = load_checkpoint(path)
        x = rng.normal(size=(100, 2))
        np.testing.assert_array_equal(forward(ck.params, x), forward(back.params, x))
        np.testing.assert_array_equal(back.alphas, ck.alphas)
        np.testing.assert_array_equal(back.loads, ck.loads)
        assert back.problem == "cylinder" and back.epoch == 123
        assert back.task_names == ck.task_names

    def test_freeze_mask_commutes_with_checkpointing(self, tmp_path):
        ck = _checkpoint()
        path = tmp_path / "model.ckpt"
        save_checkpoint(ck, path)
        loaded = load_checkpoint(path)
        assert loaded.params.frozen == ck.params.frozen
        # freezing after load equals freezing before save
        a = freeze(loaded.params, 4)
        save_checkpoint(
            Checkpoint(freeze(ck.params, 4), ck.alphas, ck.loads), tmp_path / "b.ckpt"
        )
        b = load_checkpoint(tmp_path / "b.ckpt").params
        assert a.frozen == b.frozen
        for wa, wb in zip(a.weights, b.weights):
            assert np.array_equal(wa, wb)

    def test_truncated_file_rejected(self, tmp_path):
        path = tmp_path / "model.ckpt"
        save_checkpoint(_checkpoint(), path)
        raw = path.read_bytes()
        path.write_bytes(raw[: len(raw) - 17])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "model.ckpt"
        path.write_bytes(b"NOTACKPT" + b"\x00" * 64)
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_future_version_rejected(self, tmp_path):
        path = tmp_path / "model.ckpt"
        save_checkpoint(_checkpoint(), path)
        raw = bytearray(path.read_bytes())
        raw[8] = 99  # bump the little-endian version field
        path.write_bytes(bytes(raw))
        with pytest.raises(CheckpointError, match="version"):
            load_checkpoint(path)
