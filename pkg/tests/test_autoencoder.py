import numpy as np
import pytest
import torch
from numpy.testing import assert_allclose, assert_array_equal
from torch.autograd import gradcheck
from torch.func import functional_call

from embclust.autoencoder import (AeConfig, DimensionMismatch, TrainingDiverged, encode, forward, init,
                                  load_checkpoint, reconstruction_mse, save_checkpoint, train)
from embclust.data import Dataset, make_dataset
from embclust.embedding import AUTOENCODED
from embclust.exceptions import ConfigError


def small_config(**overrides):
    params = dict(input_dim=6, bottleneck_dim=2, hidden_dims=(8, 5), epochs=3, batch_size=16, seed=7)
    params.update(overrides)
    return AeConfig(**params)


def unit_data(n=40, d=6, seed=0):
    return make_dataset(np.random.default_rng(seed).uniform(size=(n, d)))


def test_encoder_shapes_follow_layer_widths():
    model = init(AeConfig(input_dim=16, bottleneck_dim=10))
    assert model.encoder_shapes() == [(16, 500), (500, 500), (500, 2000), (2000, 10)]
    assert model.decoder_shapes() == [(10, 2000), (2000, 500), (500, 500), (500, 16)]


def test_glorot_bound_and_zero_biases():
    model = init(AeConfig(input_dim=16, bottleneck_dim=10))
    layer = model.network.encoder[4]
    assert tuple(layer.weight.shape) == (2000, 500)
    assert layer.weight.abs().max().item() <= np.sqrt(6.0 / 2500.0)
    for linear in model.network.linear_layers():
        assert torch.count_nonzero(linear.bias) == 0
    assert len(model.optimizer.state_dict()["state"]) == 0


def test_init_is_seeded():
    first, second = init(small_config()), init(small_config())
    for a, b in zip(first.network.parameters(), second.network.parameters()):
        assert torch.equal(a, b)
    other = init(small_config(seed=8))
    assert not torch.equal(first.network.encoder[0].weight, other.network.encoder[0].weight)


def test_zero_network_outputs_zero():
    model = init(small_config())
    with torch.no_grad():
        for p in model.network.parameters():
            p.zero_()
    h, r = forward(model, np.random.default_rng(0).normal(size=(5, 6)))
    assert_array_equal(h, np.zeros((5, 2)))
    assert_array_equal(r, np.zeros((5, 6)))


def test_identity_without_hidden_layers():
    model = init(AeConfig(input_dim=3, bottleneck_dim=3, hidden_dims=()))
    with torch.no_grad():
        for layer in model.network.linear_layers():
            layer.weight.copy_(torch.eye(3, dtype=torch.float64))
    batch = np.random.default_rng(1).normal(size=(4, 3))
    _, r = forward(model, batch)
    assert_array_equal(r, batch)


def test_forward_matches_matrix_arithmetic():
    model = init(small_config())
    batch = np.random.default_rng(2).normal(size=(7, 6))
    weights = [(m.weight.detach().numpy(), m.bias.detach().numpy()) for m in model.network.linear_layers()]

    def stack(x, layers):
        for i, (w, b) in enumerate(layers):
            x = x @ w.T + b
            if i < len(layers) - 1:
                x = np.maximum(x, 0.0)
        return x

    h = stack(batch, weights[:3])
    r = stack(h, weights[3:])
    got_h, got_r = forward(model, batch)
    assert_allclose(got_h, h, rtol=0, atol=1e-12)
    assert_allclose(got_r, r, rtol=0, atol=1e-12)


def test_forward_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        forward(init(small_config()), np.zeros((2, 5)))


def test_gradient_check_double_precision():
    model = init(small_config())
    x = torch.as_tensor(np.random.default_rng(3).uniform(size=(4, 6)))
    names = [name for name, _ in model.network.named_parameters()]
    params = tuple(p.detach().clone().requires_grad_(True) for p in model.network.parameters())

    def loss(*tensors):
        _, r = functional_call(model.network, dict(zip(names, tensors)), (x,))
        return torch.mean((r - x) ** 2)

    assert gradcheck(loss, params, eps=1e-5, atol=1e-8, rtol=1e-4)


def test_memorizes_one_point():
    point = np.array([[0.2, 0.9, 0.4, 0.7]])
    ds = make_dataset(np.repeat(point, 100, axis=0))
    config = AeConfig(input_dim=4, bottleneck_dim=2, hidden_dims=(32, 32), epochs=200, batch_size=16, seed=0)
    _, history = train(init(config), ds)
    assert history.shape == (200,)
    assert history[-1] < 1e-4


def test_epoch_bounds():
    with pytest.raises(ConfigError):
        init(small_config(epochs=0))
    _, history = train(init(small_config(epochs=1)), unit_data())
    assert history.shape == (1,)
    assert np.all(np.isfinite(history))


def test_training_is_reproducible():
    ds = unit_data()
    _, first = train(init(small_config()), ds)
    _, second = train(init(small_config()), ds)
    assert_array_equal(first, second)


def test_non_finite_loss_names_epoch():
    ds = Dataset(np.full((8, 6), np.nan))
    with pytest.raises(TrainingDiverged) as info:
        train(init(small_config()), ds)
    assert info.value.epoch == 1


def test_encode_single_row():
    model = init(small_config())
    emb = encode(model, make_dataset(np.zeros((1, 6))))
    assert (emb.n, emb.m) == (1, 2)
    assert emb.provenance == AUTOENCODED


def test_full_batch_history_matches_reconstruction_mse():
    ds = unit_data()
    config = small_config(batch_size=ds.n, epochs=4)
    model = init(config)
    train(model, ds, config._replace(epochs=3))
    before_last_step = reconstruction_mse(model, ds)
    _, last = train(model, ds, config._replace(epochs=1))
    assert last[0] == pytest.approx(before_last_step, rel=1e-9)
    assert reconstruction_mse(model, ds) != before_last_step

    _, uninterrupted = train(init(config), ds)
    assert uninterrupted[-1] == pytest.approx(before_last_step, rel=1e-6)


def test_override_cannot_change_the_built_optimizer():
    ds = unit_data()
    model = init(small_config())
    with pytest.raises(ConfigError, match="learning_rate"):
        train(model, ds, small_config(learning_rate=0.1))
    with pytest.raises(ConfigError, match="hidden_dims"):
        train(model, ds, small_config(hidden_dims=(8, 4)))
    _, history = train(model, ds, small_config(epochs=2, batch_size=8, seed=3, hidden_dims=[8, 5]))
    assert history.shape == (2,)


def test_single_precision_mode():
    ds = unit_data()
    model, history = train(init(small_config(precision="float32")), ds)
    emb = encode(model, ds)
    assert emb.coords.dtype == np.float64
    assert np.all(np.isfinite(emb.coords))


def test_checkpoint_round_trip_resumes_identically(tmp_path):
    ds = unit_data()
    model, history = train(init(small_config()), ds)
    path = save_checkpoint(model, tmp_path / "ae", history)
    restored, restored_history = load_checkpoint(path)
    assert_array_equal(restored_history, history)
    for a, b in zip(model.network.parameters(), restored.network.parameters()):
        assert torch.equal(a, b)
    _, more = train(model, ds, small_config(epochs=1, seed=11))
    _, more_restored = train(restored, ds, small_config(epochs=1, seed=11))
    assert_array_equal(more, more_restored)
