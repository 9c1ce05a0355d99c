import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from drlseg.disttrans import ConversionOptions, binarize, to_levelset
from drlseg.drls import (
    DrlsModel,
    convert,
    drls_forward,
    drls_train,
    predict_mask,
    rescale_for_network,
    sample_loss_and_grads,
)
from drlseg.errors import ConfigError, DegenerateRegionError
from drlseg.harness.phantom import PhantomSpec, generate_phantom
from drlseg.levelset import EnergyWeights, EvolutionConfig
from drlseg.neuralnet import NetworkParams, conv, encoder_decoder, init_params, logistic_head, network_forward, relu

SMALL = [conv(4), relu(), logistic_head()]
TRAIN_W = EnergyWeights(mu=0.0, nu=-0.01, alpha=1.0, lambda1=0.05, lambda2=0.05, epsilon=0.25)


def probe(gain=20.0):
    """Pass-through head: y = sigmoid(gain * (x - 1/2)), so y tracks the input."""
    return [logistic_head()], NetworkParams(((np.full((1, 1, 1, 1), gain), np.array([-gain / 2])),))


def disk(noise=0.0, size=64, radius=12, seed=0):
    return generate_phantom(PhantomSpec(width=size, height=size, radius=radius, noise_sigma=noise, seed=seed))


def dice(a, b):
    return 2 * (a & b).sum() / (a.sum() + b.sum())


def small_model(nsteps=2, weights=TRAIN_W, seed=0):
    return DrlsModel(SMALL, init_params(SMALL, 1, seed), weights, EvolutionConfig(nsteps=nsteps))


# -- conversion and masks -----------------------------------------------------


@given(arrays(float, (8, 8), elements=st.floats(0, 1)))
def test_convert_sign_is_binarization(y):
    phi = convert(y)
    assert np.array_equal(phi >= 0, binarize(y))
    assert np.all(np.abs(phi) <= 1.0)


def test_convert_is_distance_plus_output():
    y = np.zeros((16, 16))
    y[4:12, 4:12] = 0.9
    np.testing.assert_allclose(convert(y), to_levelset(y) + y - 0.5)


@given(st.floats(-0.15, 0.15))
def test_convert_has_unit_slope_while_binarization_holds(d):
    y = np.full((10, 10), 0.2)
    y[3:7, 3:7] = 0.8
    np.testing.assert_allclose(convert(y + d) - convert(y), d, atol=1e-12)


def test_rescale_for_network():
    np.testing.assert_array_equal(rescale_for_network(np.array([-1.0, -0.5, 0.0, 0.5, 0.7])), [0, 0, 0.5, 1, 1])


def test_predict_mask_examples():
    assert predict_mask(np.ones((3, 3))).all()
    assert not predict_mask(-np.ones((3, 3))).any()


@given(arrays(float, (6, 6), elements=st.floats(-10, 10, allow_subnormal=False)), st.floats(1e-3, 1e3))
def test_predict_mask_scale_invariant(phi, k):
    assert np.array_equal(predict_mask(phi), predict_mask(k * phi))


# -- forward ------------------------------------------------------------------


def test_nsteps_zero_is_initial_conversion():
    image, _ = disk(noise=0.1)
    model = small_model(nsteps=0)
    mask, trace = drls_forward(model, image)
    y, _ = network_forward(model.layers, model.params, image)
    assert len(trace) == 1
    assert np.array_equal(mask, binarize(y))


@pytest.mark.parametrize("nsteps", [0, 1, 3, 5])
def test_trace_length(nsteps):
    image, gt = disk(size=32, radius=8)
    layers, params = probe()
    model = DrlsModel(layers, params, EnergyWeights(), EvolutionConfig(nsteps=nsteps, inner_iters=2))
    _, trace = drls_forward(model, image, gt)
    assert len(trace) == len(trace.ys) == len(trace.energies) == nsteps + 1
    assert len(trace.evolved) == nsteps
    assert all(np.isfinite(trace.energies))


def test_identity_probe_on_clean_disk():
    image, gt = disk()
    layers, params = probe()
    cfg = EvolutionConfig(nsteps=3, data_field_mode="feature_map")
    mask, trace = drls_forward(DrlsModel(layers, params, EnergyWeights(), cfg), image, gt)
    assert dice(mask, gt) >= 0.99
    e = trace.energies
    assert all(b <= a for a, b in zip(e, e[1:]))


def test_zero_weights_make_evolution_a_no_op():
    image, gt = disk(noise=0.1, size=32, radius=8)
    layers, params = probe()
    zero = EnergyWeights(0.0, 0.0, 0.0, 0.0, 0.0, 1.0)
    _, trace = drls_forward(DrlsModel(layers, params, zero, EvolutionConfig(nsteps=3)), image, gt)
    for before, after in zip(trace.phis, trace.evolved):
        assert np.array_equal(before, after)


def test_forward_is_deterministic():
    image, gt = disk(noise=0.2, size=32, radius=8, seed=5)
    model = small_model(nsteps=3)
    _, a = drls_forward(model, image, gt)
    _, b = drls_forward(model, image, gt)
    for x, y in zip(a.phis + a.ys, b.phis + b.ys):
        assert np.array_equal(x, y)
    assert a.energies == b.energies


def test_forward_rejects_out_of_range_image():
    with pytest.raises(ValueError):
        drls_forward(small_model(), np.full((16, 16), 1.5))


def test_degenerate_region_error_carries_step():
    err = DegenerateRegionError("outside", 0.0).at_step(2)
    assert err.step == 2 and "step 2" in str(err)


# -- training -----------------------------------------------------------------


def test_zero_learning_rate_is_identity():
    image, gt = disk(noise=0.1, size=16, radius=5)
    model = small_model()
    trained, history = drls_train(model, [(image, gt)], epochs=3, learning_rate=0.0)
    assert all(np.array_equal(a, b) for a, b in zip(model.params.arrays(), trained.params.arrays()))
    assert history[0] == history[1] == history[2]


def test_single_sample_loss_decreases():
    image, gt = disk(noise=0.1, size=16, radius=5)
    _, history = drls_train(small_model(nsteps=1), [(image, gt)], epochs=50, learning_rate=1e-4, seed=0)
    assert len(history) == 50
    assert history[-1] < history[0]


def test_training_is_deterministic():
    data = [disk(noise=0.1, size=16, radius=r, seed=r) for r in (4, 5, 6)]
    a, ha = drls_train(small_model(), data, epochs=2, seed=3)
    b, hb = drls_train(small_model(), data, epochs=2, seed=3)
    assert ha == hb
    assert all(np.array_equal(x, y) for x, y in zip(a.params.arrays(), b.params.arrays()))


def test_final_step_supervision_uses_last_energy():
    image, gt = disk(noise=0.1, size=16, radius=5)
    model = small_model(nsteps=2)
    loss, _ = sample_loss_and_grads(model, image, gt, "final_step")
    _, trace = drls_forward(model, image, gt)
    assert loss == trace.energies[-1]
    total, _ = sample_loss_and_grads(model, image, gt, "per_step")
    assert total == pytest.approx(sum(trace.energies))


def test_train_validation():
    image, gt = disk(size=16, radius=5)
    with pytest.raises(ConfigError):
        drls_train(small_model(), [], epochs=1)
    with pytest.raises(ConfigError):
        drls_train(small_model(), [(image, None)], epochs=1)
    with pytest.raises(ConfigError):
        drls_train(small_model(), [(image, gt)], epochs=1, supervision="sometimes")
    with pytest.raises(ConfigError):
        drls_train(small_model(), [(image, gt), (image[:8, :8], gt[:8, :8])], epochs=1)


def test_default_stack_runs_recurrence():
    image, gt = disk(noise=0.1)
    layers = encoder_decoder()
    model = DrlsModel(layers, init_params(layers, 1, 0), TRAIN_W, EvolutionConfig(nsteps=2))
    loss, grads = sample_loss_and_grads(model, image, gt)
    assert np.isfinite(loss)
    assert all(np.all(np.isfinite(a)) for a in grads.arrays())
