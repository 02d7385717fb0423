import numpy as np
import pytest

from multinorm.errors import ConfigurationError, InputError
from multinorm.nn.autograd import Parameter
from multinorm.nn.checkpoint import load_checkpoint, save_checkpoint, vocab_hash
from multinorm.nn.optim import SgdConfig, global_norm, sgd_step


def param(value, grad, name="p"):
    p = Parameter(np.array(value, dtype=float), name)
    p.grad[...] = grad
    return p


def test_sgd_plain_update():
    p = param([1.0], [0.5])
    sgd_step([p], SgdConfig(0.1, clip_norm=None))
    assert p.data[0] == pytest.approx(0.95)
    assert p.grad[0] == 0.0


def test_zero_gradient_is_fixed_point():
    p = param([0.3, -2.0], [0.0, 0.0])
    sgd_step([p], SgdConfig(0.5))
    np.testing.assert_array_equal(p.data, [0.3, -2.0])


def test_clipping_scales_update_by_norm_ratio():
    a, b = param([0.0], [6.0], "a"), param([0.0], [8.0], "b")
    assert global_norm([a, b]) == pytest.approx(10.0)
    norm = sgd_step([a, b], SgdConfig(1.0, clip_norm=1.0))
    assert norm == pytest.approx(10.0)
    assert a.data[0] == pytest.approx(-0.6)
    assert b.data[0] == pytest.approx(-0.8)


def test_nan_gradient_aborts_naming_parameter():
    good, bad = param([1.0], [1.0], "good"), param([1.0], [np.nan], "bad")
    with pytest.raises(FloatingPointError, match="bad"):
        sgd_step([good, bad], SgdConfig(0.1))
    assert good.data[0] == 1.0


@pytest.mark.parametrize("lr", [0.0, -1.0])
def test_learning_rate_must_be_positive(lr):
    with pytest.raises(ConfigurationError):
        SgdConfig(lr)


@pytest.mark.parametrize("dtype", [np.float64, np.float32])
def test_checkpoint_round_trip_is_bit_exact(tmp_path, dtype):
    rng = np.random.default_rng(0)
    params = [Parameter(rng.normal(size=(3, 4)).astype(dtype), "w"),
              Parameter(np.array([np.pi, -0.0, 1e-300], dtype=dtype), "b")]
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, params, {"dims": [3, 4], "vocab_hash": vocab_hash(["a", "b"])})
    header, arrays = load_checkpoint(path)
    assert header["dims"] == [3, 4]
    assert header["precision"] == np.dtype(dtype).name
    for p in params:
        assert arrays[p.name].dtype == p.data.dtype
        assert arrays[p.name].tobytes() == p.data.tobytes()


def test_truncated_checkpoint_rejected(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, [Parameter(np.ones(2), "w")], {})
    path.write_text("\n".join(path.read_text().split("\n")[:-2]))
    with pytest.raises(InputError):
        load_checkpoint(path)


def test_vocab_hash_depends_on_order():
    assert vocab_hash(["a", "b"]) != vocab_hash(["b", "a"])
