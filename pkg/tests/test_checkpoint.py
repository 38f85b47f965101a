"""Checkpoint container: bitwise round-trips and diagnostic failures."""

import numpy as np
import pytest

from crowdnav.config import NetworkConfig
from crowdnav.policy.checkpoint import (
    CheckpointError,
    load_checkpoint,
    save_checkpoint,
    validate_params,
)
from crowdnav.policy.params import init_params


def small_net():
    return NetworkConfig(arch="st_graph", d_rnn=16, d_embed=8, d_k=4)


def test_round_trip_is_bitwise(tmp_path):
    net = small_net()
    params = init_params(net, seed=7)
    path = str(tmp_path / "p.ckpt")
    save_checkpoint(path, params, net, extra={"update_idx": 3, "note": "x"})
    loaded, net2, extra = load_checkpoint(path)
    assert (net2.arch, net2.d_rnn, net2.d_embed, net2.d_k) == ("st_graph", 16, 8, 4)
    assert extra == {"update_idx": 3, "note": "x"}
    assert set(loaded) == set(params)
    for k in params:
        assert loaded[k].dtype == np.float64
        np.testing.assert_array_equal(loaded[k], params[k])


def test_save_load_save_is_stable(tmp_path):
    net = small_net()
    params = init_params(net, seed=1)
    p1, p2 = str(tmp_path / "a.ckpt"), str(tmp_path / "b.ckpt")
    save_checkpoint(p1, params, net)
    loaded, _, _ = load_checkpoint(p1)
    save_checkpoint(p2, loaded, net)
    with open(p1, "rb") as fh:
        b1 = fh.read()
    with open(p2, "rb") as fh:
        b2 = fh.read()
    assert b1 == b2


def test_generic_tensor_dicts_round_trip(tmp_path):
    """The container also carries optimizer moments (arbitrary names)."""
    net = small_net()
    rng = np.random.default_rng(0)
    moments = {"m.w": rng.standard_normal((3, 4)), "v.w": rng.standard_normal((3, 4))}
    path = str(tmp_path / "opt.ckpt")
    save_checkpoint(path, moments, net, extra={"step": 12})
    loaded, _, extra = load_checkpoint(path)
    assert extra["step"] == 12
    np.testing.assert_array_equal(loaded["m.w"], moments["m.w"])
    np.testing.assert_array_equal(loaded["v.w"], moments["v.w"])


def test_bad_magic_is_diagnosed(tmp_path):
    path = str(tmp_path / "x.ckpt")
    with open(path, "wb") as fh:
        fh.write(b"NOTACKPT" + b"\0" * 64)
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(path)


def test_truncated_payload_is_diagnosed(tmp_path):
    net = small_net()
    params = init_params(net, seed=0)
    path = str(tmp_path / "t.ckpt")
    save_checkpoint(path, params, net)
    with open(path, "rb") as fh:
        blob = fh.read()
    with open(path, "wb") as fh:
        fh.write(blob[:-16])
    with pytest.raises(CheckpointError, match="truncated"):
        load_checkpoint(path)


def test_trailing_bytes_are_diagnosed(tmp_path):
    net = small_net()
    params = init_params(net, seed=0)
    path = str(tmp_path / "t.ckpt")
    save_checkpoint(path, params, net)
    with open(path, "ab") as fh:
        fh.write(b"\0" * 8)
    with pytest.raises(CheckpointError, match="trailing"):
        load_checkpoint(path)


def test_missing_file_is_diagnosed(tmp_path):
    with pytest.raises(CheckpointError, match="cannot read"):
        load_checkpoint(str(tmp_path / "absent.ckpt"))


def test_validate_params_catches_mismatches():
    net = small_net()
    params = init_params(net, seed=0)
    validate_params(params, net)  # no error on the matching dict

    missing = dict(params)
    missing.pop("attn.w_q")
    with pytest.raises(CheckpointError, match="attn.w_q"):
        validate_params(missing, net)

    wrong = dict(params)
    wrong["attn.w_q"] = np.zeros((2, 2))
    with pytest.raises(CheckpointError, match="shape"):
        validate_params(wrong, net)

    other = NetworkConfig(arch="rnn_attn", d_rnn=16, d_embed=8, d_k=4)
    with pytest.raises(CheckpointError):
        validate_params(params, other)
