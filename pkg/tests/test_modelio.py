import json

import numpy as np
import pytest

from mpsrestrict.chain import BoundaryPair, ChainGeometry
from mpsrestrict.errors import NotLeftNormalized
from mpsrestrict.modelio import load_model, save_model
from mpsrestrict.models import aklt, markov


def test_round_trip(tmp_path):
    path = tmp_path / "model.json"
    K = markov()
    b = BoundaryPair(L=np.array([1.0, 0.0]), R=np.array([1.0, 1.0]) / np.sqrt(2.0))
    g = ChainGeometry(len_a=1, len_b=2, len_c=1)
    save_model(path, K, boundaries=b, geometry=g, label="markov-test")
    mf = load_model(path)
    assert mf.label == "markov-test"
    assert np.allclose(mf.kraus.ops, K.ops, atol=0.0)
    assert np.allclose(mf.boundaries.L, b.L)
    assert np.allclose(mf.boundaries.R, b.R)
    assert (mf.geometry.len_a, mf.geometry.len_b, mf.geometry.len_c) == (1, 2, 1)


def test_round_trip_preserves_floats_exactly(tmp_path):
    """repr round-tripping keeps every matrix entry bit-identical."""
    path = tmp_path / "model.json"
    K = aklt()
    save_model(path, K)
    mf = load_model(path)
    assert np.array_equal(mf.kraus.ops, K.ops)
    assert mf.boundaries is None and mf.geometry is None


def test_load_rejects_not_normalized(tmp_path):
    path = tmp_path / "bad.json"
    doc = {
        "format": "kraus-family",
        "schema_version": 1,
        "d": 1,
        "D": 2,
        "matrices": [[[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]]],
    }
    path.write_text(json.dumps(doc))
    with pytest.raises(NotLeftNormalized) as exc:
        load_model(path)
    assert "sum A^dag A - I" in str(exc.value)
    assert exc.value.residual > 0.1


@pytest.mark.parametrize(
    "mutate,fragment",
    [
        (lambda d: d.update(format="other"), "format"),
        (lambda d: d.update(schema_version=99), "schema_version"),
        (lambda d: d.pop("d"), "'d'"),
        (lambda d: d.update(matrices=[]), "matrices"),
        (lambda d: d["matrices"][0].pop(0), "rows"),
        (lambda d: d["matrices"][0][0].__setitem__(0, [1.0]), "[re, im]"),
        (lambda d: d.update(label=7), "label"),
    ],
)
def test_load_rejects_malformed(tmp_path, mutate, fragment):
    path = tmp_path / "m.json"
    doc = {
        "format": "kraus-family",
        "schema_version": 1,
        "d": 1,
        "D": 2,
        "matrices": [[[[0.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]]]],
    }
    mutate(doc)
    path.write_text(json.dumps(doc))
    with pytest.raises(ValueError) as exc:
        load_model(path)
    assert fragment in str(exc.value)


def test_load_rejects_non_json(tmp_path):
    path = tmp_path / "m.json"
    path.write_text("not json {")
    with pytest.raises(ValueError):
        load_model(path)


def test_loader_tolerance_is_relaxed(tmp_path):
    """Files are accepted at 1e-8 even when in-memory construction uses the
    stricter 1e-10 default."""
    path = tmp_path / "m.json"
    eps = 3e-9
    doc = {
        "format": "kraus-family",
        "schema_version": 1,
        "d": 1,
        "D": 1,
        "matrices": [[[[1.0 + eps, 0.0]]]],
    }
    path.write_text(json.dumps(doc))
    mf = load_model(path)
    assert mf.kraus.d == 1
