import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pcrkit.model import (
    Database,
    FeatureVector,
    ImmutableSet,
    IngestError,
    QuantizationConfig,
    WeightVector,
    dequantize,
    ingest_csv,
    quantize,
    read_database,
    read_vectors,
    write_vectors,
)


def test_feature_vector_range_checked():
    FeatureVector((0, 4), 4)
    with pytest.raises(ValueError):
        FeatureVector((0, 5), 4)
    with pytest.raises(ValueError):
        FeatureVector((-1, 0), 4)


def test_database_is_one_based_and_uniform_dimension():
    db = Database.from_rows([(1, 2), (3, 4)], 4)
    assert (db.M, db.d) == (2, 2)
    assert db.record(1).entries == (1, 2)
    with pytest.raises(IndexError):
        db.record(0)
    with pytest.raises(ValueError):
        Database.from_rows([(1, 2), (3,)], 4)


def test_database_infers_R():
    assert Database.from_rows([(20, 0), (0, 20)]).R == 20


def test_immutable_set_and_weights():
    imm = ImmutableSet.of([3, 1], d=3)
    assert imm.indices == (1, 3)
    assert imm.mask() == [1, 0, 1]
    assert imm.zero_based() == (0, 2)
    with pytest.raises(ValueError):
        ImmutableSet.of([4], d=3)
    with pytest.raises(ValueError):
        ImmutableSet.of([1, 2], d=3, F=1)
    with pytest.raises(ValueError):
        WeightVector((0, 1), 3)
    assert tuple(WeightVector.ones(2)) == (1, 1)


def test_quantize_round_half_up_and_clamp():
    cfg = QuantizationConfig.from_ranges(5, [0.0], [4.0])
    assert quantize([0.5], cfg).entries == (1,)
    assert quantize([1.49], cfg).entries == (1,)
    assert quantize([2.5], cfg).entries == (3,)
    assert quantize([-3.0], cfg).entries == (0,)
    assert quantize([9.0], cfg).entries == (4,)


@given(st.integers(min_value=2, max_value=64), st.lists(st.integers(min_value=0, max_value=63), min_size=1, max_size=5))
def test_quantize_dequantize_round_trip_on_grid(levels, raw):
    v = [min(e, levels - 1) for e in raw]
    cfg = QuantizationConfig.from_ranges(levels, [-1.0] * len(v), [3.0] * len(v))
    fv = FeatureVector(v, levels - 1)
    assert quantize(dequantize(fv, cfg), cfg) == fv


def _write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_ingest_split_and_ranges(tmp_path):
    p = _write(tmp_path, "a,b,y\n0,10,1\n4,0,0\n2,5,1\n")
    res = ingest_csv(p, QuantizationConfig(5, label="y", accepted_value="1"))
    assert res.accepted.rows() == [(0, 4), (2, 2)]
    assert [fv.entries for fv in res.rejected] == [(4, 0)]
    assert res.feature_names == ["a", "b"]


def test_ingest_threshold_label(tmp_path):
    p = _write(tmp_path, "a,quality\n1,6\n2,5\n3,7\n")
    res = ingest_csv(p, QuantizationConfig(3, label="quality", accepted_threshold=6))
    assert len(res.accepted) == 2 and len(res.rejected) == 1


def test_ingest_errors_name_the_problem(tmp_path):
    p = _write(tmp_path, "a,b,y\n0,1,1\n1,x,0\n")
    with pytest.raises(IngestError, match="row 2, column 'b'"):
        ingest_csv(p, QuantizationConfig(4, label="y", accepted_value="1"))
    with pytest.raises(IngestError, match="'label'"):
        ingest_csv(p, QuantizationConfig(4, label="label", accepted_value="1"))
    q = _write(tmp_path, "a,y\n0,1\n1,1\n", "all.csv")
    with pytest.raises(IngestError, match="no rejected"):
        ingest_csv(q, QuantizationConfig(4, label="y", accepted_value="1"))


def test_ingest_dedup(tmp_path):
    p = _write(tmp_path, "a,y\n0,1\n0,1\n3,1\n1,0\n")
    res = ingest_csv(p, QuantizationConfig(4, label="y", accepted_value="1"), dedup=True)
    assert len(res.accepted) == 2
    assert res.duplicates_dropped == 1


def test_config_sidecar_round_trip(tmp_path):
    cfg = QuantizationConfig.from_ranges(8, [0, 1], [2, 3], names=["u", "v"])
    p = tmp_path / "q.json"
    p.write_text(json.dumps(cfg.to_json()))
    assert QuantizationConfig.from_json(p) == cfg


def test_vectors_round_trip(tmp_path):
    vecs = [FeatureVector((1, 2), 3), FeatureVector((3, 0), 3)]
    p = tmp_path / "v.csv"
    write_vectors(p, vecs, ["a", "b"])
    names, rows = read_vectors(p, 3)
    assert names == ["a", "b"] and rows == [(1, 2), (3, 0)]
    assert read_database(p, 3).rows() == rows
    with pytest.raises(IngestError):
        read_vectors(p, 2)
