import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from goldfc import CentroidUpload, ValidationError, parse_upload, serialize_upload

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


def test_round_trip_simple():
    up = CentroidUpload(client_id=0, k=1, d=2, centroids=np.array([[0.5, 0.5]]))
    back = parse_upload(serialize_upload(up))
    assert back.client_id == 0 and back.k == 1 and back.d == 2
    assert np.array_equal(back.centroids, up.centroids)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 50), st.integers(1, 5), st.integers(1, 4), st.data())
def test_round_trip_exact_for_all_finite_doubles(cid, k, d, data):
    values = data.draw(st.lists(finite, min_size=k * d, max_size=k * d))
    up = CentroidUpload(client_id=cid, k=k, d=d,
                        centroids=np.array(values).reshape(k, d))
    back = parse_upload(serialize_upload(up))
    # bit-exact, including signed zeros
    assert [v.hex() for v in up.centroids.ravel().tolist()] == \
           [v.hex() for v in back.centroids.ravel().tolist()]


def test_rejects_zero_k():
    payload = json.dumps(
        {"client_id": 0, "k": 0, "d": 1, "centroids": []}).encode()
    with pytest.raises(ValidationError):
        parse_upload(payload)


def test_rejects_schema_violations():
    with pytest.raises(ValidationError):
        parse_upload(b"not json")
    with pytest.raises(ValidationError):
        parse_upload(json.dumps({"client_id": 0, "k": 1, "d": 2}).encode())
    with pytest.raises(ValidationError):
        parse_upload(json.dumps(
            {"client_id": 0, "k": 1, "d": 2, "centroids": [[1.0]]}).encode())
    with pytest.raises(ValidationError):
        parse_upload(json.dumps(
            {"client_id": 0, "k": 1, "d": 1, "centroids": [["oops"]]}).encode())


def test_rejects_non_finite():
    with pytest.raises(ValidationError):
        CentroidUpload(client_id=0, k=1, d=1, centroids=np.array([[np.nan]]))
