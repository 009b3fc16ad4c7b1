import numpy as np
import pytest

from quasilocal.errors import InvalidInput
from quasilocal.io import matrix_from_json, matrix_to_json, read_matrix_csv, system_from_json, system_to_json
from quasilocal.systems import EprParams, ExtendedSystem, epr_target

from conftest import maxabs


def test_matrix_round_trip(rng):
    M = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
    doc = matrix_to_json(M)
    assert (doc["rows"], doc["cols"]) == (3, 4)
    assert np.array_equal(matrix_from_json(doc), M)
    R = rng.normal(size=(2, 2))
    assert "imag" not in matrix_to_json(R)
    assert np.array_equal(matrix_from_json(matrix_to_json(R)), R)
    assert np.array_equal(matrix_from_json([[1, 2], [3, 4]]), [[1, 2], [3, 4]])


def test_matrix_json_validation():
    with pytest.raises(InvalidInput):
        matrix_from_json({"rows": 2, "cols": 2, "real": [1, 2, 3]})
    with pytest.raises(InvalidInput):
        matrix_from_json({"rows": 1})


def test_system_round_trip():
    sys = epr_target(EprParams(0.7, epsilon=1.2))
    doc = system_to_json(ExtendedSystem(sys, 2.0, 0.05), epsilon=1.2)
    back, kappa, gamma, eps = system_from_json(doc)
    assert maxabs(back.C - sys.C) == 0 and maxabs(back.G - sys.G) == 0
    assert (kappa, gamma, eps) == (2.0, 0.05, 1.2)


def test_system_shape_mismatch():
    doc = system_to_json(epr_target(EprParams(0.5)), kappa=1.0)
    doc["n"] = 3
    with pytest.raises(InvalidInput):
        system_from_json(doc)


def test_read_matrix_csv(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("1,0\n0.5,2\n")
    assert np.array_equal(read_matrix_csv(path), [[1, 0], [0.5, 2]])
