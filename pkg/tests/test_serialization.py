import csv
import io
import json

import numpy as np

from wegnerflow.core_model import QuadraticCoefficients
from wegnerflow.flow_engine import Direction, find_unstable_points, integrate_unitary
from wegnerflow.serialization import (
    TRAJECTORY_COLUMNS,
    dumps,
    terminal_from_dict,
    terminal_to_dict,
    trajectory_from_dict,
    trajectory_to_csv,
    trajectory_to_dict,
)


def test_trajectory_json_roundtrip():
    tr = integrate_unitary(QuadraticCoefficients.physical(1, 0.25, 0.3))
    back = trajectory_from_dict(json.loads(dumps(trajectory_to_dict(tr))))
    assert back == tr
    assert back.terminal == tr.terminal


def test_complex_trajectory_roundtrip():
    res = find_unstable_points(QuadraticCoefficients.physical(1, 1, 0))
    tr = res.plus_trajectory
    back = trajectory_from_dict(json.loads(dumps(trajectory_to_dict(tr))))
    assert back == tr and back.direction is Direction.BACKWARD
    np.testing.assert_array_equal(back.coefficients.imag, tr.coefficients.imag)


def test_divergence_terminal_roundtrip():
    tr = integrate_unitary(QuadraticCoefficients.physical(1, 0.5, 0))
    d = terminal_to_dict(tr.terminal)
    assert d["type"] == "DivergenceReport"
    assert terminal_from_dict(json.loads(json.dumps(d))) == tr.terminal


def test_csv_columns_and_precision():
    tr = integrate_unitary(QuadraticCoefficients.physical(1, 0.25, 0))
    rows = list(csv.reader(io.StringIO(trajectory_to_csv(tr))))
    assert tuple(rows[0]) == TRAJECTORY_COLUMNS
    assert TRAJECTORY_COLUMNS == ("l", "re_omega", "im_omega", "re_lambda", "im_lambda",
                                  "re_v", "im_v", "invariant_residual")
    body = np.array(rows[1:], dtype=float)
    assert body.shape == (len(tr), 8)
    np.testing.assert_array_equal(body[:, 0], tr.l)
    np.testing.assert_array_equal(body[:, 1], tr.omega.real)
    np.testing.assert_array_equal(body[:, 3], tr.lam.real)
    np.testing.assert_array_equal(body[:, 7], tr.invariant_residual)


def test_serialization_is_deterministic():
    c = QuadraticCoefficients.physical(1.3, -0.9, 0.1)
    a = dumps(trajectory_to_dict(integrate_unitary(c)))
    b = dumps(trajectory_to_dict(integrate_unitary(c)))
    assert a == b
    assert trajectory_to_csv(integrate_unitary(c)) == trajectory_to_csv(integrate_unitary(c))
