import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wegnerflow.core_model import (
    BranchLabel,
    FixedPoint,
    QuadraticCoefficients,
    Regime,
    Stability,
    WegnerFlowError,
    classify_regime,
)


def phys(w, g, v=0.0):
    return QuadraticCoefficients.physical(w, g, v)


@pytest.mark.parametrize("params, expected", [
    ((1, 0.25, 0), Regime.BOUNDED),
    ((1, 1, 0), Regime.UNBOUNDED),
    ((1, 0, 3), Regime.FREE),
    ((1, 0.5, 0), Regime.CRITICAL),
    ((0, 0, 1), Regime.DEGENERATE),
    ((0, 0.3, 0), Regime.UNBOUNDED),
    ((-1, 0.25, 0), Regime.BOUNDED),
    ((1, -0.5, 0), Regime.CRITICAL),
])
def test_classify_examples(params, expected):
    assert classify_regime(phys(*params)) is expected


def test_critical_band_is_configurable():
    c = phys(1.0, 0.5 * (1 + 1e-9))
    assert classify_regime(c) is Regime.UNBOUNDED
    assert classify_regime(c, rtol=1e-8) is Regime.CRITICAL


def test_classify_rejects_complex():
    with pytest.raises(WegnerFlowError, match="physical coefficients"):
        classify_regime(QuadraticCoefficients(1.0, 0.25 + 1e-3j, 0.0))


def test_physical_rejects_imaginary_part():
    with pytest.raises(WegnerFlowError):
        QuadraticCoefficients.physical(1.0, 0.2j)


def test_coefficients_must_be_finite():
    with pytest.raises(WegnerFlowError):
        QuadraticCoefficients(math.nan, 0.0)
    with pytest.raises(WegnerFlowError):
        QuadraticCoefficients(1.0, complex(0, math.inf))


# keep s * x away from underflow so scaling is exact in regime terms
finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False).filter(
    lambda x: x == 0 or abs(x) > 1e-6)
scale = st.floats(min_value=1e-3, max_value=1e3).flatmap(
    lambda s: st.sampled_from([s, -s]))


@given(finite, finite, finite, scale)
def test_classify_scale_invariant(w, g, v, s):
    c = phys(w, g, v)
    assert classify_regime(phys(s * w, s * g, s * v)) is classify_regime(c)


@given(st.floats(min_value=1e-3, max_value=1e3), st.floats(min_value=0.0, max_value=10.0))
def test_classify_depends_on_ratio_only(w, ratio):
    g = ratio * w / 2  # |2 lambda / omega| = ratio
    expected = classify_regime(phys(1.0, ratio / 2))
    assert classify_regime(phys(w, g)) is expected


def test_conj_and_invariant():
    c = QuadraticCoefficients(1 + 2j, 0.5 - 1j, 3j)
    assert c.conj() == QuadraticCoefficients(1 - 2j, 0.5 + 1j, -3j)
    assert c.invariant == (1 + 2j) ** 2 - 4 * (0.5 - 1j) ** 2


def test_fixed_point_residual():
    L = math.sqrt(0.75)
    assert FixedPoint(phys(0, L, -0.5), Stability.ATTRACTOR).residual() == 0
    up = FixedPoint(QuadraticCoefficients(2j * L, 0, 0), Stability.UNSTABLE, BranchLabel.PLUS)
    assert up.residual() == 0
    assert FixedPoint(phys(1, 0.25), Stability.ATTRACTOR).residual() > 0


@pytest.mark.parametrize("text, label", [("+", BranchLabel.PLUS), ("minus", BranchLabel.MINUS),
                                         ("0", BranchLabel.ZERO)])
def test_branch_parse(text, label):
    assert BranchLabel.parse(text) is label
    assert label.sign == {"+": 1, "-": -1, "0": 0}[label.value]


def test_as_array_roundtrip():
    c = QuadraticCoefficients(1 + 1j, 2, -3j)
    assert QuadraticCoefficients.from_array(c.as_array()) == c
    assert np.iscomplexobj(c.as_array())
