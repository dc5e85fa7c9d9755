import json
import math

import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gammaln

from resum.models import (
    BUNDLED,
    CoefficientModel,
    ModelError,
    ModelKind,
    coefficient,
    coefficient_result,
    load_model,
    model_from_dict,
    model_to_dict,
    rescale,
    resolve_model,
    save_model,
)

CLOSED = {
    "f1": lambda k: k**-0.5,
    "f2": lambda k: 1 / (k**math.pi + math.log(k)),
    "f3-stirling": lambda k: math.exp(gammaln(k + 1) - (k + 1) * math.log(k)),
    "borel-sqrt": lambda k: k**-0.5,
}


def doc(**over):
    d = {"kind": "FiniteRadius", "f0": 0, "terms": [{"a": 1, "kernel": "power_law:0.5"}]}
    d.update(over)
    return d


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_closed_forms(name):
    m = resolve_model(name)
    for k in range(1, 21):
        assert coefficient(m, k) == pytest.approx(CLOSED[name](k), rel=1e-9), k


def test_bundled_kinds():
    assert resolve_model("f1").kind is ModelKind.FINITE_RADIUS
    assert resolve_model("f3-stirling").kind is ModelKind.ENTIRE
    assert resolve_model("borel-sqrt").kind is ModelKind.BOREL
    assert resolve_model("f1").radius == 1.0


def test_zero_location_rejected():
    with pytest.raises(ModelError):
        model_from_dict(doc(terms=[{"a": 0, "kernel": "f2"}]))


def test_duplicate_location_rejected():
    t = {"a": [2, 0], "kernel": "f2"}
    with pytest.raises(ModelError):
        model_from_dict(doc(terms=[t, dict(t)]))


@pytest.mark.parametrize("bad", [
    doc(kind="Nope"),
    doc(terms=[]),
    doc(terms=[{"a": 1, "kernel": "unknown_kernel"}]),
    doc(terms=[{"a": 1}]),
    doc(extra=1),
    doc(kind="Entire", f0=1),
    doc(terms=[{"a": 1, "kernel": {"expr": "p+"}}]),
    doc(terms=[{"a": 1, "kernel": "power_law:0.5", "decay": {"type": "algebraic", "rate": 0.5}}]),
])
def test_bad_documents(bad):
    with pytest.raises(ModelError):
        model_from_dict(bad)


def test_fast_growing_kernel_rejected():
    with pytest.raises(ModelError):
        model_from_dict(doc(terms=[{"a": 1, "kernel": {"expr": "exp(3*p)"}}]))


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.resum.json"
    p.write_text("{not json")
    with pytest.raises(ModelError):
        load_model(p)


def test_missing_model():
    with pytest.raises(FileNotFoundError):
        resolve_model("no-such-model")


@pytest.mark.parametrize("name", BUNDLED)
def test_save_load_identity(name, tmp_path):
    m = resolve_model(name)
    path = tmp_path / f"{name}.resum.json"
    save_model(m, path)
    m2 = load_model(path)
    assert model_to_dict(m2) == model_to_dict(m)
    assert json.loads(path.read_text()) == model_to_dict(m)
    for k in (1, 5):
        assert coefficient(m2, k) == coefficient(m, k)


def test_expression_kernel_document():
    m = model_from_dict(doc(terms=[{"a": 2, "kernel": {"expr": "exp(-p)", "cut": "principal"}}]))
    # a^-k / (k + 1)
    assert coefficient(m, 3) == pytest.approx(2**-3 / 4, rel=1e-13)


def test_two_terms_add():
    m = model_from_dict(doc(terms=[{"a": 1, "kernel": "power_law:1"}, {"a": -2, "kernel": "power_law:1"}]))
    k = 3
    assert coefficient(m, k) == pytest.approx(1 / k + (-2) ** -k / k, rel=1e-13)
    assert m.radius == 1.0


def test_coefficient_index_checked():
    with pytest.raises(ValueError):
        coefficient_result(resolve_model("f1"), 0)


def test_rescale_examples():
    f1 = resolve_model("f1")
    assert coefficient(rescale(f1, 1), 4) == pytest.approx(coefficient(f1, 4), rel=1e-15)
    assert coefficient(rescale(f1, 2), 4) == pytest.approx(8.0, rel=1e-12)
    with pytest.raises(ValueError):
        rescale(f1, 0)


@settings(max_examples=30, deadline=None)
@given(
    re=st.floats(min_value=-3, max_value=3),
    im=st.floats(min_value=-3, max_value=3),
    k=st.integers(min_value=1, max_value=12),
)
def test_rescale_group(re, im, k):
    A = complex(re, im)
    if abs(A) < 0.2:
        A = 0.5 + 0.5j
    m = resolve_model("f2")
    back = rescale(rescale(m, A), 1 / A)
    assert coefficient(back, k) == pytest.approx(coefficient(m, k), rel=1e-10)
    # rescaling commutes with taking coefficients
    assert coefficient(rescale(m, A), k) == pytest.approx(A**k * coefficient(m, k), rel=1e-10)


def test_model_constructor_checks():
    m = resolve_model("f1")
    with pytest.raises(ModelError):
        CoefficientModel(ModelKind.FINITE_RADIUS, ())
    with pytest.raises(ModelError):
        CoefficientModel(ModelKind.BOREL, m.terms, f0=1.0)
