import csv
import io
import json
import math
from pathlib import Path

import numpy as np
import pytest

from resum.cli import CSV_COLUMNS, main, parse_complex, parse_k_range

GOLDEN = Path(__file__).parent / "golden"


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


def same_shape(a, b):
    """Equal keys, types and lengths; numbers equal to 1e-9 relative."""
    if isinstance(a, dict):
        assert isinstance(b, dict) and sorted(a) == sorted(b)
        for k in a:
            same_shape(a[k], b[k])
    elif isinstance(a, list):
        assert isinstance(b, list) and len(a) == len(b)
        for x, y in zip(a, b):
            same_shape(x, y)
    elif isinstance(a, bool) or isinstance(a, str):
        assert a == b
    elif isinstance(a, (int, float)):
        assert type(a) is type(b)
        assert b == pytest.approx(a, rel=1e-9, abs=1e-12)


GOLDEN_CASES = {
    "coeffs_f1.json": ["coeffs", "f1", "--k", "1..5"],
    "eval_f1.json": ["eval", "f1", "--z", "0.5", "--z", "2+1i"],
    "eval_f3.json": ["eval", "f3-stirling", "--z", "1"],
    "singularity_f1.json": ["singularity", "f1"],
    "sums_eqsum_a4.json": ["sums", "eqsum", "--a", "4"],
    "borel_sqrt.json": ["borel", "borel-sqrt", "--z", "0.1"],
    "scan_f1.json": ["scan", "f1", "--start", "-5", "--end", "-1", "--count", "3"],
}


@pytest.mark.parametrize("name", sorted(GOLDEN_CASES))
def test_golden_json(name):
    code, text = run(*GOLDEN_CASES[name], "--format", "json")
    assert code == 0
    same_shape(json.loads((GOLDEN / name).read_text()), json.loads(text))


def test_coeffs_human():
    code, text = run("coeffs", "f1", "--k", "1..5")
    assert code == 0
    vals = [complex(line.split("value=")[1].split()[0].replace("i", "j")) for line in text.splitlines()[1:]]
    np.testing.assert_allclose(vals, [1, 0.7071067811865476, 0.5773502691896258, 0.5, 0.4472135954999579], rtol=1e-12)


def test_coeffs_json_roundtrip():
    code, text = run("coeffs", "f2", "--k", "2", "--format", "json")
    doc = json.loads(text)
    assert json.loads(json.dumps(doc)) == doc
    assert doc["results"][0]["value"][0] == pytest.approx(1 / (2**math.pi + math.log(2)))


def test_model_flag_and_file(tmp_path):
    src = Path(__file__).parents[1] / "src" / "resum" / "data" / "f1.resum.json"
    p = tmp_path / "f1.resum.json"
    p.write_text(src.read_text())
    a = run("coeffs", str(p), "--k", "3")
    b = run("coeffs", "--model", str(p), "--k", "3")
    assert a == b and a[0] == 0


def test_eval_examples():
    code, text = run("eval", "f1", "--z", "0.5", "--format", "json")
    v = json.loads(text)["results"][0]["value"]
    k = np.arange(1, 80)
    assert v[0] == pytest.approx(np.sum(0.5**k / np.sqrt(k)), abs=1e-13)
    assert run("eval", "f1", "--z", "1.0")[0] == 2
    code, text = run("eval", "f1", "--z", "1.1", "--side", "upper", "--format", "json")
    assert code == 0 and all(math.isfinite(x) for x in json.loads(text)["results"][0]["value"])


def read_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == CSV_COLUMNS
    return np.array(rows[1:], dtype=float)


def test_scan_f1():
    code, text = run("scan", "f1", "--start", "-50", "--end", "-1", "--count", "100")
    assert code == 0
    data = read_csv(text)
    assert data.shape == (100, 5)
    assert np.all(np.isfinite(data)) and np.all(data[:, 4] < 1e-10)


def test_scan_f3_envelope():
    code, text = run("scan", "f3-stirling", "--start", "-30", "--end", "0", "--count", "31")
    data = read_csv(text)
    x, f = data[:, 0], np.hypot(data[:, 2], data[:, 3])
    assert np.all(f <= 2 * np.exp(-x / math.e))
    # on the positive axis the envelope is attained: |f| sqrt(z) exp(-z/e) levels off
    code, text = run("scan", "f3-stirling", "--start", "10", "--end", "30", "--count", "5")
    data = read_csv(text)
    scaled = data[:, 2] * np.sqrt(data[:, 0]) * np.exp(-data[:, 0] / math.e)
    assert scaled.max() / scaled.min() < 1.1


def test_scan_single_point_and_file(tmp_path):
    out = tmp_path / "scan.csv"
    code, text = run("scan", "f1", "--start", "-2", "--end", "-1", "--count", "1", "--out", str(out))
    assert code == 0 and text == ""
    assert read_csv(out.read_text()).shape == (1, 5)
    assert run("scan", "f1", "--start", "-2", "--end", "-1", "--count", "0")[0] == 2


def test_sums_limit1():
    code, text = run("sums", "limit1", "--format", "json")
    assert code == 0
    row = json.loads(text)["results"][0]
    assert row["difference"] < 1e-4


@pytest.mark.parametrize("argv", [
    ["coeffs", "f1", "--k", "0.."],
    ["coeffs", "f1", "--k", "x"],
    ["coeffs"],
    ["coeffs", "no-such-model"],
    ["eval", "f1"],
    ["eval", "f1", "--z", "abc"],
    ["eval", "f1", "--z", "2", "--tol", "0"],
    ["frobnicate"],
    ["sums", "eqsum"],
    ["sums", "eqsum", "--a", "0.4"],
    ["borel", "f1", "--z", "0.1"],
    ["singularity", "f3-stirling"],
])
def test_usage_errors(argv):
    assert run(*argv)[0] == 2


@pytest.mark.parametrize("argv", [
    ["eval", "f1", "--z", "2+1i", "--tol", "1e-300"],
    ["sums", "eqsum", "--a", "2", "--reading", "literal"],
    ["borel", "borel-sqrt", "--z", "0.1", "--strict"],
])
def test_numeric_failures(argv):
    assert run(*argv)[0] == 3


def test_bad_model_file(tmp_path):
    p = tmp_path / "bad.resum.json"
    p.write_text('{"kind": "FiniteRadius", "terms": [{"a": 0, "kernel": "f2"}]}')
    assert run("coeffs", str(p))[0] == 2


def test_deterministic_across_threads(monkeypatch):
    argv = ["scan", "f1", "--start", "-3+1i", "--end", "4-2i", "--count", "17"]
    monkeypatch.setenv("RESUM_THREADS", "1")
    one = run(*argv)
    monkeypatch.setenv("RESUM_THREADS", "4")
    four = run(*argv)
    assert one == four == run(*argv)


def test_parsers():
    assert parse_complex("2+1i") == 2 + 1j
    assert parse_complex(" -3 ") == -3
    assert parse_k_range("1..3") == [1, 2, 3]
    assert parse_k_range("2,5") == [2, 5]
