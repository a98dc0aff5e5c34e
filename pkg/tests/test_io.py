import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fpcaband import io as fio
from fpcaband.band import ConfidenceBand, build_band, ms_band, simulate_quantile
from fpcaband.cutoff import risk_curve
from fpcaband.grid import make_domain
from fpcaband.regression import FplrDataset, fit_pca
from fpcaband.simulation import DgpConfig, run_study


def _same(a, b):
    assert a.domain == b.domain
    assert np.array_equal(a.responses, b.responses)
    assert np.array_equal(a.curves, b.curves)
    if a.covariates is None:
        assert b.covariates is None
    else:
        assert np.array_equal(a.covariates, b.covariates)


def test_toy_round_trip(tmp_path):
    d = make_domain(0, 1, 2)
    data = FplrDataset(d, [0.1, -2.5, 1e-300], [[1 / 3, 2.0], [np.pi, -0.0], [5e-324, 1e300]])
    fio.write_dataset(data, tmp_path / "toy.csv")
    _same(data, fio.read_dataset(tmp_path / "toy.csv"))


def test_round_trip_with_covariates(tmp_path, rng):
    d = make_domain(-2.5, 7.0, 5)
    Z = np.column_stack([np.ones(6), rng.normal(size=(6, 2))])
    data = FplrDataset(d, rng.normal(size=6), rng.normal(size=(6, 5)), Z)
    fio.write_dataset(data, tmp_path / "z.csv", meta={"note": "x"})
    back = fio.read_dataset(tmp_path / "z.csv")
    _same(data, back)
    assert fio.read_metadata(tmp_path / "z.csv")["note"] == "x"


finite = st.floats(allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(1, 5),
    p=st.integers(2, 6),
    lower=st.floats(-1e3, 1e3),
    length=st.floats(1e-3, 1e3),
    data=st.data(),
)
def test_round_trip_property(tmp_path_factory, n, p, lower, length, data):
    Y = data.draw(arrays(float, n, elements=finite))
    X = data.draw(arrays(float, (n, p), elements=finite))
    ds = FplrDataset(make_domain(lower, lower + length, p), Y, X)
    path = tmp_path_factory.mktemp("rt") / "d.csv"
    fio.write_dataset(ds, path)
    _same(ds, fio.read_dataset(path))


def test_domain_override(tmp_path):
    data = FplrDataset(make_domain(0, 1, 3), [1.0], [[1.0, 2.0, 3.0]])
    fio.write_dataset(data, tmp_path / "d.csv")
    assert fio.read_dataset(tmp_path / "d.csv", 10.0, 16.0).domain == make_domain(10, 16, 3)


def _write(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    return path


def test_string_cell_named(tmp_path):
    path = _write(tmp_path, "y,x_1,x_2\n1.0,2.0,3.0\n4.0,abc,6.0\n")
    with pytest.raises(fio.SchemaError, match=r"row 3, column 'x_1'.*abc"):
        fio.read_dataset(path)


def test_schema_errors(tmp_path):
    cases = {
        "y,z1,x_1,x_2\n1,2,3,4\n": "z1",
        "y,x_1,x_2\n1,nan,3\n": "non-finite",
        "y,x_1,x_2\n1,inf,3\n": "non-finite",
        "y,x_1,x_2\n1,2\n": "cells",
        "x_1,y,x_2\n1,2,3\n": "first column",
        "y,x_2,x_1\n1,2,3\n": "header",
        "y,x_1\n1,2\n": "at least 2",
        "y,x_1,x_2\n": "no data",
        "": "header",
    }
    for text, msg in cases.items():
        with pytest.raises(fio.SchemaError, match=msg):
            fio.read_dataset(_write(tmp_path, text))


def test_locale_independent_decimal(tmp_path):
    path = _write(tmp_path, 'y,x_1,x_2\n"1,5",2,3\n')
    with pytest.raises(fio.SchemaError):
        fio.read_dataset(path)


def test_bundled_tecator(tecator):
    assert tecator.n == 215 and tecator.domain.p == 100
    assert tecator.domain == make_domain(850, 1050, 100)
    assert tecator.domain.weight == 2.0
    assert 0 < tecator.responses.min() and tecator.responses.max() < 100
    assert fio.read_metadata(fio.tecator_path())["response"] == "fat"


def _cmu_export(path, X, fat):
    lines = ["Tecator data set", "Some free text describing the file.", ""]
    rng = np.random.default_rng(0)
    for x, f in zip(X, fat):
        record = np.concatenate([x, rng.normal(size=22), [60.0, f, 17.0]])
        for k in range(0, 125, 5):
            lines.append(" ".join(f"{v:.5f}" for v in record[k : k + 5]))
    path.write_text("\n".join(lines) + "\n")


def test_cmu_export_parse_and_convert(tmp_path):
    X = np.round(np.random.default_rng(1).uniform(2, 5, size=(3, 100)), 5)
    fat = np.array([10.5, 22.0, 3.25])
    _cmu_export(tmp_path / "tecator.txt", X, fat)
    data = fio.read_tecator_export(tmp_path / "tecator.txt")
    assert data.n == 3 and data.domain == make_domain(850, 1050, 100)
    assert np.array_equal(data.responses, fat) and np.allclose(data.curves, X, atol=0)
    out = tmp_path / "tecator.csv"
    fio.convert_tecator(tmp_path / "tecator.txt", out)
    _same(data, fio.read_dataset(out))


def test_cmu_export_truncated(tmp_path):
    (tmp_path / "t.txt").write_text("header\n1 2 3\n")
    with pytest.raises(fio.SchemaError, match="multiple of 125"):
        fio.read_tecator_export(tmp_path / "t.txt")


def test_tecator_table(tmp_path):
    X = np.arange(200.0).reshape(2, 100)
    header = ",".join([f"x_{k:03d}" for k in range(1, 101)] + ["fat", "water"])
    rows = [",".join(str(float(v)) for v in [*x, f, 1.0]) for x, f in zip(X, [5.0, 6.0])]
    (tmp_path / "meats.csv").write_text(header + "\n" + "\n".join(rows) + "\n")
    data = fio.convert_tecator(tmp_path / "meats.csv", tmp_path / "out.csv")
    assert np.array_equal(data.curves, X) and data.responses.tolist() == [5.0, 6.0]


def _band_rows(path):
    rows = fio.read_table(path)
    return {k: np.array([float(r[k]) for r in rows]) for k in ("t", "bhat", "lower", "upper")}


def test_emit_zero_width(tmp_path, dgp_data):
    data, _ = dgp_data
    f = fit_pca(data, 3)
    band = ConfidenceBand(f.slope, 0.0, 0.1, 0.1, "proposed", 0.0)
    fio.emit_band(band, f, tmp_path / "b.csv")
    cols = _band_rows(tmp_path / "b.csv")
    assert np.array_equal(cols["lower"], cols["bhat"]) and np.array_equal(cols["upper"], cols["bhat"])
    assert np.array_equal(cols["bhat"], f.slope.values)
    assert np.array_equal(cols["t"], data.domain.nodes)


def test_emit_proposed_constant_width(tmp_path, dgp_data):
    data, _ = dgp_data
    f = fit_pca(data, 4)
    q = simulate_quantile(f.kappas, 0.1, 5000, seed=3)
    fio.emit_band(build_band(f, q, 0.1), f, tmp_path / "b.csv", quantile=q, meta={"config_hash": "abc"})
    cols = _band_rows(tmp_path / "b.csv")
    width = cols["upper"] - cols["lower"]
    assert np.allclose(width, width[0], rtol=1e-12)
    meta = fio.read_metadata(tmp_path / "b.csv")
    assert meta["kind"] == "proposed" and meta["m"] == "4" and meta["B"] == "5000"
    assert float(meta["c_n"]) == q.value and float(meta["sigma2"]) == f.sigma2
    assert meta["seed"] == "3" and meta["config_hash"] == "abc"


def test_emit_ms_width_recomputed(tmp_path, dgp_data):
    data, _ = dgp_data
    f = fit_pca(data, 4)
    fio.emit_band(ms_band(f, 0.1), f, tmp_path / "ms.csv")
    cols = _band_rows(tmp_path / "ms.csv")
    meta = fio.read_metadata(tmp_path / "ms.csv")
    c = float(meta["critical_value"])
    shape = (f.eig.eigenfunctions[:4] ** 2 / f.kappas[:, None]).sum(axis=0)
    expected = np.sqrt(f.sigma2) * np.sqrt(c / f.n * shape)
    assert np.allclose((cols["upper"] - cols["lower"]) / 2, expected, rtol=1e-10, atol=0)
    assert meta["tau2"] == ""


def test_risk_and_study_tables(tmp_path, dgp_data):
    data, _ = dgp_data
    curve = risk_curve(data)
    fio.write_risk_curve(curve, tmp_path / "r.csv")
    rows = fio.read_table(tmp_path / "r.csv")
    assert [int(r["m"]) for r in rows] == list(curve.candidates)
    assert np.array_equal([float(r["risk"]) for r in rows], curve.values)
    res = run_study(DgpConfig(80, 2.0, 3.2, seed=1), 3, draws=1000)
    rmse_path = fio.write_study(res, tmp_path / "s.csv", fio.provenance({"seed": 1}))
    assert rmse_path.name == "s_rmse.csv"
    rows = fio.read_table(tmp_path / "s.csv")
    assert {"ucp", "mcp", "max_width", "mean_width", "rule", "band"} <= set(rows[0])
    assert float(rows[0]["mcp"]) == res.summary[0]["mcp"]
    meta = fio.read_metadata(rmse_path)
    assert meta["config_hash"] == fio.config_hash({"seed": 1}) and meta["version"]


def test_config_hash_stable():
    assert fio.config_hash({"a": 1, "b": [1, 2]}) == fio.config_hash({"b": [1, 2], "a": 1})
    assert fio.config_hash({"a": 1}) != fio.config_hash({"a": 2})
    assert len(fio.config_hash({})) == 16
