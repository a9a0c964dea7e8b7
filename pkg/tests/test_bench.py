import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from holotwin import bench
from holotwin.cnn import NetworkSpec, init_weights
from holotwin.corpus import write_corpus
from holotwin.datasetgen import build_dataset
from holotwin.fieldcore import ComplexField, Raster, rmse, split
from holotwin.io import FormatError, read_any, read_image, read_raster, write_image, write_raster


@given(arrays(np.float64, st.tuples(st.integers(1, 9), st.integers(1, 9)),
              elements=st.floats(-1e6, 1e6, allow_nan=False)), st.floats(1e-7, 1e-3))
def test_raster_round_trip(tmp_path_factory, v, pitch):
    p = tmp_path_factory.mktemp("io") / "r.htw"
    write_raster(p, Raster(v, pitch))
    r = read_raster(p)
    assert r.pitch == pitch
    assert np.array_equal(r.values, v.astype(np.float32))


def test_complex_round_trip_preserves_split(tmp_path):
    rng = np.random.default_rng(0)
    f = ComplexField((0.5 + rng.random((7, 5))) * np.exp(1j * rng.uniform(-3, 3, (7, 5))), 2e-6)
    write_raster(tmp_path / "c.htw", f)
    g = read_raster(tmp_path / "c.htw")
    assert isinstance(g, ComplexField) and g.shape == (7, 5)
    for a, b in zip(split(f), split(g)):
        assert np.max(np.abs(a.values - b.values)) < 1e-6


def test_format_errors(tmp_path):
    write_raster(tmp_path / "r.htw", Raster(np.ones((4, 4))))
    data = (tmp_path / "r.htw").read_bytes()
    (tmp_path / "magic").write_bytes(b"NOPE" + data[4:])
    with pytest.raises(FormatError):
        read_raster(tmp_path / "magic")
    (tmp_path / "ver").write_bytes(data[:4] + b"\x09\x00" + data[6:])
    with pytest.raises(FormatError):
        read_raster(tmp_path / "ver")
    (tmp_path / "trunc").write_bytes(data[:-3])
    with pytest.raises(OSError):
        read_raster(tmp_path / "trunc")


def test_image_scaling(tmp_path):
    Image.fromarray(np.array([[0, 65535], [32768, 1]], np.uint16)).save(tmp_path / "a.png")
    r = read_image(tmp_path / "a.png")
    assert r.values.min() == 0 and r.values.max() == 1
    assert r.values[1, 0] == pytest.approx(32768 / 65535)
    write_image(tmp_path / "b.png", Raster(np.array([[0.0, 0.5], [1.0, 0.25]])), bits=16)
    assert np.allclose(read_any(tmp_path / "b.png").values, [[0, 0.5], [1, 0.25]], atol=1e-4)


@pytest.fixture(scope="module")
def small_set(tmp_path_factory, ):
    from holotwin.fieldcore import SystemParams

    root = tmp_path_factory.mktemp("bench")
    write_corpus(root / "corp", "flora", 2, seed=0, size=48)
    p = SystemParams(405e-9, 2.4e-6, 2.6e-3)
    ds = build_dataset(root / "corp", root / "ds", 4, p, 0, tile_size=16, denoiser="identity")
    w = init_weights(NetworkSpec(2, 3, 1), 0)
    return ds, w


def test_evaluate_as_column_is_stored_input_rmse(small_set):
    ds, w = small_set
    rep = bench.evaluate({"a": ds}, ["AS", "UTIRnet"], w, w, kinds=("amplitude", "phase"))
    for kind in ("amplitude", "phase"):
        ref = {ds.pairs[i]["source_id"]: rmse(ds.load_pair(i).input, ds.load_pair(i).target)
               for i in ds.select(kind)}
        ids = rep.source_ids[("a", kind)]
        assert ids == sorted(ref)
        assert rep.values[("a", kind, "AS")] == [ref[s] for s in ids]
    sizes = {len(v) for v in rep.values.values()}
    assert sizes == {4}
    lines = rep.to_csv().splitlines()
    assert lines[0] == "dataset,kind,method,rmse_mean,rmse_std,n" and len(lines) == 5
    assert '"cells"' in rep.to_json()


def test_evaluate_deterministic_and_parallel_equal(small_set):
    ds, w = small_set
    a = bench.evaluate({"a": ds}, ["AS", "cnn_only", "GS"], w, w)
    b = bench.evaluate({"a": ds}, ["AS", "cnn_only", "GS"], w, w, workers=3)
    assert a.values == b.values


def test_evaluate_errors(small_set):
    ds, _ = small_set
    with pytest.raises(bench.ConfigurationError):
        bench.evaluate({"a": ds}, ["UTIRnet"])
    with pytest.raises(bench.ConfigurationError):
        bench.evaluate({"a": ds}, ["magic"])
    with pytest.raises(ValueError):
        bench.evaluate({}, ["AS"])


def test_z_sweep_shape_and_errors(small_set):
    ds, w = small_set
    z0 = ds.params.z_distance
    curve = bench.z_sweep(w, w, ds, [0.5 * z0, z0], limit=2)
    assert [c["z"] for c in curve] == [0.5 * z0, z0]
    assert all(c["relative_rmse"] == pytest.approx(100 * c["utirnet_rmse"] / c["as_rmse"]) for c in curve)
    assert bench.sweep_csv(curve).startswith("z_m,as_rmse")
    with pytest.raises(ValueError):
        bench.z_sweep(w, w, ds, [0.0])
    with pytest.raises(bench.ConfigurationError):
        bench.z_sweep(None, w, ds, [z0])


def test_timing_report(small_set):
    _, w = small_set
    rep = bench.time_methods([32, 64], ["GS", "AS", "UTIRnet"], 1, w_a=w, w_p=w)
    head, *rows = rep.to_csv().splitlines()
    assert head == "Image size [px],AS [s],UTIRnet [s],GS (5 iter.) [s]"
    assert [r.split(",")[0] for r in rows] == ["32x32", "64x64"]
    assert "cores" in rep.hardware
    with pytest.raises(bench.ConfigurationError):
        bench.time_methods([32], ["UTIRnet"], 1)


def test_plots(small_set, tmp_path):
    ds, w = small_set
    rep = bench.evaluate({"a": ds}, ["AS", "UTIRnet"], w, w)
    p = bench.plot_emit(rep, tmp_path / "e.png")
    assert p.stat().st_size > 0
    curve = [{"z": z, "relative_rmse": r} for z, r in ((1e-3, 90.0), (2e-3, 70.0), (3e-3, 80.0))]
    assert bench.plot_emit({"net": curve}, tmp_path / "z.png", z_train=2e-3).stat().st_size > 0
    # repeated renders are byte-identical
    bench.plot_emit(rep, tmp_path / "e2.png")
    assert (tmp_path / "e.png").read_bytes() == (tmp_path / "e2.png").read_bytes()


def test_plot_empty_report_raises(tmp_path):
    with pytest.raises(ValueError):
        bench.plot_emit(bench.EvalReport(["AS"], {}), tmp_path / "x.png")
    with pytest.raises(ValueError):
        bench.plot_emit({}, tmp_path / "y.png")
    with pytest.raises(ValueError):
        bench.plot_emit(bench.TimingReport([], [], 1), tmp_path / "t.png")
    assert not list(tmp_path.iterdir())
