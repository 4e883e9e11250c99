import hashlib
import json
import math

import numpy as np
import pytest

from fermatph import io
from fermatph.cli import main
from fermatph.geometry import PointCloud, TimeSeries, gen_trefoil
from fermatph.metric import euclidean_matrix, fermat_matrix, knn_matrix
from fermatph.persistence import Bar, PersistenceDiagram, persistent_homology, rips_filtration

from .oracles import brute_shortest_paths


def philox(seed):
    return np.random.Generator(np.random.Philox(seed))


class TestIoRoundTrips:
    def test_point_cloud(self, tmp_path):
        cloud = gen_trefoil(25, 0.1, 3)
        path = tmp_path / "cloud.csv"
        io.save_point_cloud(path, cloud, config={"seed": 3})
        back = io.load_point_cloud(path)
        assert np.array_equal(back.points, cloud.points)

    def test_time_series(self, tmp_path):
        ts = TimeSeries(philox(0).standard_normal(40), dt=0.01)
        path = tmp_path / "sig.csv"
        io.save_time_series(path, ts)
        back = io.load_time_series(path)
        assert back.dt == 0.01
        assert np.array_equal(back.values, ts.values)
        assert path.read_text().startswith("# dt=0.01")

    def test_distance_matrix_lower_triangle(self, tmp_path):
        cloud = gen_trefoil(12, 0.0, 0)
        D = fermat_matrix(cloud, 2.5)
        path = tmp_path / "d.csv"
        io.save_distance_matrix(path, D)
        lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
        assert len(lines) == 12
        for i, line in enumerate(lines):
            entries = [t for t in line.split(",") if t]
            assert len(entries) == i
        back = io.load_distance_matrix(path)
        assert np.array_equal(back.values, D.values)
        assert back.kind == "fermat" and back.p == 2.5

    def test_matrix_with_inf(self, tmp_path):
        pts = np.vstack([philox(0).normal(0, 0.05, (4, 2)),
                         philox(1).normal(50, 0.05, (4, 2))])
        D = knn_matrix(PointCloud(pts), 1)
        path = tmp_path / "knn.csv"
        io.save_distance_matrix(path, D)
        assert "inf" in path.read_text()
        back = io.load_distance_matrix(path)
        assert np.array_equal(back.values, D.values)
        assert back.k == 1

    def test_diagram(self, tmp_path):
        dgm = PersistenceDiagram((Bar(0, 0.0, math.inf), Bar(1, 0.25, 1.75)),
                                 threshold=2.0)
        path = tmp_path / "dgm.csv"
        io.save_diagram(path, dgm)
        back = io.load_diagram(path)
        assert back.bars == dgm.bars
        assert back.threshold == 2.0

    def test_seventeen_digit_round_trip(self, tmp_path):
        vals = philox(5).uniform(1e-8, 1e8, 100)
        assert all(float(io.fmt(v)) == v for v in vals)


def run_cli(*args):
    return main([str(a) for a in args])


class TestCli:
    def test_generate_deterministic_hash(self, tmp_path):
        out = tmp_path / "a.csv"
        hashes = []
        for _ in range(2):
            rc = run_cli("generate", "--kind", "eyeglasses", "--n", "200",
                         "--noise-sd", "0.05", "--seed", "9", "--out", out)
            assert rc == 0
            hashes.append(hashlib.sha256(out.read_bytes()).hexdigest())
        assert hashes[0] == hashes[1]

    def test_generate_large_eyeglasses_cloud(self, tmp_path):
        out = tmp_path / "eg.csv"
        rc = run_cli("generate", "--kind", "eyeglasses", "--n", "2000",
                     "--noise-sd", "0.1", "--seed", "0", "--out", out)
        assert rc == 0
        rows = [l for l in out.read_text().splitlines() if l and not l.startswith("#")]
        assert len(rows) == 2000
        assert all(len(r.split(",")) == 2 for r in rows)

    def test_generate_bad_kind_usage_error(self, tmp_path, capsys):
        with pytest.raises(SystemExit):
            run_cli("generate", "--kind", "donut", "--n", "10",
                    "--out", tmp_path / "x.csv")

    def test_generate_missing_n(self, tmp_path, capsys):
        rc = run_cli("generate", "--kind", "trefoil", "--out", tmp_path / "x.csv")
        assert rc == 2
        assert "requires --n" in capsys.readouterr().err

    def test_distmat_fermat_matches_oracle(self, tmp_path):
        cloud_path = tmp_path / "c.csv"
        run_cli("generate", "--kind", "circle", "--n", "8", "--seed", "4",
                "--out", cloud_path)
        out = tmp_path / "d.csv"
        rc = run_cli("distmat", "--in", cloud_path, "--kind", "fermat",
                     "--p", "2.0", "--out", out)
        assert rc == 0
        D = io.load_distance_matrix(out)
        cloud = io.load_point_cloud(cloud_path)
        oracle = brute_shortest_paths(cloud.points, 2.0)
        assert np.max(np.abs(D.values - oracle)) < 1e-12

    def test_distmat_two_points(self, tmp_path):
        cloud_path = tmp_path / "c.csv"
        io.save_point_cloud(cloud_path, PointCloud([[0.0, 0.0], [0.6, 0.8]]))
        out = tmp_path / "d.csv"
        run_cli("distmat", "--in", cloud_path, "--kind", "fermat", "--p", "2",
                "--out", out)
        D = io.load_distance_matrix(out)
        assert D.values[1, 0] == pytest.approx(1.0, rel=1e-15)

    def test_distmat_euclidean_345(self, tmp_path):
        cloud_path = tmp_path / "c.csv"
        io.save_point_cloud(cloud_path, PointCloud([[0.0, 0.0], [3.0, 0.0], [3.0, 4.0]]))
        out = tmp_path / "d.csv"
        run_cli("distmat", "--in", cloud_path, "--kind", "euclidean", "--out", out)
        D = io.load_distance_matrix(out)
        assert sorted(D.values[np.triu_indices(3, 1)].tolist()) == [3.0, 4.0, 5.0]

    def test_ph_square_and_idempotent(self, tmp_path):
        cloud_path = tmp_path / "c.csv"
        io.save_point_cloud(cloud_path, PointCloud(
            [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))
        dpath = tmp_path / "d.csv"
        run_cli("distmat", "--in", cloud_path, "--kind", "euclidean", "--out", dpath)
        g1 = tmp_path / "g1.csv"
        assert run_cli("ph", "--in", dpath, "--max-dim", "1", "--out", g1) == 0
        first = g1.read_bytes()
        assert run_cli("ph", "--in", dpath, "--max-dim", "1", "--out", g1) == 0
        assert g1.read_bytes() == first
        dgm = io.load_diagram(g1)
        h1 = dgm.in_degree(1)
        assert len(h1) == 1
        assert h1[0].birth == 1.0
        assert h1[0].death == pytest.approx(math.sqrt(2), rel=1e-15)

    def test_ph_empty_beyond_threshold(self, tmp_path):
        cloud_path = tmp_path / "c.csv"
        io.save_point_cloud(cloud_path, PointCloud([[0.0, 0.0], [5.0, 0.0]]))
        dpath = tmp_path / "d.csv"
        run_cli("distmat", "--in", cloud_path, "--kind", "euclidean", "--out", dpath)
        gpath = tmp_path / "g.csv"
        run_cli("ph", "--in", dpath, "--max-dim", "0", "--r", "1.0", "--out", gpath)
        dgm = io.load_diagram(gpath)
        assert dgm.finite(0) == ()
        assert len(dgm.infinite(0)) == 2

    def test_bottleneck_self_and_witness(self, tmp_path, capsys):
        cloud_path = tmp_path / "c.csv"
        io.save_point_cloud(cloud_path, gen_trefoil(30, 0.02, 1))
        dpath = tmp_path / "d.csv"
        run_cli("distmat", "--in", cloud_path, "--kind", "fermat", "--p", "2", "--out", dpath)
        gpath = tmp_path / "g.csv"
        run_cli("ph", "--in", dpath, "--max-dim", "1", "--out", gpath)
        wpath = tmp_path / "w.json"
        rc = run_cli("bottleneck", "--dgm1", gpath, "--dgm2", gpath,
                     "--degree", "1", "--witness", wpath)
        assert rc == 0
        assert float(capsys.readouterr().out.strip()) == 0.0
        witness = json.loads(wpath.read_text())
        assert witness["cost"] == 0.0
        assert all(isinstance(p, list) and len(p) == 2 for p in witness["pairs"])

    def test_distortion_json(self, tmp_path, capsys):
        cloud_path = tmp_path / "c.csv"
        io.save_point_cloud(cloud_path, gen_trefoil(15, 0.0, 0))
        d1 = tmp_path / "d1.csv"
        run_cli("distmat", "--in", cloud_path, "--kind", "euclidean", "--out", d1)
        run_cli("distortion", "--d1", d1, "--d2", d1)
        out = json.loads(capsys.readouterr().out)
        assert out == {"sup": 0.0, "gh_upper": 0.0}

    def test_mds_runs(self, tmp_path):
        cloud_path = tmp_path / "c.csv"
        io.save_point_cloud(cloud_path, gen_trefoil(20, 0.0, 0))
        dpath = tmp_path / "d.csv"
        run_cli("distmat", "--in", cloud_path, "--kind", "fermat", "--p", "2", "--out", dpath)
        mpath = tmp_path / "m.csv"
        assert run_cli("mds", "--in", dpath, "--dim", "2", "--out", mpath) == 0
        assert io.load_point_cloud(mpath).ambient_dim == 2

    def test_embed_counts(self, tmp_path):
        spath = tmp_path / "s.csv"
        io.save_time_series(spath, TimeSeries(np.sin(np.arange(100) * 0.2), dt=0.5))
        epath = tmp_path / "e.csv"
        rc = run_cli("embed", "--in", spath, "--tau", "4", "--dim", "3",
                     "--stride", "2", "--out", epath)
        assert rc == 0
        cloud = io.load_point_cloud(epath)
        assert cloud.n == (100 - 8 - 1) // 2 + 1
        assert cloud.ambient_dim == 3

    def test_changepoints_pipeline(self, tmp_path, capsys):
        n, period = 240, 24
        t = np.arange(n)
        x = np.where(t < n // 2, np.sin(2 * np.pi * t / period),
                     np.sin(4 * np.pi * t / period))
        x = x + 0.02 * philox(0).standard_normal(n)
        spath = tmp_path / "s.csv"
        io.save_time_series(spath, TimeSeries(x, dt=1.0))
        out = tmp_path / "scores.csv"
        rc = run_cli("changepoints", "--in", spath, "--tau", str(period // 4),
                     "--dim", "3", "--p", "2", "--step", "24", "--window", "3",
                     "--z", "1.5", "--out", out)
        assert rc == 0
        text = out.read_text()
        assert "index,time,raw,smoothed" in text
        payload = json.loads(capsys.readouterr().out)
        assert "peaks" in payload

    def test_changepoints_constant_signal_no_peaks(self, tmp_path, capsys):
        spath = tmp_path / "s.csv"
        io.save_time_series(spath, TimeSeries(np.zeros(80), dt=1.0))
        out = tmp_path / "scores.csv"
        rc = run_cli("changepoints", "--in", spath, "--tau", "2", "--dim", "3",
                     "--p", "2", "--step", "20", "--out", out)
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["peaks"] == []

    def test_experiment_unknown_name(self, capsys):
        rc = run_cli("experiment", "--name", "nope")
        assert rc == 2
        assert "unknown experiment" in capsys.readouterr().err

    def test_config_file_merge(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n": 40, "seed": 5, "noise_sd": 0.1}))
        out1 = tmp_path / "o1.csv"
        rc = run_cli("--config", cfg, "generate", "--kind", "trefoil", "--out", out1)
        assert rc == 0
        assert io.load_point_cloud(out1).n == 40
        # explicit flag wins over the config value
        out2 = tmp_path / "o2.csv"
        run_cli("--config", cfg, "generate", "--kind", "trefoil", "--n", "25",
                "--out", out2)
        assert io.load_point_cloud(out2).n == 25
        header = out2.read_text().splitlines()[0]
        assert '"n": 25' in header

    def test_ecg_format_accepted(self, tmp_path, capsys):
        # single-column signal file with the documented delay parameters
        rng = philox(3)
        n = 900
        t = np.arange(n)
        x = np.sin(2 * np.pi * t / 90) + 0.05 * rng.standard_normal(n)
        spath = tmp_path / "ecg.csv"
        spath.write_text("# dt=0.004\n" + "\n".join(f"{v:.6f}" for v in x) + "\n")
        out = tmp_path / "scores.csv"
        rc = run_cli("changepoints", "--in", spath, "--tau", "15", "--dim", "3",
                     "--p", "2", "--stride", "3", "--step", "60", "--out", out)
        assert rc == 0

    def test_experiment_subcommand_writes_report(self, tmp_path, capsys):
        rc = run_cli("experiment", "--name", "eyeglasses", "--seed", "0",
                     "--out-dir", tmp_path)
        out = capsys.readouterr().out
        assert rc == 0
        report = json.loads(out)
        assert report["passed"] is True
        assert report["salience_ratio"] == 0.3
        on_disk = json.loads((tmp_path / "eyeglasses.json").read_text())
        assert on_disk["name"] == "eyeglasses"
        assert {c["name"] for c in on_disk["checks"]} == {
            "euclidean_two_salient_cycles", "second_cycle_born_at_neck_scale",
            "fermat_single_salient_cycle"}

    def test_threads_env_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("FERMATPH_THREADS", "1")
        out = tmp_path / "c.csv"
        assert run_cli("generate", "--kind", "circle", "--n", "12", "--out", out) == 0
        import fermatph
        assert fermatph.get_threads() == 1
        monkeypatch.setenv("FERMATPH_THREADS", "0")
        assert run_cli("generate", "--kind", "circle", "--n", "12", "--out", out) == 0

    def test_distmat_rescale_flag(self, tmp_path):
        cloud_path = tmp_path / "c.csv"
        io.save_point_cloud(cloud_path, gen_trefoil(20, 0.0, 0))
        plain, scaled = tmp_path / "p.csv", tmp_path / "s.csv"
        run_cli("distmat", "--in", cloud_path, "--kind", "fermat", "--p", "2",
                "--out", plain)
        rc = run_cli("distmat", "--in", cloud_path, "--kind", "fermat", "--p", "2",
                     "--mu", "1.0", "--intrinsic-dim", "1", "--out", scaled)
        assert rc == 0
        a = io.load_distance_matrix(plain)
        b = io.load_distance_matrix(scaled)
        assert b.rescaled and not a.rescaled
        assert np.allclose(b.values, 20.0 * a.values, rtol=0)

    def test_distmat_quotient(self, tmp_path):
        base, outl = tmp_path / "b.csv", tmp_path / "y.csv"
        io.save_point_cloud(base, gen_trefoil(40, 0.0, 0))
        run_cli("generate", "--kind", "outliers", "--cloud", base, "--m", "4",
                "--min-gap", "0.8", "--seed", "1", "--out", outl)
        qpath = tmp_path / "q.csv"
        rc = run_cli("distmat", "--in", base, "--kind", "quotient", "--p", "3",
                     "--outliers", outl, "--out", qpath)
        assert rc == 0
        Q = io.load_distance_matrix(qpath)
        assert Q.kind == "quotient" and Q.n == 5
