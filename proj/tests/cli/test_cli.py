import copy
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from conftest import NOISELESS, manifest, read_quadrature


def noiseless(**sections):
    doc = copy.deepcopy(NOISELESS)
    for k, v in sections.items():
        doc.setdefault(k, {}).update(v)
    return doc


def files(out):
    out = Path(out)
    return {p.relative_to(out).as_posix(): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}


def test_minimal_ground_state_gives_one_gaussian_angle(cli):
    cfg = cli.config("g.json", noiseless(angles={"count": 1}, state={"populations": [1, 0, 0], "depth_jump_ratio": 1}))
    cli.run("simulate", "-c", cfg, "-o", cli.tmp / "out", check=0)
    rows = read_quadrature(cli.tmp / "out" / "quadrature.csv")
    assert {r[0] for r in rows} == {0.0}
    u = np.array([r[1] for r in rows])
    w = np.array([r[2] for r in rows])
    w /= w.sum()
    du = u[1] - u[0]
    # vacuum momentum quadrature has unit variance in u
    gauss = np.exp(-u**2 / 2) / math.sqrt(2 * math.pi) * du
    assert np.abs(w - gauss).max() < 2e-3 * gauss.max()
    assert abs((w * u).sum()) < 1e-9
    assert abs((w * u * u).sum() - 1.0) < 0.01


def ladder(dim):
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    x = a + a.T
    p = 1j * (a.T - a)
    return x, p


def test_displaced_one_phonon_variances_trace_the_breathing(cli):
    cfg = cli.config(
        "d1.json",
        noiseless(state={"populations": [0, 1, 0], "displacement_m": 129e-9, "depth_jump_ratio": 2.0}, trap={"n_max": 20}),
    )
    cli.run("simulate", "-c", cfg, "-o", cli.tmp / "out", "-q", check=0)
    per_angle = sorted((cli.tmp / "out" / "quadrature").glob("angle_*.csv"))
    assert len(per_angle) == 64

    truth = json.loads((cli.tmp / "out" / "truth.json").read_text())
    rho = np.array(truth["real"]) + 1j * np.array(truth["imag"])
    x, p = ladder(rho.shape[0])

    def moment(op):
        return np.trace(rho @ op).real

    measured, expected = [], []
    for f in per_angle:
        rows = read_quadrature(f)
        th = rows[0][0]
        u = np.array([r[1] for r in rows])
        w = np.array([r[2] for r in rows])
        w /= w.sum()
        m = (w * u).sum()
        measured.append((w * (u - m) ** 2).sum())
        q = math.cos(th) * p - math.sin(th) * x
        expected.append(moment(q @ q) - moment(q) ** 2)
    measured, expected = np.array(measured), np.array(expected)
    # breathing: two variance oscillations per period, well above the pixel-binning floor
    assert expected.max() / expected.min() > 1.5
    assert np.abs(measured / expected - 1).max() < 0.02
    assert np.corrcoef(measured, expected)[0, 1] > 0.999


def test_out_of_range_lambda_names_the_field(cli):
    cfg = cli.config("bad.json", {"trap": {"lambda": 0.5}})
    p = cli.run("simulate", "-c", cfg, "-o", cli.tmp / "out", check=2)
    assert "trap.lambda" in p.stderr


def test_unknown_key_is_rejected_with_its_path(cli):
    cfg = cli.config("bad.json", {"trap": {"lamda": -0.001}})
    p = cli.run("simulate", "-c", cfg, "-o", cli.tmp / "out", check=2)
    assert "trap.lamda" in p.stderr
    p = cli.run("simulate", "--set", "imaging.gain=3", "-o", cli.tmp / "out", check=2)
    assert "imaging.gain" in p.stderr


def test_noiseless_one_phonon_round_trip_reports_fidelity(cli):
    cfg = cli.config("n1.json", noiseless(state={"populations": [0, 1, 0], "depth_jump_ratio": 1}))
    cli.run("simulate", "-c", cfg, "-o", cli.tmp / "sim", "-q", check=0)
    cli.run("reconstruct", cli.tmp / "sim", "-c", cfg, "-o", cli.tmp / "rec", "-q",
            "--tol", "1e-6", "--max-iter", "5000", "--set", "mle.bin_average=true", check=0)
    m = manifest(cli.tmp / "rec")
    assert m["results"]["fidelity"] >= 0.999
    assert m["results"]["negativity"]["value"] < -0.3
    for name in ("rho.json", "wigner.csv", "hinton.csv", "report.json"):
        assert (cli.tmp / "rec" / name).exists()
    rho = json.loads((cli.tmp / "rec" / "rho.json").read_text())
    assert set(rho) >= {"n_max", "real", "imag", "iterations_used", "converged"}
    assert (cli.tmp / "rec" / "hinton.csv").read_text().startswith("m,n,real,imag,magnitude,phase_rad\n")


def test_default_flags_echo(cli):
    cfg = cli.config("n1.json", noiseless(angles={"count": 8}, trap={"n_max": 25}))
    cli.run("simulate", "-c", cfg, "-o", cli.tmp / "sim", "-q", check=0)
    cli.run("reconstruct", cli.tmp / "sim", "-o", cli.tmp / "a", "-q", check=0)
    cli.run("reconstruct", cli.tmp / "sim", "-o", cli.tmp / "b", "-q", "--rl-iterations", "2", "--rl-filter", "0.69",
            "--nmax", "25", "--tol", "1e-4", "--max-iter", "500", check=0)
    a, b = manifest(cli.tmp / "a"), manifest(cli.tmp / "b")
    assert a["config"] == b["config"]
    assert b["config"]["trap"]["n_max"] == 25
    assert b["config"]["mle"]["tolerance"] == 1e-4
    assert b["config"]["mle"]["max_iterations"] == 500
    assert b["config"]["processing"]["rl_iterations"] == 2
    assert b["config"]["processing"]["rl_filter_floor"] == 0.69
    assert (cli.tmp / "a" / "rho.json").read_bytes() == (cli.tmp / "b" / "rho.json").read_bytes()


def test_fit_damped_sinusoid(cli):
    t = np.linspace(0, 1.2e-3, 120)
    y = 0.8 * np.exp(-t / 0.63e-3) * np.cos(2 * math.pi * 7840 * t + 0.3) + 0.05
    series = cli.tmp / "series.csv"
    series.write_text("t_s,value\n" + "".join(f"{float(a)!r},{float(b)!r}\n" for a, b in zip(t, y)))
    cli.run("fit", "damped-sinusoid", series, "-o", cli.tmp / "fit", check=0)
    fit = json.loads((cli.tmp / "fit" / "fit.json").read_text())
    f = fit["values"][fit["names"].index("frequency_hz")]
    assert abs(f / 7840 - 1) < 1e-3
    assert set(fit) >= {"names", "values", "errors", "covariance"}
    m = manifest(cli.tmp / "fit")
    assert m["inputs"][0]["sha256"] == hashlib.sha256(series.read_bytes()).hexdigest()


def test_fit_gravity_and_ballistic(cli):
    t = np.linspace(0, 1e-3, 30)
    (cli.tmp / "drop.csv").write_text("t_s,value\n" + "".join(f"{float(a)!r},{float(1e-5 + 64 * 9.8 * a * a / 2)!r}\n" for a in t))
    cli.run("fit", "gravity", cli.tmp / "drop.csv", "-o", cli.tmp / "g", check=0)
    g = json.loads((cli.tmp / "g" / "fit.json").read_text())
    assert abs(g["derived"]["magnification"]["value"] / 64 - 1) < 1e-6

    kb, m = 1.380649e-23, 86.909180527 * 1.66053906660e-27
    e = kb * 0.256e-6 / 2
    t = np.linspace(0, 0.6e-3, 20)
    s = np.sqrt(2 * e * t**2 / m + (80e-9) ** 2)
    (cli.tmp / "tof.csv").write_text("t_s,value\n" + "".join(f"{float(a)!r},{float(b)!r}\n" for a, b in zip(t, s)))
    cli.run("fit", "ballistic", cli.tmp / "tof.csv", "-o", cli.tmp / "b", check=0)
    b = json.loads((cli.tmp / "b" / "fit.json").read_text())
    assert abs(b["derived"]["e_ke_microkelvin"]["value"] / 0.256 - 1) < 1e-4


def test_fit_anharmonic_from_quadrature_centres(cli):
    cfg = cli.config("c.json", noiseless(angles={"count": 24}, state={"populations": [1, 0, 0], "displacement_m": 166e-9,
                                                                        "depth_jump_ratio": 1}))
    cli.run("simulate", "-c", cfg, "-o", cli.tmp / "sim", "-q", check=0)
    cli.run("fit", "anharmonic", "--quadrature", cli.tmp / "sim", "--centre", "gaussian", "--fix-lambda",
            "-c", cfg, "-o", cli.tmp / "fit", "-q", check=0)
    fit = json.loads((cli.tmp / "fit" / "fit.json").read_text())
    names = fit["names"]
    assert abs(fit["values"][names.index("omega_rad_per_s")] / (2 * math.pi * 9050) - 1) < 1e-3
    assert (cli.tmp / "fit" / "series.csv").exists()


def test_fock_mixture_fit_from_simulated_frame(cli):
    cfg = cli.config("f.json", noiseless(angles={"count": 1}, state={"populations": [0.3, 0.7, 0], "depth_jump_ratio": 1},
                                         trap={"n_max": 25}, processing={"blur": True}))
    cli.run("simulate", "-c", cfg, "-o", cli.tmp / "sim", "--frames", "-q", check=0)
    cli.run("fit", "fock-mixture", cli.tmp / "sim" / "frames" / "angle_000.csv", "-c", cfg, "-o", cli.tmp / "fit",
            "-q", check=0)
    fit = json.loads((cli.tmp / "fit" / "fit.json").read_text())
    v = dict(zip(fit["names"], fit["values"]))
    assert abs(v["p0"] - 0.3) < 0.03 and abs(v["p1"] - 0.7) < 0.03


def test_deconvolve_then_reconstruct(cli):
    cfg = cli.config("d.json", {"angles": {"count": 9}, "trap": {"n_max": 12},
                                "state": {"populations": [1, 0, 0], "displacement_m": 166e-9, "depth_jump_ratio": 1}})
    cli.run("simulate", "-c", cfg, "-o", cli.tmp / "sim", "--frames", "--seed", "3", "-q", check=0)
    cli.run("deconvolve", cli.tmp / "sim" / "frames", "-c", cfg, "-o", cli.tmp / "dec", "-q", check=0)
    # deconvolving the written frames reproduces the simulator's own processed profiles
    a = read_quadrature(cli.tmp / "sim" / "quadrature.csv")
    b = read_quadrature(cli.tmp / "dec" / "quadrature.csv")
    assert len(a) == len(b)
    assert max(abs(x[2] - y[2]) for x, y in zip(a, b)) < 1e-9 * max(x[2] for x in a)
    cli.run("reconstruct", cli.tmp / "dec", "--truth", cli.tmp / "sim" / "truth.json", "-c", cfg,
            "-o", cli.tmp / "rec", "-q", check=0)
    assert manifest(cli.tmp / "rec")["results"]["fidelity"] > 0.95


def test_wigner_of_one_phonon(cli):
    rho = {"n_max": 3, "real": [[1.0 if (i, j) == (1, 1) else 0.0 for j in range(4)] for i in range(4)],
           "imag": [[0.0] * 4 for _ in range(4)]}
    (cli.tmp / "rho.json").write_text(json.dumps(rho))
    cli.run("wigner", cli.tmp / "rho.json", "--extent", "6", "--points", "241", "-o", cli.tmp / "w", check=0)
    rep = manifest(cli.tmp / "w")["results"]
    assert abs(rep["negativity"]["value"] + 1 / math.pi) < 1e-6
    rows = (cli.tmp / "w" / "wigner.csv").read_text().splitlines()
    assert rows[0] == "x,p,w" and len(rows) == 241 * 241 + 1


def test_bootstrap_replica_bounds_and_report(cli):
    rho = {"n_max": 6, "real": [[0.3 if i == j == 0 else 0.7 if i == j == 1 else 0.0 for j in range(7)] for i in range(7)],
           "imag": [[0.0] * 7 for _ in range(7)]}
    (cli.tmp / "rho.json").write_text(json.dumps(rho))
    p = cli.run("bootstrap", cli.tmp / "rho.json", "--replicas", "1", "-o", cli.tmp / "b1")
    assert p.returncode == 2 and "bootstrap.replicas" in p.stderr
    cli.run("bootstrap", cli.tmp / "rho.json", "--replicas", "2", "--set", "angles.count=8", "--archive",
            "-o", cli.tmp / "b2", "-q", check=0)
    rep = json.loads((cli.tmp / "b2" / "bootstrap.json").read_text())
    assert rep["n_replicas"] == 2
    assert len(list((cli.tmp / "b2" / "replicas").glob("replica_*.json"))) == 2
    # nearly no signal: every replica is degenerate and the run aborts as a numeric failure
    p = cli.run("bootstrap", cli.tmp / "rho.json", "--replicas", "2", "--set", "angles.count=8",
                "--set", "imaging.total_counts=1e-3", "-o", cli.tmp / "b3", "-q")
    assert p.returncode == 4, p.stderr


def test_seed_precedence(cli):
    cfg = cli.config("s.json", {"angles": {"count": 2}, "trap": {"n_max": 8}, "seed": 11})
    run = lambda out, *a, env=None: cli.run("simulate", "-c", cfg, "-o", cli.tmp / out, "-q", *a, env=env, check=0)
    run("cfg")
    run("env5", env={"TOMO_SEED": "5"})
    run("flag5", "--seed", "5")
    run("both", "--seed", "5", env={"TOMO_SEED": "6"})
    run("env6", env={"TOMO_SEED": "6"})
    q = lambda d: (cli.tmp / d / "quadrature.csv").read_bytes()
    assert q("env5") == q("flag5") == q("both")
    assert q("env5") != q("env6") and q("env5") != q("cfg")
    assert manifest(cli.tmp / "both")["seed_source"] == "--seed"
    assert manifest(cli.tmp / "env6")["seed_source"] == "TOMO_SEED"
    assert manifest(cli.tmp / "cfg")["seed"] == 11
    p = cli.run("simulate", "-c", cfg, "-o", cli.tmp / "x", env={"TOMO_SEED": "abc"})
    assert p.returncode == 2 and "TOMO_SEED" in p.stderr


def test_reruns_are_bit_identical_and_thread_independent(cli):
    cfg = cli.config("r.json", {"angles": {"count": 6}, "trap": {"n_max": 10}})
    for out, threads in (("a", 1), ("b", 1), ("c", 3)):
        cli.run("simulate", "-c", cfg, "-o", cli.tmp / out, "--seed", "9", "--threads", threads, "-q", check=0)
        cli.run("reconstruct", cli.tmp / out, "-c", cfg, "-o", cli.tmp / out / "rec", "--threads", threads, "-q",
                check=0)
    a, b, c = files(cli.tmp / "a"), files(cli.tmp / "b"), files(cli.tmp / "c")
    # manifests differ only in the recorded command line and input paths
    strip = lambda d: {k: v for k, v in d.items() if not k.endswith("manifest.json")}
    assert strip(a) == strip(b) == strip(c)
    for m in ("manifest.json", "rec/manifest.json"):
        ma, mc = json.loads(a[m]), json.loads(c[m])
        for x in (ma, mc):
            x.pop("arguments")
            x["inputs"] = [i["sha256"] for i in x["inputs"]]
        assert ma == mc
    # rerunning into the same directory leaves identical bytes and no temp files
    cli.run("simulate", "-c", cfg, "-o", cli.tmp / "a", "--seed", "9", "--threads", "1", "-q", check=0)
    cli.run("reconstruct", cli.tmp / "a", "-c", cfg, "-o", cli.tmp / "a" / "rec", "--threads", "1", "-q", check=0)
    assert files(cli.tmp / "a") == a
    assert not [p for p in (cli.tmp / "a").rglob("*") if ".tmp-" in p.name]


def test_manifest_contents(cli):
    cfg = cli.config("m.json", {"angles": {"count": 2}, "trap": {"n_max": 6}})
    cli.run("simulate", "-c", cfg, "-o", cli.tmp / "o", "-q", check=0)
    m = manifest(cli.tmp / "o")
    assert m["command"] == "simulate"
    assert {"toftomo", "eigen", "ceres"} <= set(m["versions"])
    assert m["config"]["trap"]["n_max"] == 6
    assert m["inputs"] == [{"path": str(cfg), "sha256": hashlib.sha256(cfg.read_bytes()).hexdigest()}]
    out = files(cli.tmp / "o")
    for entry in m["outputs"]:
        assert hashlib.sha256(out[entry["path"]]).hexdigest() == entry["sha256"]


def test_exit_codes_per_subcommand(cli):
    t = cli.tmp
    (t / "bad.csv").write_text("theta_rad,u,weight\n0,1,x\n")
    (t / "series.csv").write_text("t,value\n0,1\n")
    (t / "rho.json").write_text('{"n_max": 1, "real": [[1, 0]], "imag": [[0, 0]]}')
    cases = [
        (["simulate", "--set", "trap.n_max=0", "-o", t / "o"], 2),
        (["deconvolve", t / "missing", "-o", t / "o"], 3),
        (["reconstruct", t / "bad.csv", "-o", t / "o"], 3),
        (["reconstruct", t / "missing.csv", "-o", t / "o"], 3),
        (["reconstruct", t / "bad.csv", "--tol", "-1", "-o", t / "o"], 2),
        (["wigner", t / "rho.json", "-o", t / "o"], 3),
        (["bootstrap", t / "rho.json", "--replicas", "0", "-o", t / "o"], 2),
        (["fit", "damped-sinusoid", t / "series.csv", "-o", t / "o"], 3),
        (["fit", "fock-mixture", t / "missing.csv", "-o", t / "o"], 3),
        (["appendix", "robustness", "--grid", "0.3", "-o", t / "o"], 2),
        (["appendix", "robustness", "--point", "0.5,0.6,0.1", "-o", t / "o"], 2),
        (["appendix", "noise-bias", "--levels", "1,2", "-o", t / "o"], 2),
        (["simulate"], 2),
        (["frobnicate"], 2),
    ]
    for args, code in cases:
        p = cli.run(*args)
        assert p.returncode == code, (args, p.returncode, p.stderr)


def test_noise_bias_small_study(cli):
    cli.run("appendix", "noise-bias", "--study", "displaced-n0", "--levels", "0,2,8", "--simulations", "3",
            "--nmax", "8", "-o", cli.tmp / "nb", "-q", check=0)
    rep = json.loads((cli.tmp / "nb" / "noise_bias_displaced-n0.json").read_text())
    assert [lv["sigma_counts"] for lv in rep["levels"]] == [0, 2, 8]
    assert abs(rep["levels"][0]["population_mean"][0] - rep["base_populations"][0]) < 0.01
    header = (cli.tmp / "nb" / "noise_bias_displaced-n0.csv").read_text().splitlines()[0]
    assert header.startswith("sigma_counts")
