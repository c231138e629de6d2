import math
import subprocess
import sys

import numpy as np
import pytest

from diracspec.cli import main
from diracspec.config import ConfigError, RunConfig, parse_kv, read_comments, read_table

BUMPS = "potential.kind = gauss-bumps\npotential.bumps = 1.2:0.3:0.8:0; 2.0:0.4:0:0.5\n"


def cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def load(path):
    header = [l for l in open(path).read().splitlines() if l and not l.startswith("#")][0].split(",")
    return np.column_stack(read_table(path, header))


def data_rows(path):
    return [l for l in open(path).read().splitlines() if l and not l.startswith("#")][1:]


def test_parse_kv():
    kv = parse_kv("a.b = 1  # note\n\n# comment\nmode = finite\n")
    assert kv == {"a.b": "1", "mode": "finite"}
    with pytest.raises(ConfigError, match=":2"):
        parse_kv("a = 1\nbroken\n", "x.cfg")


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError, match="unknown config keys"):
        RunConfig.from_mapping({"grid.size": "3"})
    with pytest.raises(ConfigError):
        RunConfig.from_mapping({"mode": "infinite"})
    with pytest.raises(ValueError):
        RunConfig.from_mapping({"boundary.alpha": "2.0"})
    with pytest.raises(ConfigError, match="numeric"):
        RunConfig.from_mapping({"grid.n_points": "many"})
    c = RunConfig.from_mapping({"potential.kind": "fourier", "potential.p_cos": "0.1, 0.2"})
    assert c.build_potential().evaluate(0.0)[0] == pytest.approx(0.3)


def test_sampled_config_resolves_relative_file(tmp_path):
    (tmp_path / "pot.csv").write_text("x,p,q\n0,0,0\n3.141592653589793,1,0\n")
    c = RunConfig.load(cfg(tmp_path, "potential.kind = sampled\npotential.file = pot.csv\n"))
    assert c.build_potential().evaluate(math.pi / 2)[0] == pytest.approx(0.5)


def test_solve_free(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["solve", "--config", cfg(tmp_path, "potential.kind = zero\n"),
                 "--n-min", "-3", "--n-max", "3", "--out", str(out)]) == 0
    assert open(out).readline().strip() == "n,lambda,a,b,r,c"
    d = load(out)
    assert np.array_equal(d[:, 0], np.arange(-3, 4))
    assert np.max(np.abs(d[:, 1] - d[:, 0])) <= 1e-9
    assert np.max(np.abs(d[:, 2:4] - math.pi)) <= 1e-8


def test_solve_constant(tmp_path):
    out = tmp_path / "s.csv"
    main(["solve", "--config", cfg(tmp_path, "potential.kind = constant\npotential.p0 = 0.5\n"),
          "--n-min", "-1", "--n-max", "1", "--out", str(out)])
    d = load(out)
    assert d[1, 0] == 0 and d[1, 1] == pytest.approx(-0.5, abs=1e-10)


def test_full_precision_columns(tmp_path):
    out = tmp_path / "s.csv"
    main(["solve", "--config", cfg(tmp_path, "potential.kind = constant\npotential.p0 = 0.5\n"),
          "--n-min", "1", "--n-max", "1", "--out", str(out)])
    lam = data_rows(out)[-1].split(",")[1]
    assert float(lam) == pytest.approx(math.sqrt(1.25), abs=1e-10)
    assert len(lam.replace("-", "").replace(".", "").lstrip("0")) >= 16


def test_missing_config(tmp_path, capsys):
    assert main(["solve", "--config", str(tmp_path / "nope.cfg")]) == 1
    assert "nope.cfg" in capsys.readouterr().err


def test_gradient_free(tmp_path):
    out = tmp_path / "g.csv"
    assert main(["gradient", "--config", cfg(tmp_path, ""), "--n", "0", "--out", str(out)]) == 0
    head = read_comments(out)
    assert float(head["d_alpha"]) == pytest.approx(-0.3183099, abs=1e-7)
    assert float(head["d_beta"]) == pytest.approx(1 / math.pi, abs=1e-10)
    d = load(out)
    assert np.max(np.abs(d[:, 1] + 1 / math.pi)) < 1e-10 and np.max(np.abs(d[:, 2])) < 1e-12


def test_gradient_check_fd(tmp_path):
    out = tmp_path / "g.csv"
    assert main(["gradient", "--config", cfg(tmp_path, BUMPS), "--n", "1", "--check-fd",
                 "--seed", "5", "--out", str(out)]) == 0
    errs = {k: float(v) for k, v in read_comments(out).items() if k.startswith("fd_relerr")}
    assert len(errs) == 6 and max(errs.values()) <= 1e-4


def test_gradient_index_outside_window(tmp_path, capsys):
    assert main(["gradient", "--config", cfg(tmp_path, "solver.n_max = 5\n"), "--n", "6"]) == 1
    assert "outside" in capsys.readouterr().err


def test_deform_closed_form(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["deform", "--config", cfg(tmp_path, ""), "--m", "0", "--t", repr(math.log(2)),
                 "--out", str(out)]) == 0
    d = load(out)
    assert np.max(np.abs(d[:, 2] - 1 / (math.pi + d[:, 0]))) <= 1e-10
    assert np.all(d[:, 1] == 0)


def test_deform_verify(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["deform", "--config", cfg(tmp_path, BUMPS), "--m", "0", "--t", "1", "--verify",
                 "--out", str(out)]) == 0
    rep = read_comments(out)
    assert float(rep["max_eigenvalue_drift"]) <= 1e-7
    assert float(rep["max_norming_ratio_error"]) <= 1e-6


def test_deform_t_zero_reproduces_input(tmp_path):
    x = np.linspace(0, math.pi, 4001)
    pot = tmp_path / "pot.csv"
    lines = ["x,p,q"] + [f"{a!r},{0.3 * math.sin(a)!r},{0.1 * math.cos(2 * a)!r}" for a in x.tolist()]
    pot.write_text("\n".join(lines) + "\n")
    out = tmp_path / "d.csv"
    c = cfg(tmp_path, "potential.kind = sampled\npotential.file = pot.csv\n")
    assert main(["deform", "--config", c, "--m", "1", "--t", "0", "--out", str(out)]) == 0
    assert np.array_equal(load(out), load(pot))


def test_deform_rejects_beta(tmp_path, capsys):
    assert main(["deform", "--config", cfg(tmp_path, "boundary.beta = 0.3\n"), "--m", "0", "--t", "1"]) == 1
    assert "beta = 0" in capsys.readouterr().err


def test_deform_seq(tmp_path):
    sched = tmp_path / "s.csv"
    sched.write_text("n,t_n\n0,0.4\n1,-0.3\n-1,0.6\n")
    out = tmp_path / "d.csv"
    assert main(["deform-seq", "--config", cfg(tmp_path, BUMPS), "--schedule", str(sched),
                 "--verify", "--out", str(out)]) == 0
    rep = read_comments(out)
    assert float(rep["max_eigenvalue_drift"]) <= 1e-6
    assert float(rep["max_norming_ratio_error"]) <= 1e-5
    sched.write_text("n,t_n\n0,x\n")
    assert main(["deform-seq", "--config", cfg(tmp_path, BUMPS), "--schedule", str(sched)]) == 1


WINDOW = "mode = half-line-window\ngrid.x_end = 12\npotential.kind = linear\n"


def test_surgery_add(tmp_path):
    out = tmp_path / "a.csv"
    c = cfg(tmp_path, "mode = half-line-window\ngrid.x_end = 40\n")
    assert main(["surgery", "add", "--config", c, "--mu", "1", "--c", "1", "--out", str(out)]) == 0
    d = load(out)
    x = d[:, 0]
    assert np.max(np.abs(d[:, 1] + np.sin(2 * x) / (1 + x))) <= 1e-9
    rep = read_comments(out)
    assert float(rep["max_residual"]) <= 1e-6
    assert float(rep["w_norm_sq"]) == pytest.approx(1 - 1 / 41, abs=1e-6)


def test_surgery_needs_window_mode(tmp_path, capsys):
    assert main(["surgery", "add", "--config", cfg(tmp_path, ""), "--mu", "1"]) == 1
    assert "half-line-window" in capsys.readouterr().err


def test_surgery_remove_singular(tmp_path, capsys):
    assert main(["surgery", "remove", "--config", cfg(tmp_path, WINDOW), "--mu", "-0.83"]) == 1
    assert "theta" in capsys.readouterr().err


def test_surgery_remove_sub_window(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["surgery", "remove", "--config", cfg(tmp_path, WINDOW), "--mu", "-0.83",
                 "--sub-window", "1.3", "--out", str(out)]) == 0
    assert float(read_comments(out)["max_residual"]) <= 1e-6


def test_surgery_scale(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["surgery", "scale", "--config", cfg(tmp_path, WINDOW), "--mu", "-0.83", "--t", "0.5",
                 "--out", str(out)]) == 0
    rep = read_comments(out)
    assert float(rep["w_norm_sq"]) == pytest.approx(math.exp(0.5), abs=1e-6)


def test_surgery_plan_sidecars(tmp_path):
    plan = tmp_path / "plan.csv"
    plan.write_text("op,nu,t,c\nadd,0.7,0,1\nscale,0.7,1,1\n")
    out = tmp_path / "final.csv"
    assert main(["surgery", "plan", "--config", cfg(tmp_path, WINDOW), "--plan", str(plan),
                 "--out", str(out)]) == 0
    s1, s2 = tmp_path / "final.step1.csv", tmp_path / "final.step2.csv"
    assert s1.exists() and s2.exists()
    assert np.array_equal(load(s2), load(out))
    plan.write_text("op,nu,t,c\nsplit,0.7,0,1\n")
    assert main(["surgery", "plan", "--config", cfg(tmp_path, WINDOW), "--plan", str(plan)]) == 1


def test_fit(tmp_path, capsys):
    tgt = tmp_path / "t.csv"
    tgt.write_text("n,lambda\n0,-0.3\n")
    out = tmp_path / "f.csv"
    assert main(["fit", "--config", cfg(tmp_path, ""), "--target", str(tgt), "--out", str(out)]) == 0
    hist = load(tmp_path / "f.history.csv")
    assert hist[-1, 1] <= 1e-8
    assert "final misfit" in capsys.readouterr().out


def test_fit_from_own_spectrum(tmp_path, capsys):
    spec = tmp_path / "s.csv"
    c = cfg(tmp_path, "")
    main(["solve", "--config", c, "--n-min", "-1", "--n-max", "1", "--out", str(spec)])
    out = tmp_path / "f.csv"
    assert main(["fit", "--config", c, "--target", str(spec), "--out", str(out)]) == 0
    assert len(load(tmp_path / "f.history.csv")) == 1


def test_fit_malformed_row(tmp_path, capsys):
    tgt = tmp_path / "t.csv"
    tgt.write_text("n,lambda\n-1,-1\n0,abc\n")
    assert main(["fit", "--config", cfg(tmp_path, ""), "--target", str(tgt)]) == 1
    assert "t.csv:3" in capsys.readouterr().err


def test_determinism(tmp_path):
    c = cfg(tmp_path, BUMPS)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for o in (a, b):
        main(["gradient", "--config", c, "--n", "0", "--check-fd", "--seed", "9", "--out", str(o)])
    assert a.read_bytes() == b.read_bytes()


def test_verify_ode(capsys, monkeypatch):
    monkeypatch.setenv("NO_COLOR", "1")
    assert main(["verify", "--suite", "ode"]) == 0
    out = capsys.readouterr().out
    lines = [l for l in out.splitlines() if l.startswith(("PASS", "FAIL"))]
    assert lines and all(l.startswith("PASS") for l in lines)
    assert "\033[" not in out


def test_verify_gradient_lists_fd_bound(capsys):
    assert main(["verify", "--suite", "gradient"]) == 0
    assert "(bound 1.0e-04)" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "diracspec", "solve", "--n-min", "0", "--n-max", "0"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("n,lambda")
