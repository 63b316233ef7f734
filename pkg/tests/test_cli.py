import numpy as np
import pytest

from contact_nozzle.cli import main
from contact_nozzle.io import COLUMNS, read_solution

BASE = """\
gas.gamma = 1.4
gas.rho_plus = 1.0
gas.rho_minus = 2.0
gas.p0 = 1.0
gas.u0 = 0.5
domain.L = 8
domain.nx = 64
domain.ny = 16
"""


def _metrics(path):
    out = {}
    for line in path.read_text().splitlines():
        if line.startswith("#") or line.startswith("window"):
            continue
        key, val = line.split("\t")
        try:
            out[key] = float(val)
        except ValueError:
            out[key] = val
    return out


def test_background_solve(tmp_path, capsys):
    cfg = tmp_path / "bg.cfg"
    cfg.write_text(BASE)
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 0
    assert "STATUS: converged" in capsys.readouterr().out
    report = _metrics(tmp_path / "out" / "report.tsv")
    assert report["outer_cycles"] == 1
    text = (tmp_path / "out" / "solution.tsv").read_text()
    assert "# lower_state: 0 0 2 1 " in text
    assert "\t".join(COLUMNS) in text
    assert "# config.domain.L: 8.0" in text


def test_verify_reproduces_report(tmp_path):
    cfg = tmp_path / "p.cfg"
    cfg.write_text(BASE + "inlet.a_S = 0.01\ninlet.a_v = 0.01\n")
    out = tmp_path / "out"
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
    first = (out / "report.tsv").read_bytes()
    assert main(["verify", "--solution", str(out)]) == 0
    assert (out / "report.tsv").read_bytes() == first
    a = _metrics(out / "report.tsv")
    assert a["STATUS"] == "converged" and a["rh_normal_flow_sup"] > 0


def test_solve_is_deterministic(tmp_path):
    cfg = tmp_path / "p.cfg"
    cfg.write_text(BASE + "inlet.a_v = 0.01\n")
    for name in ("a", "b"):
        assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
    for f in ("solution.tsv", "boundary.tsv", "report.tsv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_round_trip_fields(tmp_path):
    cfg = tmp_path / "p.cfg"
    cfg.write_text(BASE + "inlet.a_v = 0.01\n")
    main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")])
    sol, rc = read_solution(tmp_path / "o")
    assert sol.report.status == "converged"
    assert rc.values["inlet.a_v"] == 0.01
    assert sol.boundary.f[0] == 0.0
    assert sol.boundary.sup() > 0
    u1, u2 = sol.velocity()
    body = [l for l in (tmp_path / "o" / "solution.tsv").read_text().splitlines() if not l.startswith("#")]
    assert body[0] == "\t".join(COLUMNS)
    table = np.loadtxt(body[1:], delimiter="\t")
    assert table.shape == (sol.domain.shape[0] * sol.domain.shape[1], len(COLUMNS))
    assert np.max(np.abs(table[:, 2] - u1.ravel())) <= 1e-12


def test_sweep_background(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text(BASE.replace("domain.L = 8", "domain.L = 4").replace("domain.nx = 64", "domain.nx = 32")
                   + "domain.L_list = 4, 8\n")
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "sw")]) == 0
    rows = [l.split("\t") for l in (tmp_path / "sw" / "sweep.tsv").read_text().splitlines()
            if not l.startswith("#")][1:]
    assert rows and all(float(r[3]) == 0.0 for r in rows)


def test_sweep_needs_lengths(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text(BASE)
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "sw")]) == 2


def test_decay(tmp_path):
    cfg = tmp_path / "p.cfg"
    cfg.write_text(BASE + "inlet.a_v = 0.01\n")
    main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert main(["decay", "--solution", str(tmp_path / "o"), "--windows", "8"]) == 0
    lines = (tmp_path / "o" / "decay.tsv").read_text().splitlines()
    table = [l for l in lines if not l.startswith("#")]
    assert table[0] == "start\tend\tenergy\tu2_sup\tdp_sup"
    assert len(table) == 9


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text(BASE.replace("1.4", "0.9"))
    assert main(["solve", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    assert "gamma" in capsys.readouterr().err
    assert main(["solve", "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path / "x")]) == 4
    assert main(["verify", "--solution", str(tmp_path / "nowhere")]) == 4
    cap = tmp_path / "cap.cfg"
    cap.write_text(BASE + "inlet.a_S = 0.01\ninlet.a_v = 0.01\niteration.max_outer = 1\n")
    assert main(["solve", "--config", str(cap), "--out", str(tmp_path / "c")]) == 3
    assert "# STATUS: cap_reached" in (tmp_path / "c" / "solution.tsv").read_text()
    guard = tmp_path / "guard.cfg"
    guard.write_text(BASE + "inlet.a_v = 0.6\n")
    assert main(["solve", "--config", str(guard), "--out", str(tmp_path / "g")]) == 3
    assert "STATUS: guard_error" in capsys.readouterr().out


def test_round_trip_metrics(tmp_path):
    from contact_nozzle.config import parse_config
    from contact_nozzle.diagnostics import diagnostic_report
    from contact_nozzle.driver import solve
    from contact_nozzle.geometry import CutDomain
    from contact_nozzle.io import write_solution
    cfg_path = tmp_path / "p.cfg"
    cfg_path.write_text(BASE + "inlet.a_S = 0.01\ninlet.a_v = 0.01\n")
    cfg = parse_config(cfg_path)
    sol = solve(cfg.params, cfg.profile(), CutDomain(8.0, 64, 16), cfg.iteration)
    write_solution(tmp_path / "o", sol, cfg)
    again, _ = read_solution(tmp_path / "o")
    a, b = diagnostic_report(sol), diagnostic_report(again)
    for key in a:
        assert b[key] == pytest.approx(a[key], rel=1e-12, abs=1e-15), key
