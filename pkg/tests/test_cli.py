import csv
import io
from pathlib import Path

import numpy as np
import pytest
from oracles import dense_ggm

from rvbladder import __version__
from rvbladder.cli import (
    EXIT_INFEASIBLE,
    EXIT_OK,
    EXIT_VALIDATION,
    locate_nc,
    main,
    resolve_threads,
    rvb_curve,
)
from rvbladder.coverings import build_rvb_state
from rvbladder.lattice import build_ladder
from rvbladder.statevec import DensityMatrix, dump_rho, load_rho

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def parse(text):
    lines = text.splitlines()
    assert lines[0].startswith("# ")
    assert not any(l.startswith("#") for l in lines[1:])
    return lines[0], list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_rvb_ggm_rows_match_oracle(capsys):
    code, out, _ = run(capsys, "rvb-ggm", "--rungs", "4", "--boundary", "periodic")
    assert code == EXIT_OK
    meta, rows = parse(out)
    assert "command=rvb-ggm" in meta and f"version={__version__}" in meta
    assert "assume=four_site_block_sufficient" in meta
    spec = build_ladder(4, "periodic")
    assert [int(r["k"]) for r in rows] == list(range(5))
    for r in rows:
        k = int(r["k"])
        assert float(r["n_el"]) == k / 4
        ref = 0.0 if k == 0 else dense_ggm(build_rvb_state(spec, k).normalized().dense(), 8)
        assert float(r["ggm"]) == pytest.approx(ref, abs=1e-9)
        assert float(r["ggm"]) == pytest.approx(1 - float(r["lambda_max_sq"]), abs=1e-15)


def test_rvb_ggm_k_zero_periodic_forty(capsys):
    code, out, _ = run(capsys, "rvb-ggm", "--rungs", "20", "--k", "0")
    assert code == EXIT_OK
    assert float(parse(out)[1][0]["ggm"]) == 0.0


def test_rvb_nel_grid(capsys):
    code, out, _ = run(capsys, "rvb-ggm", "--rungs", "10", "--nel-grid", "0,1/5,1/2")
    assert code == EXIT_OK
    assert [r["k"] for r in parse(out)[1]] == ["0", "2", "5"]
    assert run(capsys, "rvb-ggm", "--rungs", "10", "--nel-grid", "1/3")[0] == EXIT_VALIDATION
    assert run(capsys, "rvb-ggm", "--rungs", "10", "--k", "11")[0] == EXIT_VALIDATION


def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "rvb-ggm", "--rungs", "201")[0] == EXIT_INFEASIBLE
    assert run(capsys, "rvb-ggm", "--rungs", "5", "--boundary", "periodic")[0] == EXIT_INFEASIBLE
    assert run(capsys, "tj-ggm", "--rungs", "8")[0] == EXIT_INFEASIBLE
    assert run(capsys, "tj-ggm", "--rungs", "5", "--nel-grid", "0.1")[0] == EXIT_VALIDATION
    assert run(capsys, "oracle-check", "--rungs", "8", "--boundary", "open")[0] == EXIT_INFEASIBLE
    assert run(capsys, "rvb-ggm", "--rungs", "4", "--tol", "0")[0] == EXIT_VALIDATION
    bad = tmp_path / "missing_dir" / "x.csv"
    assert run(capsys, "rvb-ggm", "--rungs", "4", "--out", str(bad))[0] == EXIT_VALIDATION
    with pytest.raises(SystemExit):
        main(["nonsense"])


def test_tj_zero_row(capsys):
    code, out, _ = run(capsys, "tj-ggm", "--rungs", "5", "--nel-grid", "0,0.4")
    assert code == EXIT_OK
    meta, rows = parse(out)
    assert "sector=Sz=0" in meta and "j_over_t=0.66" in meta
    r0 = rows[0]
    assert (float(r0["n_el"]), float(r0["energy"]), float(r0["ggm"]), float(r0["residual"])) == (0, 0, 0, 0)
    assert r0["gap_flag"] == "clean"
    assert float(rows[1]["ggm"]) == pytest.approx(0.4, abs=1e-3)


def test_oracle_check_with_golden(capsys, tmp_path):
    code, out, _ = run(capsys, "oracle-check", "--rungs", "2,3,4", "--golden-dir", str(GOLDEN))
    assert code == EXIT_OK
    _, rows = parse(out)
    assert {r["status"] for r in rows} == {"pass"}
    assert {(r["boundary"], r["rungs"]) for r in rows} >= {("open", "4"), ("periodic", "4")}
    assert all(float(r["max_dev"]) == 0.0 for r in rows if r["k"] == "0")
    # a missing golden directory is a validation failure
    code, out, _ = run(capsys, "oracle-check", "--rungs", "2", "--golden-dir", str(tmp_path))
    assert code == EXIT_VALIDATION and "missing" in out


def test_oracle_check_reports_golden_mismatch(capsys, tmp_path):
    for k in range(3):
        text = (GOLDEN / f"rho_open_N2_k{k}.txt").read_text()
        (tmp_path / f"rho_open_N2_k{k}.txt").write_text(text)
    rho = load_rho((GOLDEN / "rho_open_N2_k1.txt").read_text())
    m = rho.matrix.copy()
    m[0, 0] += 1e-6
    (tmp_path / "rho_open_N2_k1.txt").write_text(dump_rho(DensityMatrix(rho.sites, m)))
    code, out, _ = run(capsys, "oracle-check", "--rungs", "2", "--boundary", "open", "--golden-dir", str(tmp_path))
    assert code == EXIT_VALIDATION
    assert "at (0,0)" in out


def test_dump_rho(capsys, tmp_path):
    code, _, _ = run(capsys, "rvb-ggm", "--rungs", "4", "--boundary", "open", "--k", "2", "--dump-rho", str(tmp_path))
    assert code == EXIT_OK
    dumped = load_rho((tmp_path / "rho_open_N4_k2.txt").read_text())
    gold = load_rho((GOLDEN / "rho_open_N4_k2.txt").read_text())
    assert np.abs(dumped.matrix - gold.matrix).max() < 1e-10


def test_nc_scan_small(capsys):
    code, out, _ = run(capsys, "nc-scan", "--rungs", "4", "--boundary", "periodic")
    assert code == EXIT_OK
    row = parse(out)[1][0]
    spec = build_ladder(4, "periodic")
    g = [0.0] + [dense_ggm(build_rvb_state(spec, k).normalized().dense(), 8) for k in range(1, 5)]
    assert row["sites"] == "8"
    assert float(row["grid_max_nel"]) == np.argmax(g) / 4


def test_locate_nc():
    x = np.linspace(0, 1, 11)
    n_c, g, gm = locate_nc(x, -((x - 0.53) ** 2))
    assert n_c == pytest.approx(0.53, abs=1e-12) and gm == pytest.approx(0.5)
    assert g == pytest.approx(0.0, abs=1e-12)
    assert locate_nc(x, x)[0] == 1.0
    n, curve = rvb_curve(4, "periodic")
    assert n.tolist() == [0, 0.25, 0.5, 0.75, 1.0] and curve[0] == 0.0


def test_theorem_scan(capsys):
    code, out, _ = run(capsys, "theorem-scan", "--rungs", "2,3,4")
    assert code == EXIT_OK
    rows = parse(out)[1]
    assert rows[0]["status"] == "premise excluded"
    assert all(r["status"] == "ok" for r in rows if r["k"] != "0")


def test_thread_resolution(monkeypatch):
    monkeypatch.setenv("RVB_LADDER_THREADS", "3")
    assert resolve_threads(None) == 3
    assert resolve_threads(2) == 2
    monkeypatch.delenv("RVB_LADDER_THREADS")
    assert resolve_threads(None) >= 1


@pytest.mark.parametrize("argv", [
    ["rvb-ggm", "--rungs", "12"],
    ["tj-ggm", "--rungs", "4", "--boundary", "periodic"],
    ["nc-scan", "--rungs", "10,20"],
])
def test_byte_identical_across_threads(tmp_path, argv, monkeypatch):
    outs = []
    for i, threads in enumerate(["1", "2", "2"]):
        path = tmp_path / f"{i}.csv"
        assert main(argv + ["--threads", threads, "--out", str(path)]) == EXIT_OK
        outs.append(path.read_bytes())
    monkeypatch.setenv("RVB_LADDER_THREADS", "3")
    path = tmp_path / "env.csv"
    assert main(argv + ["--out", str(path)]) == EXIT_OK
    outs.append(path.read_bytes())
    assert len(set(outs)) == 1
