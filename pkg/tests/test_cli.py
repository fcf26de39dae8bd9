import json

import pytest

from cartan_super.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_build_witt(capsys):
    code, out, _ = run(capsys, "build", "--family", "W", "--m", "1", "--n", "2", "--p", "5", "--t", "1")
    assert code == 0
    data = json.loads(out)["data"]
    assert data["dim"] == 60
    assert len(data["structure_constants"]) > 0


def test_build_invalid_spec(capsys):
    code, _, err = run(capsys, "build", "--family", "H", "--m", "3", "--n", "2", "--p", "5", "--t", "1,1,1")
    assert code == 2
    assert "H requires even m" in err


def test_build_sko_small_m_warning(capsys):
    code, out, _ = run(capsys, "build", "--family", "SKO", "--m", "3", "--p", "5", "--t", "1,1,1", "--lambda", "1")
    assert code == 0
    data = json.loads(out)["data"]
    assert any("m=3" in w for w in data["warnings"])
    assert "structure_omitted" in data


def test_der_ho(capsys):
    code, out, _ = run(capsys, "der", "--family", "HO", "--m", "3", "--p", "5", "--t", "1,1,1")
    assert code == 0
    assert json.loads(out)["data"]["outer"] == 5


def test_der_both_modes(capsys):
    code, out, _ = run(capsys, "der", "--family", "K", "--m", "1", "--n", "2", "--p", "5", "--t", "1",
                       "--variant", "derived1", "--mode", "both")
    assert code == 0
    d = json.loads(out)["data"]
    assert d["outer"] == 0 and d["matched_expected"] is True


def test_der_abelian_table(capsys, tmp_path):
    f = tmp_path / "ab.json"
    f.write_text(json.dumps({"p": 5, "parity": [0], "brackets": []}))
    code, out, _ = run(capsys, "der", "--table", str(f))
    d = json.loads(out)["data"]
    assert code == 0 and (d["total"], d["inner"], d["outer"]) == (1, 0, 1)


def test_output_is_byte_stable(capsys):
    args = ("der", "--family", "K", "--m", "1", "--n", "2", "--p", "5", "--t", "1")
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    assert json.loads(a)["data"] == json.loads(b)["data"]
    strip = lambda s: s.split('"metadata"')[0]
    assert strip(a) == strip(b)


@pytest.fixture
def small_grid(tmp_path):
    g = tmp_path / "default.grid"
    g.write_text("# tiny grid\nfamily=W m=1 n=2 p=5 t=1\nfamily=K m=1 n=2 p=5 t=1\nfamily=H m=2 n=2 p=5 t=1,1\n")
    return g


def test_tables_heights(capsys, small_grid):
    code, out, _ = run(capsys, "tables", "heights", "--grid", str(small_grid))
    lines = out.strip().splitlines()
    assert code == 0
    assert lines[0] == "family,variant,m,n,p,t,lambda,computed,expected,match"
    assert len(lines) == 4 and all(l.endswith("True") for l in lines[1:])


def test_tables_parallel_keeps_order(capsys, small_grid):
    _, serial, _ = run(capsys, "tables", "outer-dims", "--grid", str(small_grid))
    _, par, _ = run(capsys, "tables", "outer-dims", "--grid", str(small_grid), "--jobs", "2")
    assert serial == par


def test_tables_mismatch_exit_code(capsys, tmp_path, monkeypatch):
    from cartan_super import dersolve
    g = tmp_path / "g.grid"
    g.write_text("family=W m=1 n=2 p=5 t=1\n")
    monkeypatch.setattr(dersolve, "expected_height", lambda spec: -1)
    code, _, _ = run(capsys, "tables", "heights", "--grid", str(g))
    assert code == 4
    code, _, _ = run(capsys, "tables", "heights", "--grid", str(g), "--report-only")
    assert code == 0


def test_verify_only(capsys, small_grid):
    code, out, _ = run(capsys, "verify", "--suite", "acceptance", "--only", "heights", "--grid", str(small_grid))
    assert code == 0
    assert out.startswith("PASS heights")
    assert out.count("PASS") == 1


def test_verify_corrupted_fixtures(capsys, tmp_path):
    (tmp_path / "default.grid").write_text("family=W m=1 n=2 p=5 t=1\nfamily=Q m=x\n")
    code, out, _ = run(capsys, "verify", "--fixtures", str(tmp_path))
    assert code != 0
    assert "FAIL grid" in out and "line 2" in out


def test_verify_failing_group_is_named(capsys, small_grid, monkeypatch):
    from cartan_super import acceptance
    monkeypatch.setattr(acceptance, "check_jacobi", lambda h: (_ for _ in ()).throw(RuntimeError("boom")))
    code, out, _ = run(capsys, "verify", "--only", "jacobi", "--grid", str(small_grid))
    assert code == 3
    assert "FAIL jacobi" in out and "boom" in out
