import json

import pytest

from rahecke.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_group_ball_radius_zero(capsys):
    code, out, _ = run(capsys, "group", "ball", "--radius", "0")
    assert code == 0
    assert json.loads(out)["elements"] == ["1"]


def test_group_info_sizes(capsys):
    code, out, _ = run(capsys, "group", "info", "--lmax", "3")
    data = json.loads(out)
    assert code == 0 and data["sphere_sizes"] == [1, 5, 15, 40]


def test_group_ball_geometry(capsys):
    code, out, _ = run(capsys, "group", "ball", "--radius", "1", "--geometry")
    data = json.loads(out)
    assert code == 0 and len(data["centers"]) == 6 and len(data["walls"]) == 5


def test_hecke_mul_example(capsys):
    code, out, _ = run(capsys, "hecke", "mul", "--w", "s0", "--f", '{"s0": 1}', "--q", "3")
    data = json.loads(out)
    assert code == 0
    assert data["antichain"] == data["recursive"] == {"1": "3", "s0": "2"}


def test_hecke_mul_rational_mixed(capsys, tmp_path):
    f = tmp_path / "f.json"
    f.write_text('{"s1s3": "1/2", "s2": 3}')
    code, out, _ = run(capsys, "hecke", "mul", "--a", '{"s0s2": 1, "s1": "-2"}', "--f", str(f), "--q", "2,3,2,3,2")
    assert code == 0 and json.loads(out)["match"] is True


def test_walls_dump(capsys):
    code, out, _ = run(capsys, "walls", "dump", "--w", "s0s2s0s3")
    data = json.loads(out)
    assert code == 0 and len(data["walls"]) == 4
    assert [] in data["antichains"]


def test_rep_check(capsys):
    code, out, _ = run(capsys, "rep", "check", "--w", "s0s2s4", "--N", "1024", "--points", "64")
    data = json.loads(out)
    assert code == 0 and data["closed_vs_composed"] < 1e-9


@pytest.mark.parametrize(
    "argv, field",
    [
        (["group", "info", "--k", "4"], "k"),
        (["rep", "check", "--w", "s0", "--N", "1000"], "N"),
        (["rep", "check", "--w", "s0", "--q", "0.5"], "q"),
        (["rep", "check", "--w", "s0", "--q", "x"], "q"),
        (["hecke", "mul", "--w", "s0", "--f", '{"s0": 1}', "--q", "1,2"], "q"),
        (["estimates", "sweep", "--lmax", "2", "--eps", "0.3"], "eps"),
        (["averaging", "run", "--q", "0.5"], "q"),
    ],
)
def test_invalid_config_names_field(capsys, argv, field):
    code, _, err = run(capsys, *argv)
    assert code != 0
    assert field in err


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nk = 5\nlmax = 2\n")
    code, out, _ = run(capsys, "group", "info", "--config", str(cfg))
    assert json.loads(out)["ball_size"] == 21
    code, out, _ = run(capsys, "group", "info", "--config", str(cfg), "--lmax", "1")
    assert json.loads(out)["ball_size"] == 6
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    code, _, err = run(capsys, "group", "info", "--config", str(bad))
    assert code == 2 and "colour" in err


def test_estimates_sweep_deterministic(capsys, tmp_path):
    outs = []
    for i in range(2):
        csv_path, json_path = tmp_path / f"e{i}.csv", tmp_path / f"e{i}.json"
        code, _, _ = run(capsys, "estimates", "sweep", "--lmax", "3", "--samples", "6", "--csv", str(csv_path), "--out", str(json_path))
        assert code == 0
        outs.append((csv_path.read_bytes(), json_path.read_bytes()))
    assert outs[0] == outs[1]
    assert b"\r" not in outs[0][0] and outs[0][0].startswith(b"statement,w,z,h")


def test_averaging_run_small(capsys, tmp_path):
    arcs = tmp_path / "arcs.json"
    arcs.write_text(json.dumps({"U": [0, 3], "V": [2, 4], "W": {"generic": [1, 3]}}))
    csv_path = tmp_path / "avg.csv"
    code, out, _ = run(capsys, "averaging", "run", "--t", "5,6", "--q", "1,2", "--arcs", str(arcs), "--mesh", "6", "--csv", str(csv_path))
    data = json.loads(out)
    assert {r["t"] for r in data["rows"]} == {5.0, 6.0}
    assert {r["q"] for r in data["rows"]} == {1.0, 2.0}
    assert csv_path.read_text().splitlines()[0] == "t,q,W,layer,in_U,value,target,error"
    assert code in (0, 1)
