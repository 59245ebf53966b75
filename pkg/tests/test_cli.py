import json

import pytest

from torusobs.cli import main
from torusobs.grid import read_board


@pytest.fixture
def board_path(tmp_path):
    path = tmp_path / "board.json"
    assert main(["sample", "--d", "2", "--n", "4", "--eps", "0.5", "--seed", "7",
                 "--out", str(path)]) == 0
    return path


def test_sample_roundtrip(board_path):
    cb = read_board(str(board_path))
    assert cb.grid.d == 2 and cb.grid.n == 4
    assert cb.seed == 7


def test_sample_rejects_bad_epsilon(tmp_path):
    rc = main(["sample", "--d", "2", "--n", "4", "--eps", "1.5", "--seed", "1",
               "--out", str(tmp_path / "x.json")])
    assert rc == 2


def test_sample_rejects_overflow(tmp_path):
    rc = main(["sample", "--d", "2", "--n", str(2**40), "--eps", "0.5", "--seed", "1",
               "--out", str(tmp_path / "x.json")])
    assert rc == 2


def test_traverse_outputs(board_path, tmp_path):
    out = tmp_path / "tr.csv"
    rc = main(["traverse", "--board", str(board_path), "--origin", "0.1,0.2",
               "--dir", "1,1", "--T", "0.7", "--out", str(out)])
    assert rc == 0
    seg_lines = out.read_text().splitlines()
    assert seg_lines[0] == "seg_index,i1,i2,t_entry,t_exit"
    crossings = tmp_path / "tr.crossings.csv"
    assert crossings.exists()
    assert crossings.read_text().splitlines()[0] == "order,axis_type,occurrence,time"


def test_traverse_gamma_h_is_validation_error(board_path, tmp_path):
    rc = main(["traverse", "--board", str(board_path), "--origin", "0.25,0.2",
               "--dir", "0,1", "--T", "0.5", "--out", str(tmp_path / "x.csv")])
    assert rc == 2


def test_ell_and_dense(board_path, tmp_path):
    out = tmp_path / "est.json"
    assert main(["ell", "--board", str(board_path), "--T", "0.5", "--seed", "3",
                 "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert set(doc) == {"value", "origin", "direction", "method", "resolution"}
    out2 = tmp_path / "estd.json"
    assert main(["ell", "--board", str(board_path), "--T", "0.5", "--dense",
                 "--steps", "24", "--angles", "32", "--out", str(out2)]) == 0
    doc2 = json.loads(out2.read_text())
    assert doc2["method"] == "dense_sweep"
    assert doc["value"] <= doc2["value"] + 1e-9


def test_separations_cli(tmp_path):
    pts = tmp_path / "pts.csv"
    pts.write_text("0,0\n1,0\n0,1\n")
    out_e = tmp_path / "enum.txt"
    out_b = tmp_path / "brute.txt"
    assert main(["separations", "--points", str(pts), "--out", str(out_e)]) == 0
    assert main(["separations", "--points", str(pts), "--bruteforce",
                 "--out", str(out_b)]) == 0
    assert out_e.read_text() == out_b.read_text()
    assert len(out_e.read_text().splitlines()) == 4


def test_separations_duplicate_points(tmp_path):
    pts = tmp_path / "pts.csv"
    pts.write_text("0,0\n0,0\n")
    assert main(["separations", "--points", str(pts), "--out", str(tmp_path / "o")]) == 2


def test_largedev_cli(capsys):
    rc = main(["largedev", "--m", "10", "--c", "1.0", "--eps", "0.5", "--delta", "0.5",
               "--trials", "20000", "--seed", "3", "--exact"])
    assert rc == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "m,c,epsilon,delta,trials,empirical_tail,exact_tail_or_blank,envelope"
    fields = out[1].split(",")
    assert fields[0] == "10"
    assert float(fields[6]) == pytest.approx(2**-9, abs=1e-15)


def test_converge_cli_and_reproducibility(tmp_path, capsys):
    cfg = {
        "d": 2, "T": 0.5, "epsilon": 0.5, "delta": 0.15,
        "n_values": [3], "trials_per_n": 4, "master_seed": 5,
        "policy": {"random_count": 64, "refine_iters": 4},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    out1, out8 = tmp_path / "run1", tmp_path / "run8"
    assert main(["converge", "--config", str(cfg_path), "--out-dir", str(out1)]) == 0
    assert main(["converge", "--config", str(cfg_path), "--out-dir", str(out8),
                 "--workers", "8"]) == 0
    assert (out1 / "report.csv").read_bytes() == (out8 / "report.csv").read_bytes()
    assert (out1 / "histogram.csv").read_bytes() == (out8 / "histogram.csv").read_bytes()


def test_render_cli(board_path, tmp_path):
    out = tmp_path / "b.svg"
    rc = main(["render", "--board", str(board_path), "--geodesic", "0.1,0.2,1,1",
               "--T", "0.7", "--out", str(out)])
    assert rc == 0
    text = out.read_text()
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
    rc = main(["render", "--board", str(board_path), "--geodesic", "0.1,0.2,1",
               "--T", "0.7", "--out", str(out)])
    assert rc == 2


def test_cli_byte_identical_reruns(board_path, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert main(["ell", "--board", str(board_path), "--T", "0.5", "--seed", "11",
                     "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_unknown_command_exit_code():
    assert main(["frobnicate"]) == 2
