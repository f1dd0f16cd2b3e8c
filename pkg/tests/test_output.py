import numpy as np

from friction_lab import output
from friction_lab.state import Grid1D, StateII


def test_csv_round_trip(tmp_path):
    path = output.write_csv(tmp_path / "sub" / "a.csv", ["t", "H"], [(0.0, 0.1), (1, 1 / 3)])
    assert path.read_text() == "t,H\n0.0,0.1\n1,0.3333333333333333\n"
    header, data = output.read_csv(path)
    assert header == ["t", "H"]
    assert data[1, 1] == 1 / 3


def test_snapshot_blocks(tmp_path):
    grid = Grid1D(ncells=4)
    state = StateII(rho=np.ones((2, 4)), v=np.zeros((2, 4)), theta=np.ones(4))
    path = output.write_snapshots(tmp_path / "s.csv", [(0.0, state), (0.5, state)], grid)
    dat = output.to_gnuplot(path, tmp_path / "s.gp")
    lines = dat.read_text().splitlines()
    assert lines[0] == "# t x rho_1 rho_2 v_1 v_2 theta"
    assert len(lines) == 1 + 4 + 1 + 4
    assert lines[5] == ""
    assert lines[1].split() == ["0.0", "0.125", "1.0", "1.0", "0.0", "0.0", "1.0"]


def test_series_without_blocks(tmp_path):
    path = output.write_csv(tmp_path / "h.csv", ["t", "H"], [(0.0, 1.0), (0.5, 2.0)])
    lines = output.to_gnuplot(path).read_text().splitlines()
    assert "" not in lines
    assert path.with_suffix(".dat").exists()
