import numpy as np
import pytest

from fmbs.extract import PointMap
from fmbs.io import (
    load_checkpoint,
    read_history_csv,
    read_landmarks,
    read_matrix,
    read_pointmap,
    save_checkpoint,
    write_matrix,
    write_pointmap,
)
from fmbs.solver import ResidualRecord, SolverState


class TestMatrixFile:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        M = rng.standard_normal((7, 3))
        path = tmp_path / "m.txt"
        write_matrix(path, M)
        assert np.array_equal(read_matrix(path), M)
        header = path.read_text().splitlines()[0]
        assert header == "7 3"

    def test_header_mismatch_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("3 2\n1 2\n3 4\n")
        with pytest.raises(ValueError, match="header says"):
            read_matrix(path)


class TestLandmarks:
    def test_reads_indices(self, tmp_path):
        path = tmp_path / "lm.txt"
        path.write_text("3\n17\n42\n")
        assert np.array_equal(read_landmarks(path), [3, 17, 42])

    def test_single_index(self, tmp_path):
        path = tmp_path / "lm.txt"
        path.write_text("5\n")
        assert np.array_equal(read_landmarks(path), [5])


class TestPointMapFile:
    def test_round_trip(self, tmp_path):
        pmap = PointMap(targets=np.array([2, 0, 1, 2]), target_count=3)
        path = tmp_path / "map.txt"
        write_pointmap(path, pmap)
        first = path.read_text().splitlines()[0]
        assert first == "4 3"
        again = read_pointmap(path)
        assert np.array_equal(again.targets, pmap.targets)
        assert again.target_count == 3

    def test_length_mismatch_rejected(self, tmp_path):
        path = tmp_path / "map.txt"
        path.write_text("3 5\n0\n1\n")
        with pytest.raises(ValueError, match="header says"):
            read_pointmap(path)


class TestCheckpoint:
    def _state(self):
        rng = np.random.default_rng(1)
        return SolverState(
            B1=rng.standard_normal((5, 3)), B2=rng.standard_normal((6, 3)),
            B1p=rng.standard_normal((5, 3)), B2p=rng.standard_normal((6, 3)),
            C=rng.standard_normal((3, 3)), D=rng.standard_normal((3, 3)),
            P1=rng.standard_normal((3, 3)), P2=rng.standard_normal((3, 3)),
            Q1p=rng.standard_normal((5, 3)), Q2p=rng.standard_normal((6, 3)),
            rho=2.5, iteration=17,
        )

    def test_round_trip(self, tmp_path):
        state = self._state()
        path = tmp_path / "ckpt.npz"
        save_checkpoint(path, state)
        again = load_checkpoint(path)
        assert np.array_equal(again.B1, state.B1)
        assert np.array_equal(again.Q2p, state.Q2p)
        assert again.rho == state.rho
        assert again.iteration == 17

    def test_rejects_foreign_npz(self, tmp_path):
        path = tmp_path / "other.npz"
        np.savez(path, magic=np.array("something-else"), version=np.array(1))
        with pytest.raises(ValueError, match="not a solver checkpoint"):
            load_checkpoint(path)


class TestHistoryCsv:
    def test_round_trip(self, tmp_path):
        from fmbs.evaluate import emit_report

        record = ResidualRecord()
        rng = np.random.default_rng(2)
        for _ in range(12):
            record.append(*rng.uniform(0.1, 5.0, size=4))
        emit_report({}, {"h": record}, tmp_path)
        again = read_history_csv(tmp_path / "h_history.csv")
        assert np.array_equal(again.energy, record.energy)
        assert np.array_equal(again.primal, record.primal)
        assert np.array_equal(again.dual, record.dual)
        assert np.array_equal(again.rho, record.rho)
