"""On-disk formats: descriptor matrices, landmark lists, point maps,
solver checkpoints, and residual-history CSVs."""

import numpy as np

from .extract import PointMap
from .solver import ResidualRecord, SolverState

CHECKPOINT_MAGIC = "fmbs-checkpoint"
CHECKPOINT_VERSION = 1


def write_matrix(path, M):
    """Text matrix file: one `m n` header line, then one row per line."""
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    with open(path, "w") as fh:
        fh.write(f"{M.shape[0]} {M.shape[1]}\n")
        for row in M:
            fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")


def read_matrix(path):
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: expected 'm n' header line")
        m, n = int(header[0]), int(header[1])
        data = np.loadtxt(fh, ndmin=2)
    if data.shape != (m, n):
        raise ValueError(f"{path}: header says {m}x{n}, found {data.shape}")
    return data


def read_landmarks(path):
    """Plain-text landmark file: one vertex index per line."""
    idx = np.loadtxt(path, dtype=np.int64, ndmin=1)
    return idx


def write_pointmap(path, pmap):
    """Point-map text file: header `m1 m2`, then one 0-based target per line."""
    with open(path, "w") as fh:
        fh.write(f"{pmap.source_count} {pmap.target_count}\n")
        for t in pmap.targets:
            fh.write(f"{t}\n")


def read_pointmap(path):
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: expected 'm1 m2' header line")
        m1, m2 = int(header[0]), int(header[1])
        targets = np.loadtxt(fh, dtype=np.int64, ndmin=1)
    if targets.shape[0] != m1:
        raise ValueError(f"{path}: header says {m1} entries, found {targets.shape[0]}")
    return PointMap(targets=targets, target_count=m2)


def save_checkpoint(path, state):
    """Binary checkpoint of a full solver state (versioned npz)."""
    np.savez(
        path,
        magic=np.array(CHECKPOINT_MAGIC),
        version=np.array(CHECKPOINT_VERSION),
        B1=state.B1, B2=state.B2, B1p=state.B1p, B2p=state.B2p,
        C=state.C, D=state.D,
        P1=state.P1, P2=state.P2, Q1p=state.Q1p, Q2p=state.Q2p,
        rho=np.array(state.rho), iteration=np.array(state.iteration),
    )


def load_checkpoint(path):
    with np.load(path, allow_pickle=False) as data:
        if str(data["magic"]) != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a solver checkpoint")
        if int(data["version"]) != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {int(data['version'])}")
        return SolverState(
            B1=data["B1"], B2=data["B2"], B1p=data["B1p"], B2p=data["B2p"],
            C=data["C"], D=data["D"],
            P1=data["P1"], P2=data["P2"], Q1p=data["Q1p"], Q2p=data["Q2p"],
            rho=float(data["rho"]), iteration=int(data["iteration"]),
        )


def read_history_csv(path):
    """Inverse of the history CSV emitted by the report writer."""
    record = ResidualRecord()
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "iter,energy,primal,dual,rho":
            raise ValueError(f"{path}: unexpected history header {header!r}")
        for line in fh:
            _, e, p, d, r = line.split(",")
            record.append(float(e), float(p), float(d), float(r))
    return record


def read_curve_csv(path):
    from .evaluate import ErrorCurve

    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return ErrorCurve(thresholds=rows[:, 0], fractions=rows[:, 1])
