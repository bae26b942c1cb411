"""Batch pipeline front end: precompute -> solve -> extract -> eval.

Driven by an INI-style config file; spectral artifacts are cached per mesh
under a content hash, so reruns with unchanged inputs skip recomputation.
"""

import argparse
import configparser
import hashlib
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse

from . import io as fio
from .descriptors import combine, landmark_descriptors, make_descriptors, wks
from .errors import DivergenceError
from .evaluate import emit_report, feature_errors, geodesic_error_curve
from .extract import extract_p2p, icp_refine
from .mesh import MassMatrix, cotan_weights, geodesic_distances, load_mesh, lumped_mass
from .solver import SolverParams, finalize, run
from .spectral import PODSubspace, ReducedProblem, lb_eigenbasis, pod_modes, reduce_problem

CACHE_ENV = "FMBS_CACHE"


@dataclass
class RunConfig:
    source_mesh: Path
    target_mesh: Path
    wks_energies: int = 100
    wks_variance: float = 7.0
    n_eigenfunctions: int = 120
    landmarks_source: Path | None = None
    landmarks_target: Path | None = None
    landmark_width: float | None = None
    extra_source: Path | None = None
    extra_target: Path | None = None
    coverage: float = 0.9
    params: SolverParams = None
    icp_iters: int = 10
    ground_truth: Path | None = None
    threshold_max: float = 0.25
    threshold_step: float = 0.0025
    out_dir: Path = Path("out")
    cache_dir: Path = Path("cache")
    seed: int = 0

    def __post_init__(self):
        if self.params is None:
            self.params = SolverParams()
        for attr in ("source_mesh", "target_mesh", "landmarks_source",
                     "landmarks_target", "extra_source", "extra_target", "ground_truth"):
            p = getattr(self, attr)
            if p is not None and not Path(p).exists():
                raise FileNotFoundError(f"config references missing file: {attr} = {p}")
        if not 0.0 < self.coverage <= 1.0:
            raise ValueError("coverage must be in (0, 1]")
        if self.wks_energies == 0 and self.landmarks_source is None and self.extra_source is None:
            raise ValueError("no descriptor source configured")


def load_config(path, out_override=None, env=None):
    """Parse a config file into a RunConfig. Paths are resolved relative to
    the config file; the FMBS_CACHE environment variable overrides the
    configured cache root."""
    import os

    env = os.environ if env is None else env
    path = Path(path)
    cp = configparser.ConfigParser()
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    cp.read(path)
    base = path.parent

    def respath(section, key, default=None):
        raw = cp.get(section, key, fallback=None)
        if raw is None or raw == "":
            return default
        p = Path(raw)
        return p if p.is_absolute() else base / p

    params = SolverParams(
        k=cp.getint("solver", "k", fallback=20),
        rho0=cp.getfloat("solver", "rho0", fallback=1.0),
        mu_cfid=cp.getfloat("solver", "mu_cfid", fallback=0.0),
        mu_iso=cp.getfloat("solver", "mu_iso", fallback=0.0),
        mu_dir=cp.getfloat("solver", "mu_dir", fallback=0.0),
        max_iter=cp.getint("solver", "max_iter", fallback=10000),
        eps_abs=cp.getfloat("solver", "eps_abs", fallback=1e-6),
        eps_rel=cp.getfloat("solver", "eps_rel", fallback=1e-4),
        rho_update=cp.getboolean("solver", "rho_update", fallback=True),
    )
    cache_env = env.get(CACHE_ENV)
    if cache_env:
        cache_dir = Path(cache_env)
    else:
        cache_dir = respath("output", "cache_dir", base / "cache")
    out_dir = Path(out_override) if out_override else respath("output", "out_dir", base / "out")
    lm_width = cp.getfloat("descriptors", "landmark_width", fallback=None)
    return RunConfig(
        source_mesh=respath("meshes", "source"),
        target_mesh=respath("meshes", "target"),
        wks_energies=cp.getint("descriptors", "wks_energies", fallback=100),
        wks_variance=cp.getfloat("descriptors", "wks_variance", fallback=7.0),
        n_eigenfunctions=cp.getint("descriptors", "n_eigenfunctions", fallback=120),
        landmarks_source=respath("descriptors", "landmarks_source"),
        landmarks_target=respath("descriptors", "landmarks_target"),
        landmark_width=lm_width,
        extra_source=respath("descriptors", "extra_source"),
        extra_target=respath("descriptors", "extra_target"),
        coverage=cp.getfloat("spectral", "coverage", fallback=0.9),
        params=params,
        icp_iters=cp.getint("extract", "icp_iters", fallback=10),
        ground_truth=respath("eval", "ground_truth"),
        threshold_max=cp.getfloat("eval", "threshold_max", fallback=0.25),
        threshold_step=cp.getfloat("eval", "threshold_step", fallback=0.0025),
        out_dir=out_dir,
        cache_dir=cache_dir,
        seed=cp.getint("output", "seed", fallback=0),
    )


def _side(config, which):
    if which == "source":
        return config.source_mesh, config.landmarks_source, config.extra_source
    return config.target_mesh, config.landmarks_target, config.extra_target


def _cache_key(config, which):
    mesh_path, lm_path, extra_path = _side(config, which)
    h = hashlib.sha256()
    h.update(mesh_path.read_bytes())
    for p in (lm_path, extra_path):
        h.update(b"\0" if p is None else p.read_bytes())
    tag = (
        f"v1|{config.wks_energies}|{config.wks_variance}|{config.n_eigenfunctions}|"
        f"{config.landmark_width}|{config.coverage}|{config.params.k}"
    )
    h.update(tag.encode())
    return h.hexdigest()


def _build_side(config, which):
    """Compute every per-mesh spectral artifact for one side of the pair."""
    mesh_path, lm_path, extra_path = _side(config, which)
    mesh = load_mesh(mesh_path)
    mass = lumped_mass(mesh)
    W = cotan_weights(mesh)
    families = []
    if config.wks_energies > 0:
        basis = lb_eigenbasis(W, mass, min(config.n_eigenfunctions, mesh.vertex_count))
        families.append(wks(basis, mass, config.wks_energies, config.wks_variance))
    if lm_path is not None:
        width = config.landmark_width
        if width is None:
            width = 0.05 * np.sqrt(mesh.total_area())
        families.append(landmark_descriptors(mesh, fio.read_landmarks(lm_path), width))
    if extra_path is not None:
        families.append(make_descriptors(fio.read_matrix(extra_path), mass))
    desc = combine(families)
    pod = pod_modes(desc, config.coverage, min_rank=config.params.k)
    prob = reduce_problem(pod, desc, mass, W)
    return mesh, mass, W, desc, pod, prob


def _save_side_cache(path, mass, W, desc, pod, prob):
    W = W.tocsr()
    np.savez(
        path,
        mass_diag=mass.diag,
        W_data=W.data, W_indices=W.indices, W_indptr=W.indptr,
        W_shape=np.array(W.shape),
        desc_raw=desc.raw, desc_scaled=desc.scaled,
        U_modes=pod.modes, U_sv=pod.singular_values,
        coverage=np.array(pod.coverage),
        F_red=prob.F_red, G_red=prob.G_red, W_red=prob.W_red,
    )


def _load_side_cache(path):
    from .descriptors import DescriptorSet

    with np.load(path, allow_pickle=False) as d:
        mass = MassMatrix(diag=d["mass_diag"])
        W = sparse.csr_matrix(
            (d["W_data"], d["W_indices"], d["W_indptr"]), shape=tuple(d["W_shape"])
        )
        desc = DescriptorSet(raw=d["desc_raw"], scaled=d["desc_scaled"])
        pod = PODSubspace(
            modes=d["U_modes"], singular_values=d["U_sv"], coverage=float(d["coverage"])
        )
        prob = ReducedProblem(F_red=d["F_red"], G_red=d["G_red"], W_red=d["W_red"], U=pod)
    return mass, W, desc, pod, prob


def _precompute_side(config, which):
    config.cache_dir.mkdir(parents=True, exist_ok=True)
    key = _cache_key(config, which)
    cache_path = config.cache_dir / f"{which}-{key}.npz"
    if cache_path.exists():
        try:
            artifacts = _load_side_cache(cache_path)
            return cache_path, True, artifacts
        except Exception as exc:
            warnings.warn(f"corrupted cache {cache_path}: {exc}; recomputing", stacklevel=2)
    mesh, mass, W, desc, pod, prob = _build_side(config, which)
    _save_side_cache(cache_path, mass, W, desc, pod, prob)
    return cache_path, False, (mass, W, desc, pod, prob)


def cmd_precompute(config):
    """Build (or reuse) the cached spectral artifacts for both meshes."""
    summary = {}
    for which in ("source", "target"):
        try:
            path, hit, (mass, W, desc, pod, prob) = _precompute_side(config, which)
        except Exception as exc:
            raise RuntimeError(f"precompute failed for {which} mesh: {exc}") from exc
        summary[which] = {
            "cache": path, "cache_hit": hit,
            "n_descriptors": desc.count, "r": pod.rank,
        }
        print(f"[precompute] {which}: n={desc.count} r={pod.rank} "
              f"({'cache hit' if hit else 'computed'})")
    return summary


def cmd_solve(config):
    """Run the solver, then write checkpoint, lifted bases, and history."""
    _, _, (mass1, _, _, _, prob1) = _precompute_side(config, "source")
    _, _, (mass2, _, _, _, prob2) = _precompute_side(config, "target")
    state, record = run(prob1, prob2, config.params)
    B1, B2, C = finalize(state, prob1, prob2, mass1, mass2)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    ckpt = config.out_dir / "checkpoint.npz"
    fio.save_checkpoint(ckpt, state)
    bases = config.out_dir / "bases.npz"
    np.savez(bases, B1=B1, B2=B2, C=C)
    history = config.out_dir / "history.csv"
    with open(history, "w") as fh:
        fh.write("iter,energy,primal,dual,rho\n")
        for i in range(len(record)):
            fh.write(f"{i},{record.energy[i]:.17g},{record.primal[i]:.17g},"
                     f"{record.dual[i]:.17g},{record.rho[i]:.17g}\n")
    final_e = record.energy[-1] if len(record) else float("nan")
    print(f"[solve] finished after {state.iteration} iterations, energy {final_e:.3e}")
    return {"checkpoint": ckpt, "bases": bases, "history": history,
            "iterations": state.iteration, "energy": final_e}


def cmd_extract(config):
    """Convert solver output into a vertex-to-vertex map file."""
    bases_path = config.out_dir / "bases.npz"
    if not bases_path.exists():
        raise FileNotFoundError(f"missing solver output {bases_path}; run `fmbs solve` first")
    with np.load(bases_path) as d:
        B1, B2, C = d["B1"], d["B2"], d["C"]
    if config.icp_iters > 0:
        C, pmap = icp_refine(B1, B2, C, config.icp_iters)
    else:
        pmap = extract_p2p(B1, B2, C)
    map_path = config.out_dir / "map.txt"
    fio.write_pointmap(map_path, pmap)
    print(f"[extract] wrote {map_path} ({pmap.source_count} -> {pmap.target_count} vertices)")
    return {"map": map_path}


def cmd_eval(config):
    """Emit error curves (if ground truth given) and feature-error summaries."""
    map_path = config.out_dir / "map.txt"
    bases_path = config.out_dir / "bases.npz"
    for p in (map_path, bases_path):
        if not p.exists():
            raise FileNotFoundError(f"missing {p}; run the earlier pipeline stages first")
    pmap = fio.read_pointmap(map_path)
    with np.load(bases_path) as d:
        B1, B2, C = d["B1"], d["B2"], d["C"]
    _, _, (_, _, desc1, _, _) = _precompute_side(config, "source")
    _, _, (_, _, desc2, _, _) = _precompute_side(config, "target")
    e1, e2 = feature_errors(B1, B2, C, desc1, desc2)
    report_dir = config.out_dir / "report"
    report_dir.mkdir(parents=True, exist_ok=True)
    for name, vec in (("e1", e1), ("e2", e2)):
        with open(report_dir / f"{name}.csv", "w") as fh:
            fh.write("index,error\n")
            for i, v in enumerate(vec):
                fh.write(f"{i},{v:.17g}\n")
    curves = {}
    if config.ground_truth is not None:
        gt = fio.read_pointmap(config.ground_truth)
        mesh2 = load_mesh(config.target_mesh)
        n_steps = int(round(config.threshold_max / config.threshold_step))
        thresholds = np.linspace(0.0, config.threshold_max, n_steps + 1)
        curves["geodesic_error"] = geodesic_error_curve(pmap, gt, mesh2, thresholds)
    else:
        print("[eval] no ground-truth map configured: reporting feature errors only")
    histories = {}
    history_path = config.out_dir / "history.csv"
    if history_path.exists():
        histories["solver"] = fio.read_history_csv(history_path)
    emit_report(curves, histories, report_dir)
    print(f"[eval] report in {report_dir} (mean e1 {e1.mean():.3e}, mean e2 {e2.mean():.3e})")
    return {"report": report_dir, "e1_mean": float(e1.mean()), "e2_mean": float(e2.mean())}


COMMANDS = {
    "precompute": cmd_precompute,
    "solve": cmd_solve,
    "extract": cmd_extract,
    "eval": cmd_eval,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="fmbs",
        description="Joint basis design and functional map computation for mesh pairs",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", required=True, help="path to the run config file")
        p.add_argument("--out", default=None, help="override the configured output directory")
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config, out_override=args.out)
        COMMANDS[args.command](config)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (FileNotFoundError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
