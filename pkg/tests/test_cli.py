import numpy as np
import pytest

from fmbs.cli import cmd_eval, cmd_extract, cmd_precompute, cmd_solve, load_config, main
from fmbs.io import load_checkpoint, read_pointmap
from fmbs.synthetic import icosphere, write_off

CONFIG_TEMPLATE = """
[meshes]
source = sphere.off
target = sphere.off

[descriptors]
wks_energies = 30
n_eigenfunctions = 36
landmarks_source = lm.txt
landmarks_target = lm.txt
landmark_width = 0.5

[spectral]
coverage = {coverage}

[solver]
k = {k}
max_iter = {max_iter}

[extract]
icp_iters = {icp_iters}

[eval]
{gt_line}

[output]
out_dir = out
cache_dir = cache
"""


@pytest.fixture
def workspace(tmp_path):
    mesh = icosphere(2)
    write_off(mesh, tmp_path / "sphere.off")
    (tmp_path / "lm.txt").write_text("0\n40\n80\n120\n")
    m = mesh.vertex_count
    (tmp_path / "gt.txt").write_text(f"{m} {m}\n" + "".join(f"{i}\n" for i in range(m)))

    def write_config(coverage=0.99, k=6, max_iter=2000, icp_iters=0, with_gt=True):
        gt_line = "ground_truth = gt.txt" if with_gt else ""
        (tmp_path / "run.ini").write_text(
            CONFIG_TEMPLATE.format(
                coverage=coverage, k=k, max_iter=max_iter,
                icp_iters=icp_iters, gt_line=gt_line,
            )
        )
        return tmp_path / "run.ini"

    return tmp_path, mesh, write_config


class TestLoadConfig:
    def test_defaults_and_paths(self, workspace):
        tmp_path, _, write_config = workspace
        config = load_config(write_config())
        assert config.params.k == 6
        assert config.params.rho0 == 1.0
        assert config.coverage == 0.99
        assert config.out_dir == tmp_path / "out"

    def test_missing_file_rejected(self, workspace):
        tmp_path, _, write_config = workspace
        path = write_config()
        (tmp_path / "lm.txt").unlink()
        with pytest.raises(FileNotFoundError, match="landmarks_source"):
            load_config(path)

    def test_out_override(self, workspace):
        tmp_path, _, write_config = workspace
        config = load_config(write_config(), out_override=tmp_path / "elsewhere")
        assert config.out_dir == tmp_path / "elsewhere"

    def test_cache_env_override(self, workspace, tmp_path):
        ws, _, write_config = workspace
        config = load_config(write_config(), env={"FMBS_CACHE": str(tmp_path / "cc")})
        assert config.cache_dir == tmp_path / "cc"

    def test_basis_size_defaults_to_twenty(self, tmp_path):
        from fmbs.synthetic import icosphere, write_off

        write_off(icosphere(1), tmp_path / "m.off")
        (tmp_path / "min.ini").write_text("[meshes]\nsource = m.off\ntarget = m.off\n")
        config = load_config(tmp_path / "min.ini")
        assert config.params.k == 20
        assert config.params.max_iter == 10000


class TestPrecompute:
    def test_cache_miss_then_hit(self, workspace):
        _, _, write_config = workspace
        config = load_config(write_config())
        first = cmd_precompute(config)
        assert not first["source"]["cache_hit"]
        second = cmd_precompute(config)
        assert second["source"]["cache_hit"] and second["target"]["cache_hit"]

    def test_corrupted_cache_recomputed_with_warning(self, workspace):
        _, _, write_config = workspace
        config = load_config(write_config())
        first = cmd_precompute(config)
        first["source"]["cache"].write_bytes(b"garbage")
        with pytest.warns(UserWarning, match="corrupted cache"):
            again = cmd_precompute(config)
        assert not again["source"]["cache_hit"]

    def test_coverage_rule_on_cached_rank(self, workspace):
        _, _, write_config = workspace
        config = load_config(write_config(coverage=0.99))
        summary = cmd_precompute(config)
        r = summary["source"]["r"]
        from fmbs.cli import _precompute_side

        _, _, (_, _, desc, pod, _) = _precompute_side(config, "source")
        s = np.linalg.svd(desc.raw, compute_uv=False)
        energy = np.cumsum(s**2) / np.sum(s**2)
        assert energy[r - 1] >= 0.99 or r == config.params.k  # floored at k

    def test_parameter_change_invalidates_cache(self, workspace):
        _, _, write_config = workspace
        config = load_config(write_config())
        cmd_precompute(config)
        config2 = load_config(write_config(coverage=0.9))
        assert not cmd_precompute(config2)["source"]["cache_hit"]


class TestSolveExtractEval:
    def test_identity_smoke_pipeline(self, workspace):
        tmp_path, mesh, write_config = workspace
        config = load_config(write_config())
        solve_out = cmd_solve(config)
        assert solve_out["energy"] < 1e-6
        assert solve_out["checkpoint"].exists()
        assert solve_out["bases"].exists()
        assert solve_out["history"].exists()

        extract_out = cmd_extract(config)
        pmap = read_pointmap(extract_out["map"])
        identity = np.mean(pmap.targets == np.arange(mesh.vertex_count))
        assert identity >= 0.99

        eval_out = cmd_eval(config)
        report = eval_out["report"]
        assert (report / "e1.csv").exists()
        assert (report / "e2.csv").exists()
        curve_csv = report / "geodesic_error_curve.csv"
        assert curve_csv.exists()
        first_fraction = float(curve_csv.read_text().splitlines()[1].split(",")[1])
        assert first_fraction == 1.0  # gt equals the computed map at threshold 0

    def test_max_iter_zero_emits_initialization(self, workspace):
        _, _, write_config = workspace
        config = load_config(write_config(max_iter=0))
        out = cmd_solve(config)
        state = load_checkpoint(out["checkpoint"])
        assert state.iteration == 0
        assert np.abs(state.P1).max() == 0.0

    def test_icp_iters_zero_is_raw_nn(self, workspace):
        tmp_path, mesh, write_config = workspace
        config = load_config(write_config(icp_iters=0))
        cmd_solve(config)
        cmd_extract(config)
        from fmbs.extract import extract_p2p

        with np.load(config.out_dir / "bases.npz") as d:
            raw = extract_p2p(d["B1"], d["B2"], d["C"])
        pmap = read_pointmap(config.out_dir / "map.txt")
        assert np.array_equal(pmap.targets, raw.targets)

    def test_extract_idempotent(self, workspace):
        _, _, write_config = workspace
        config = load_config(write_config())
        cmd_solve(config)
        cmd_extract(config)
        first = (config.out_dir / "map.txt").read_text()
        cmd_extract(config)
        assert (config.out_dir / "map.txt").read_text() == first

    def test_eval_without_ground_truth(self, workspace, capsys):
        _, _, write_config = workspace
        config = load_config(write_config(with_gt=False))
        cmd_solve(config)
        cmd_extract(config)
        out = cmd_eval(config)
        captured = capsys.readouterr()
        assert "feature errors only" in captured.out
        assert not (out["report"] / "geodesic_error_curve.csv").exists()
        assert (out["report"] / "e1.csv").exists()

    def test_extract_requires_solve(self, workspace):
        _, _, write_config = workspace
        config = load_config(write_config())
        with pytest.raises(FileNotFoundError, match="missing solver output"):
            cmd_extract(config)

    def test_external_matrix_descriptors(self, workspace):
        # segmentation-style descriptors supplied as matrix files join the
        # WKS and landmark families
        tmp_path, mesh, write_config = workspace
        from fmbs.io import write_matrix

        rng = np.random.default_rng(0)
        extra = rng.uniform(0.1, 1.0, size=(mesh.vertex_count, 3))
        write_matrix(tmp_path / "seg.txt", extra)
        write_config()
        ini = (tmp_path / "run.ini").read_text().replace(
            "landmark_width = 0.5",
            "landmark_width = 0.5\nextra_source = seg.txt\nextra_target = seg.txt",
        )
        (tmp_path / "run.ini").write_text(ini)
        config = load_config(tmp_path / "run.ini")
        summary = cmd_precompute(config)
        assert summary["source"]["n_descriptors"] == 30 + 4 + 3


class TestMain:
    def test_full_pipeline_exit_codes(self, workspace):
        tmp_path, _, write_config = workspace
        cfg = str(write_config())
        for cmd in ("precompute", "solve", "extract", "eval"):
            assert main([cmd, "--config", cfg]) == 0

    def test_missing_config_exits_nonzero(self, tmp_path):
        assert main(["solve", "--config", str(tmp_path / "nope.ini")]) == 2

    def test_extract_before_solve_exits_nonzero(self, workspace):
        _, _, write_config = workspace
        assert main(["extract", "--config", str(write_config())]) == 2

    def test_divergence_exits_with_code_three(self, workspace, monkeypatch, capsys):
        import fmbs.cli as cli_mod
        from fmbs.errors import DivergenceError

        _, _, write_config = workspace

        def explode(*args, **kwargs):
            raise DivergenceError(41)

        monkeypatch.setattr(cli_mod, "run", explode)
        assert main(["solve", "--config", str(write_config())]) == 3
        assert "iteration 41" in capsys.readouterr().err
