import numpy as np
import pytest

from fmbs.descriptors import combine, landmark_descriptors, wks
from fmbs.mesh import TriMesh, cotan_weights, lumped_mass
from fmbs.spectral import PODSubspace, ReducedProblem, lb_eigenbasis, pod_modes, reduce_problem
from fmbs.synthetic import deformed_icosphere, icosphere, permute_mesh


@pytest.fixture
def right_triangle():
    return TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])


@pytest.fixture
def tetrahedron():
    verts = [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]
    faces = [[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]]
    return TriMesh(verts, faces)


@pytest.fixture(scope="session")
def sphere3():
    return icosphere(3)


@pytest.fixture(scope="session")
def sphere2():
    return icosphere(2)


def random_reduced_problem(r, n, seed, w_scale=1.0):
    """Generic dense reduced problem with SPD G and symmetric PSD W."""
    rng = np.random.default_rng(seed)
    F = rng.standard_normal((r, n))
    A = rng.standard_normal((r, r))
    G = A @ A.T + r * np.eye(r)
    Wh = rng.standard_normal((r, r))
    W = w_scale * (Wh @ Wh.T)
    U = PODSubspace(modes=np.eye(r), singular_values=np.ones(r), coverage=1.0)
    return ReducedProblem(F_red=F, G_red=0.5 * (G + G.T), W_red=0.5 * (W + W.T), U=U)


def build_side(mesh, landmarks, k, coverage=0.9, n_eig=64, n_wks=50, variance=7.0, width=0.4):
    """Full per-mesh pipeline: operators, descriptors, POD, reduction."""
    mass = lumped_mass(mesh)
    W = cotan_weights(mesh)
    basis = lb_eigenbasis(W, mass, n_eig)
    families = [wks(basis, mass, n_energies=n_wks, variance=variance)]
    if landmarks:
        families.append(landmark_descriptors(mesh, landmarks, width=width))
    desc = combine(families)
    pod = pod_modes(desc, coverage, min_rank=k)
    return {
        "mesh": mesh, "mass": mass, "W": W, "lb": basis,
        "desc": desc, "pod": pod, "prob": reduce_problem(pod, desc, mass, W),
    }


DESK_LANDMARKS = [0, 100, 250, 400, 550]


@pytest.fixture(scope="session")
def desk_pair(sphere3):
    """Deformed-icosphere pair at the acceptance-criterion scale: m=642,
    WKS n=50 plus 5 landmarks, coverage 0.9, k=10. Narrow energy bands and
    sharp landmark bumps keep the descriptor content rich enough that the
    designed bases have real work to do."""
    k = 10
    side1 = build_side(sphere3, DESK_LANDMARKS, k, variance=1.0, width=0.25)
    side2 = build_side(deformed_icosphere(3), DESK_LANDMARKS, k, variance=1.0, width=0.25)
    return side1, side2, k


@pytest.fixture(scope="session")
def permuted_pair(sphere3):
    """Sphere and a random vertex permutation of it, with well-spread
    landmarks; WKS cut at a spectral-cluster boundary (64) so the two
    sides' descriptors agree exactly up to the permutation."""
    mesh2, perm = permute_mesh(sphere3, seed=3)
    rng = np.random.default_rng(9)
    lm1 = sorted(int(i) for i in rng.choice(sphere3.vertex_count, size=12, replace=False))
    lm2 = [int(perm[i]) for i in lm1]
    k = 12
    side1 = build_side(sphere3, lm1, k, coverage=0.99, width=0.8)
    side2 = build_side(mesh2, lm2, k, coverage=0.99, width=0.8)
    return side1, side2, perm, k
