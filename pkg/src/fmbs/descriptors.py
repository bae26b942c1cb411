"""Descriptor generation: multiscale spectral signatures and landmark bumps.

A DescriptorSet stores both the raw functions and their mass-scaled
counterparts; the optimization consumes the scaled matrix, the spatial
error metric compares against the raw one.
"""

from dataclasses import dataclass, field

import numpy as np

from .mesh import MassMatrix, geodesic_distances, lumped_mass


@dataclass(frozen=True)
class DescriptorSet:
    """Corresponding scalar functions on one mesh, one per column.

    Attributes
    ----------
    raw : (m, n) ndarray
        Descriptor functions sampled at vertices.
    scaled : (m, n) ndarray
        Mass-scaled functions ``G @ raw`` used by the solver.
    labels : list of str
    """

    raw: np.ndarray
    scaled: np.ndarray
    labels: list = field(default_factory=list)

    def __post_init__(self):
        if self.raw.ndim != 2 or self.raw.shape[1] < 1:
            raise ValueError("descriptor matrix must be (m, n) with n >= 1")
        if self.raw.shape != self.scaled.shape:
            raise ValueError("raw and scaled descriptor shapes differ")
        zero = ~np.any(self.raw != 0.0, axis=0)
        if zero.any():
            raise ValueError(f"descriptor column {int(np.flatnonzero(zero)[0])} is all zero")

    @property
    def count(self):
        return self.raw.shape[1]


def make_descriptors(raw, mass, labels=None):
    """Build a DescriptorSet from raw functions and the mesh mass matrix."""
    raw = np.asarray(raw, dtype=np.float64)
    scaled = mass.diag[:, None] * raw
    labels = list(labels) if labels is not None else [f"d{i}" for i in range(raw.shape[1])]
    return DescriptorSet(raw=raw, scaled=scaled, labels=labels)


def combine(families):
    """Concatenate descriptor families, first rescaling each family's raw
    block to unit Frobenius norm so no family dominates by magnitude."""
    if not families:
        raise ValueError("need at least one descriptor family")
    raws, scaleds, labels = [], [], []
    for fam in families:
        nrm = np.linalg.norm(fam.raw)
        raws.append(fam.raw / nrm)
        scaleds.append(fam.scaled / nrm)
        labels.extend(fam.labels)
    return DescriptorSet(
        raw=np.concatenate(raws, axis=1),
        scaled=np.concatenate(scaleds, axis=1),
        labels=labels,
    )


def wks(basis, mass, n_energies=100, variance=7.0):
    """Wave kernel signature columns over log-spaced energy levels.

    Per vertex v and energy e the value is
    ``sum_i phi_i(v)^2 * exp(-(e - log lambda_i)^2 / (2 sigma^2))``
    normalized by the sum of the Gaussian weights. Energies span the log of
    the nonzero spectrum; ``sigma = variance * (e_max - e_min) / n_energies``.

    Parameters
    ----------
    basis : LBBasis
        Needs at least two nonzero eigenvalues.
    mass : MassMatrix
    n_energies : int
    variance : float
        Width of the energy Gaussians relative to the grid spacing.
    """
    lam = np.asarray(basis.eigenvalues)
    tol = lam.max(initial=0.0) * 1e-8
    keep = lam > tol
    if keep.sum() < 2:
        raise ValueError("need at least two nonzero eigenvalues for WKS")
    lam = lam[keep]
    phi2 = basis.functions[:, keep] ** 2
    log_lam = np.log(lam)
    e_min, e_max = log_lam[0], log_lam[-1]
    energies = np.linspace(e_min, e_max, n_energies)
    sigma = variance * (e_max - e_min) / n_energies
    weights = np.exp(-((energies[None, :] - log_lam[:, None]) ** 2) / (2.0 * sigma**2))
    raw = (phi2 @ weights) / weights.sum(axis=0)
    return make_descriptors(raw, mass, labels=[f"wks{i}" for i in range(n_energies)])


def landmark_descriptors(mesh, landmarks, width):
    """Geodesic Gaussian bump around each landmark vertex, peak value 1."""
    landmarks = np.asarray(landmarks, dtype=np.int64)
    if landmarks.size and (landmarks.min() < 0 or landmarks.max() >= mesh.vertex_count):
        raise ValueError("landmark index out of range")
    cols = []
    for lm in landmarks:
        d = geodesic_distances(mesh, int(lm))
        cols.append(np.exp(-((d / width) ** 2)))
    raw = np.column_stack(cols)
    return make_descriptors(raw, lumped_mass(mesh), labels=[f"lm{int(i)}" for i in landmarks])
