"""Energy terms of the joint basis/map objective and their exact gradients.

Every solver update is the first-order condition of one of these energies
(plus the scaled augmented-Lagrangian terms) with the other blocks frozen,
so the functions here double as the ground truth for stationarity and
finite-difference tests. All matrices are reduced-space quantities.
"""

import numpy as np


def fid_energy(B1, B2, C, F1, F2):
    """Data fidelity 0.5 * |C B1^T F1 - B2^T F2|_F^2."""
    R = C @ (B1.T @ F1) - B2.T @ F2
    return 0.5 * float(np.sum(R * R))


def fid_grads(B1, B2, C, F1, F2):
    R = C @ (B1.T @ F1) - B2.T @ F2
    return {
        "B1": F1 @ R.T @ C,
        "B2": -(F2 @ R.T),
        "C": R @ (B1.T @ F1).T,
    }


def cfid_energy(B1, B2, D, F1, F2):
    """Inverse-map consistency 0.5 * |B1^T F1 - D B2^T F2|_F^2."""
    R = B1.T @ F1 - D @ (B2.T @ F2)
    return 0.5 * float(np.sum(R * R))


def cfid_grads(B1, B2, D, F1, F2):
    R = B1.T @ F1 - D @ (B2.T @ F2)
    return {
        "B1": F1 @ R.T,
        "B2": -(F2 @ R.T @ D),
        "D": -(R @ (B2.T @ F2).T),
    }


def iso_energy(B1, B1p, B2, B2p, C, W1, W2):
    """Laplacian commutativity 0.5 * |C B1^T W1 B1' - B2^T W2 B2' C|_F^2."""
    R = C @ (B1.T @ W1 @ B1p) - (B2.T @ W2 @ B2p) @ C
    return 0.5 * float(np.sum(R * R))


def iso_grads(B1, B1p, B2, B2p, C, W1, W2):
    S1 = B1.T @ W1 @ B1p
    S2 = B2.T @ W2 @ B2p
    R = C @ S1 - S2 @ C
    return {
        "B1": W1 @ B1p @ R.T @ C,
        "B1p": W1 @ B1 @ C.T @ R,
        "B2": -(W2 @ B2p @ C @ R.T),
        "B2p": -(W2 @ B2 @ R @ C.T),
        "C": R @ S1.T - S2.T @ R,
    }


def dir_energy(B1, B1p, B2, B2p, W1, W2):
    """Dirichlet smoothness 0.5 Tr(B1^T W1 B1') + 0.5 Tr(B2^T W2 B2')."""
    return 0.5 * float(np.trace(B1.T @ W1 @ B1p) + np.trace(B2.T @ W2 @ B2p))


def dir_grads(B1, B1p, B2, B2p, W1, W2):
    return {
        "B1": 0.5 * (W1 @ B1p),
        "B1p": 0.5 * (W1 @ B1),
        "B2": 0.5 * (W2 @ B2p),
        "B2p": 0.5 * (W2 @ B2),
    }


def lagrangian_energy(B, Bp, P, Q, G, rho):
    """Scaled augmented-Lagrangian terms for one mesh:
    (rho/2) |B^T G B' - I + P|_F^2 + (rho/2) |B - B' + Q|_G^2,
    where |A|_G^2 = Tr(A^T G A)."""
    S = B.T @ G @ Bp - np.eye(B.shape[1]) + P
    T = B - Bp + Q
    return 0.5 * rho * (float(np.sum(S * S)) + float(np.sum(T * (G @ T))))


def lagrangian_grads(B, Bp, P, Q, G, rho):
    S = B.T @ G @ Bp - np.eye(B.shape[1]) + P
    GT = G @ (B - Bp + Q)
    return {
        "B": rho * (G @ Bp @ S.T + GT),
        "Bp": rho * (G @ B @ S - GT),
    }
