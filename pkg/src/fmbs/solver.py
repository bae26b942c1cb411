"""ADMM solver that jointly designs two scalar bases and their aligning map.

The search runs over reduced-space basis blocks B1, B2 (with auxiliary
copies B1', B2' carrying the orthogonality constraints), the functional map
C, and optionally the inverse map D. One sweep updates the primal blocks in
the order (B1, B2, B1', B2', C[, D]), then the scaled dual blocks, then the
penalty. Each subproblem is a linear, SPD, or Stein-type solve; with the
regularizers switched on, each update is still the exact first-order
condition of the regularized objective plus the scaled Lagrangian terms
with all other blocks frozen.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import gradients
from .errors import DivergenceError
from .linalg import g_orthonormalize, pseudo_inverse, solve_spd, solve_stein
from .spectral import lift

# Dense Kronecker solve of the C update stays affordable up to this k;
# larger maps fall back to Sylvester-splitting sweeps.
_KRON_LIMIT = 64


@dataclass
class SolverParams:
    """Knobs of the ADMM scheme.

    ``k`` is the number of designed basis functions; ``rho0`` the initial
    penalty; the ``mu_*`` weights switch on the inverse-map, Laplacian
    commutativity, and Dirichlet regularizers. ``rho_freeze_after`` stops
    penalty adaptation after that many iterations (None: never).
    """

    k: int = 20
    rho0: float = 1.0
    mu_cfid: float = 0.0
    mu_iso: float = 0.0
    mu_dir: float = 0.0
    max_iter: int = 10000
    eps_abs: float = 1e-6
    eps_rel: float = 1e-4
    rho_update: bool = True
    rho_freeze_after: int | None = None
    divergence_limit: float = 1e12

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.rho0 <= 0:
            raise ValueError("rho0 must be positive")
        if min(self.mu_cfid, self.mu_iso, self.mu_dir) < 0:
            raise ValueError("regularizer weights must be nonnegative")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")


@dataclass
class SolverState:
    """All primal and dual blocks of one solve, plus the penalty.

    Mutable and confined to a single solve; independent solves may run
    concurrently on their own states.
    """

    B1: np.ndarray
    B2: np.ndarray
    B1p: np.ndarray
    B2p: np.ndarray
    C: np.ndarray
    D: np.ndarray
    P1: np.ndarray
    P2: np.ndarray
    Q1p: np.ndarray
    Q2p: np.ndarray
    rho: float
    iteration: int = 0

    def copy(self):
        return SolverState(
            B1=self.B1.copy(), B2=self.B2.copy(),
            B1p=self.B1p.copy(), B2p=self.B2p.copy(),
            C=self.C.copy(), D=self.D.copy(),
            P1=self.P1.copy(), P2=self.P2.copy(),
            Q1p=self.Q1p.copy(), Q2p=self.Q2p.copy(),
            rho=self.rho, iteration=self.iteration,
        )


@dataclass
class ResidualRecord:
    """Per-iteration history of energy, residuals, and penalty."""

    energy: list = field(default_factory=list)
    primal: list = field(default_factory=list)
    dual: list = field(default_factory=list)
    rho: list = field(default_factory=list)
    lagrangian: list = field(default_factory=list)

    def append(self, energy, primal, dual, rho, lagrangian=None):
        self.energy.append(float(energy))
        self.primal.append(float(primal))
        self.dual.append(float(dual))
        self.rho.append(float(rho))
        if lagrangian is not None:
            self.lagrangian.append(float(lagrangian))

    def __len__(self):
        return len(self.energy)


def energy_fid(state, prob1, prob2):
    """Data fidelity energy at the current state."""
    return gradients.fid_energy(state.B1, state.B2, state.C, prob1.F_red, prob2.F_red)


def energy_regularizers(state, prob1, prob2):
    """(E_cfid, E_iso, E_dir) at the current state, unweighted."""
    e_cfid = gradients.cfid_energy(state.B1, state.B2, state.D, prob1.F_red, prob2.F_red)
    e_iso = gradients.iso_energy(
        state.B1, state.B1p, state.B2, state.B2p, state.C, prob1.W_red, prob2.W_red
    )
    e_dir = gradients.dir_energy(
        state.B1, state.B1p, state.B2, state.B2p, prob1.W_red, prob2.W_red
    )
    return e_cfid, e_iso, e_dir


def total_energy(state, prob1, prob2, params):
    e = energy_fid(state, prob1, prob2)
    if params.mu_cfid or params.mu_iso or params.mu_dir:
        e_cfid, e_iso, e_dir = energy_regularizers(state, prob1, prob2)
        e += params.mu_cfid * e_cfid + params.mu_iso * e_iso + params.mu_dir * e_dir
    return e


def update_B1(state, prob1, prob2, params):
    """Stein-equation update of the first basis block.

    Solves A1 B1 (C^T C) + O1 B1 = C1 where the fidelity term contributes
    A1 = F1 F1^T, the Lagrangian terms contribute O1 and the B1'-coupled
    right-hand side, and the regularizers add their first-order terms.
    """
    F1, F2 = prob1.F_red, prob2.F_red
    G1, W1, W2 = prob1.G_red, prob1.W_red, prob2.W_red
    rho = state.rho
    k = state.C.shape[0]
    G1B1p = G1 @ state.B1p

    A1 = F1 @ F1.T
    O1 = rho * (G1B1p @ G1B1p.T) + rho * G1
    rhs = (
        F1 @ F2.T @ state.B2 @ state.C
        + rho * G1B1p @ (np.eye(k) - state.P1).T
        + rho * (G1 @ (state.B1p - state.Q1p))
    )
    if params.mu_cfid:
        O1 = O1 + params.mu_cfid * (F1 @ F1.T)
        rhs = rhs + params.mu_cfid * (F1 @ F2.T @ state.B2 @ state.D.T)
    if params.mu_iso:
        W1B1p = W1 @ state.B1p
        A1 = A1 + params.mu_iso * (W1B1p @ W1B1p.T)
        S2 = state.B2.T @ W2 @ state.B2p
        rhs = rhs + params.mu_iso * (W1B1p @ state.C.T @ S2.T @ state.C)
    if params.mu_dir:
        rhs = rhs - 0.5 * params.mu_dir * (W1 @ state.B1p)
    N = state.C.T @ state.C
    return solve_stein(solve_spd(O1, A1), N, solve_spd(O1, rhs))


def update_B2(state, prob1, prob2, params):
    """Update of the second basis block: a plain SPD solve, turning into a
    Stein equation when the inverse-map regularizer couples B2 to D."""
    F1, F2 = prob1.F_red, prob2.F_red
    G2, W1, W2 = prob2.G_red, prob1.W_red, prob2.W_red
    rho = state.rho
    k = state.C.shape[0]
    G2B2p = G2 @ state.B2p

    A2 = F2 @ F2.T + rho * G2 + rho * (G2B2p @ G2B2p.T)
    rhs = (
        F2 @ F1.T @ state.B1 @ state.C.T
        + rho * G2B2p @ (np.eye(k) - state.P2).T
        + rho * (G2 @ (state.B2p - state.Q2p))
    )
    if params.mu_iso:
        W2B2pC = W2 @ state.B2p @ state.C
        A2 = A2 + params.mu_iso * (W2B2pC @ W2B2pC.T)
        S1 = state.B1.T @ W1 @ state.B1p
        rhs = rhs + params.mu_iso * (W2B2pC @ S1.T @ state.C.T)
    if params.mu_dir:
        rhs = rhs - 0.5 * params.mu_dir * (W2 @ state.B2p)
    if params.mu_cfid:
        rhs = rhs + params.mu_cfid * (F2 @ F1.T @ state.B1 @ state.D)
        M = solve_spd(A2, params.mu_cfid * (F2 @ F2.T))
        return solve_stein(M, state.D.T @ state.D, solve_spd(A2, rhs))
    return solve_spd(A2, rhs)


def update_auxiliaries(state, prob1, prob2, params):
    """Sequential update of both auxiliary blocks.

    B1' is always an SPD solve; B2' picks up a Stein-type term from the
    commutativity regularizer (C multiplies it from the right).
    """
    G1, G2 = prob1.G_red, prob2.G_red
    W1, W2 = prob1.W_red, prob2.W_red
    rho = state.rho
    k = state.C.shape[0]

    G1B1 = G1 @ state.B1
    A = rho * G1 + rho * (G1B1 @ G1B1.T)
    rhs = rho * G1B1 @ (np.eye(k) - state.P1) + rho * (G1 @ (state.B1 + state.Q1p))
    if params.mu_iso:
        W1B1Ct = W1 @ state.B1 @ state.C.T
        A = A + params.mu_iso * (W1B1Ct @ W1B1Ct.T)
        S2 = state.B2.T @ W2 @ state.B2p
        rhs = rhs + params.mu_iso * (W1B1Ct @ S2 @ state.C)
    if params.mu_dir:
        rhs = rhs - 0.5 * params.mu_dir * (W1 @ state.B1)
    B1p = solve_spd(A, rhs)

    G2B2 = G2 @ state.B2
    A = rho * G2 + rho * (G2B2 @ G2B2.T)
    rhs = rho * G2B2 @ (np.eye(k) - state.P2) + rho * (G2 @ (state.B2 + state.Q2p))
    if params.mu_dir:
        rhs = rhs - 0.5 * params.mu_dir * (W2 @ state.B2)
    if params.mu_iso:
        W2B2 = W2 @ state.B2
        S1 = state.B1.T @ W1 @ B1p  # uses the fresh B1'
        rhs = rhs + params.mu_iso * (W2B2 @ state.C @ S1 @ state.C.T)
        M = solve_spd(A, params.mu_iso * (W2B2 @ W2B2.T))
        B2p = solve_stein(M, state.C @ state.C.T, solve_spd(A, rhs))
    else:
        B2p = solve_spd(A, rhs)
    return B1p, B2p


def update_C(state, prob1, prob2, params):
    """Functional-map update.

    Without the commutativity regularizer this is the closed form
    ``C = (B2^T F2)(B1^T F1)^+``. With it, the exact first-order condition
    is a four-coefficient linear matrix equation in C, solved directly in
    vectorized form for moderate k and by Sylvester-splitting sweeps above.
    """
    X1 = state.B1.T @ prob1.F_red
    Y2 = state.B2.T @ prob2.F_red
    if not params.mu_iso:
        return Y2 @ pseudo_inverse(X1)

    mu = params.mu_iso
    S1 = state.B1.T @ prob1.W_red @ state.B1p
    S2 = state.B2.T @ prob2.W_red @ state.B2p
    Mr = X1 @ X1.T + mu * (S1 @ S1.T)
    L = mu * (S2.T @ S2)
    K0 = Y2 @ X1.T
    k = X1.shape[0]
    if k <= _KRON_LIMIT:
        eye = np.eye(k)
        op = (
            np.kron(Mr.T, eye)
            + np.kron(eye, L)
            - mu * np.kron(S1, S2)
            - mu * np.kron(S1.T, S2.T)
        )
        vec = K0.flatten(order="F")
        try:
            sol = np.linalg.solve(op, vec)
        except np.linalg.LinAlgError:
            sol = np.linalg.lstsq(op, vec, rcond=None)[0]
        return sol.reshape((k, k), order="F")

    # splitting sweep: dominant Sylvester part exact, small cross terms lagged
    C = state.C.copy()
    for _ in range(200):
        rhs = K0 + mu * (S2 @ C @ S1.T + S2.T @ C @ S1)
        C_new = sla.solve_sylvester(L, Mr, rhs)
        if np.linalg.norm(C_new - C) <= 1e-13 * max(1.0, np.linalg.norm(C_new)):
            return C_new
        C = C_new
    return C


def update_D(state, prob1, prob2):
    """Closed-form inverse-map update ``D = (B1^T F1)(B2^T F2)^+``."""
    X1 = state.B1.T @ prob1.F_red
    Y2 = state.B2.T @ prob2.F_red
    return X1 @ pseudo_inverse(Y2)


def update_duals(state, prob1, prob2):
    """Dual ascent on the orthogonality and equality constraints."""
    k = state.C.shape[0]
    P1 = state.P1 + state.B1.T @ prob1.G_red @ state.B1p - np.eye(k)
    P2 = state.P2 + state.B2.T @ prob2.G_red @ state.B2p - np.eye(k)
    Q1p = state.Q1p + state.B1 - state.B1p
    Q2p = state.Q2p + state.B2 - state.B2p
    return P1, P2, Q1p, Q2p


def update_rho(rho, duals, primal, dual):
    """Residual-balancing penalty update (factor 2, threshold 10).

    Scaled duals absorb 1/rho, so they are halved when rho doubles and
    doubled when it halves. Returns the new penalty and rescaled duals.
    """
    if primal > 10.0 * dual:
        return 2.0 * rho, tuple(d / 2.0 for d in duals)
    if dual > 10.0 * primal:
        return 0.5 * rho, tuple(2.0 * d for d in duals)
    return rho, duals


def residuals(state, prob1, prob2, B1p_old, B2p_old):
    """(primal, dual) residual norms: constraint violations and the
    penalty-scaled change of the auxiliary blocks."""
    k = state.C.shape[0]
    eye = np.eye(k)
    r1 = state.B1.T @ prob1.G_red @ state.B1p - eye
    r2 = state.B2.T @ prob2.G_red @ state.B2p - eye
    r3 = state.B1 - state.B1p
    r4 = state.B2 - state.B2p
    primal = np.sqrt(sum(float(np.sum(r * r)) for r in (r1, r2, r3, r4)))
    dual = state.rho * np.sqrt(
        float(np.sum((state.B1p - B1p_old) ** 2)) + float(np.sum((state.B2p - B2p_old) ** 2))
    )
    return primal, dual


def _stop_thresholds(state, prob1, prob2, params):
    k = state.C.shape[0]
    orth = np.sqrt(
        float(np.sum((state.B1.T @ prob1.G_red @ state.B1p) ** 2))
        + float(np.sum((state.B2.T @ prob2.G_red @ state.B2p) ** 2))
    )
    prim_scale = max(
        orth,
        np.sqrt(2.0 * k),
        np.sqrt(float(np.sum(state.B1**2)) + float(np.sum(state.B2**2))),
        np.sqrt(float(np.sum(state.B1p**2)) + float(np.sum(state.B2p**2))),
    )
    dual_scale = state.rho * np.sqrt(
        sum(float(np.sum(d**2)) for d in (state.P1, state.P2, state.Q1p, state.Q2p))
    )
    return (
        params.eps_abs + params.eps_rel * prim_scale,
        params.eps_abs + params.eps_rel * dual_scale,
    )


def init_state(prob1, prob2, params):
    """Initial state: reduced coordinates of the leading k POD modes (the
    first k columns of the identity in each subspace), C from its closed
    form, D as the pseudo-inverse of C, zero duals."""
    k = params.k
    if k > min(prob1.r, prob2.r):
        raise ValueError(
            f"basis size k={k} exceeds a reduced dimension (r1={prob1.r}, r2={prob2.r}); "
            "raise the POD coverage or supply more descriptors"
        )
    B1 = np.eye(prob1.r, k)
    B2 = np.eye(prob2.r, k)
    C = (B2.T @ prob2.F_red) @ pseudo_inverse(B1.T @ prob1.F_red)
    return SolverState(
        B1=B1, B2=B2, B1p=B1.copy(), B2p=B2.copy(),
        C=C, D=pseudo_inverse(C),
        P1=np.zeros((k, k)), P2=np.zeros((k, k)),
        Q1p=np.zeros((prob1.r, k)), Q2p=np.zeros((prob2.r, k)),
        rho=params.rho0,
    )


def _check_finite(state, iteration, limit):
    for block in (state.B1, state.B2, state.B1p, state.B2p, state.C, state.D,
                  state.P1, state.P2, state.Q1p, state.Q2p):
        if not np.all(np.isfinite(block)) or np.abs(block).max(initial=0.0) > limit:
            raise DivergenceError(iteration)


def run(prob1, prob2, params, init=None):
    """Run the ADMM scheme until the residual tolerances or max_iter.

    Parameters
    ----------
    prob1, prob2 : ReducedProblem
        Must share the descriptor count n.
    params : SolverParams
    init : SolverState, optional
        Warm start; defaults to the POD initialization.

    Returns
    -------
    state : SolverState
    record : ResidualRecord
    """
    if prob1.n != prob2.n:
        raise ValueError("the two reduced problems must share the descriptor count")
    state = init.copy() if init is not None else init_state(prob1, prob2, params)
    record = ResidualRecord()
    for it in range(params.max_iter):
        B1p_old, B2p_old = state.B1p, state.B2p
        state.B1 = update_B1(state, prob1, prob2, params)
        state.B2 = update_B2(state, prob1, prob2, params)
        state.B1p, state.B2p = update_auxiliaries(state, prob1, prob2, params)
        state.C = update_C(state, prob1, prob2, params)
        if params.mu_cfid:
            state.D = update_D(state, prob1, prob2)
        state.P1, state.P2, state.Q1p, state.Q2p = update_duals(state, prob1, prob2)

        primal, dual = residuals(state, prob1, prob2, B1p_old, B2p_old)
        record.append(total_energy(state, prob1, prob2, params), primal, dual, state.rho)
        state.iteration = it + 1
        _check_finite(state, it, params.divergence_limit)

        eps_pri, eps_dual = _stop_thresholds(state, prob1, prob2, params)
        if primal <= eps_pri and dual <= eps_dual:
            break
        if params.rho_update and (
            params.rho_freeze_after is None or it < params.rho_freeze_after
        ):
            duals = (state.P1, state.P2, state.Q1p, state.Q2p)
            state.rho, (state.P1, state.P2, state.Q1p, state.Q2p) = update_rho(
                state.rho, duals, primal, dual
            )
    return state, record


def finalize(state, prob1, prob2, mass1, mass2):
    """Lift the designed bases to vertex space, restore exact
    G-orthonormality, and recompute C in the corrected bases.

    Returns
    -------
    (B1_full, B2_full, C)
    """
    B1_full = g_orthonormalize(lift(prob1.U, state.B1), mass1)
    B2_full = g_orthonormalize(lift(prob2.U, state.B2), mass2)
    # bases stay inside their POD subspaces, so B^T F can be formed
    # from reduced coordinates
    X1 = (prob1.U.modes.T @ B1_full).T @ prob1.F_red
    Y2 = (prob2.U.modes.T @ B2_full).T @ prob2.F_red
    C = Y2 @ pseudo_inverse(X1)
    return B1_full, B2_full, C
