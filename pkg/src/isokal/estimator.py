"""Recursive minimum-variance estimation of the initial state.

Each new observation y(k-1) refines the running estimate of x0:

    K_k    = P_{k-1} H~_{k-1}^* (H~_{k-1} P_{k-1} H~_{k-1}^* + R_{k-1})^-1
    x^_k   = x^_{k-1} + K_k (y(k-1) - H~_{k-1} x^_{k-1})
    P_k    = (I - K_k H~_{k-1}) P_{k-1} (I - K_k H~_{k-1})^* + K_k R_{k-1} K_k^*

where H~_k = H_k A(k,0) observes the evolved initial state.  The covariance
is propagated in the Joseph form above (PSD-preserving under rounding); the
algebraically equal short form (I - K H~) P is asserted against it in debug
builds.  ``batch_wls`` solves the same weighted least-squares problem in one
shot from the normal equations and serves as an independent cross-check.

Adjoints are written as transposes: all data is real, and a complex
extension would only swap in conjugate transposes.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from ._linalg import readonly, spd_factor, spd_inverse, spectral_norm, symmetrize
from .model import HorizonError, advance_observed_evolution, observed_evolution_sequence

# Stored covariances may carry rounding-level negative eigenvalues; anything
# below -PSD_SLACK * trace(P) signals a genuinely corrupted state.
PSD_SLACK = 1e-12


@dataclass(frozen=True)
class EstimatorState:
    """Filter state after consuming ``step`` observations.

    x_hat is the current estimate of the initial state, P its error
    covariance, and H_tilde_next the observer H~_step that applies to the
    next observation y(step).
    """

    step: int
    x_hat: np.ndarray
    P: np.ndarray
    # None once the model's finite data horizon is exhausted.
    H_tilde_next: np.ndarray | None


@dataclass(frozen=True)
class GainMatrix:
    """Gain K_step+1 together with the innovation covariance it inverts."""

    value: np.ndarray
    innovation_cov: np.ndarray


def _prior(model, x_hat0, P0):
    """Normalize (x_hat0, P0) inputs: None -> zeros, scalar p -> p * I."""
    d = model.d
    if x_hat0 is None:
        x_hat0 = np.zeros(d)
    x_hat0 = np.asarray(x_hat0, dtype=float).reshape(-1)
    if x_hat0.shape != (d,):
        raise ValueError(f"x_hat0 has length {x_hat0.shape[0]}, model state dimension is {d}")
    if np.isscalar(P0):
        P0 = float(P0) * np.eye(d)
    P0 = np.asarray(P0, dtype=float)
    if P0.shape != (d, d):
        raise ValueError(f"P0 has shape {P0.shape}, expected ({d}, {d})")
    return x_hat0, P0


def init(model, x_hat0, P0):
    """Initial filter state from prior guesses for x0 and its covariance.

    P0 must be symmetric positive definite; a scalar p is shorthand for
    p * I, and x_hat0=None for the zero vector.
    """
    x_hat0, P0 = _prior(model, x_hat0, P0)
    if np.max(np.abs(P0 - P0.T)) > 1e-12 * max(np.max(np.abs(P0)), 1e-300):
        raise np.linalg.LinAlgError("P0 is not symmetric")
    lam = np.linalg.eigvalsh(symmetrize(P0))
    if lam[0] <= 0.0:
        raise np.linalg.LinAlgError(
            f"P0 is not positive definite (lambda_min={lam[0]:.3e})")
    return EstimatorState(step=0, x_hat=readonly(x_hat0), P=readonly(symmetrize(P0)),
                          H_tilde_next=readonly(model.H_at(0)))


def _psd_split(P):
    """Eigendecomposition-based PSD factor F with P = F F^T (up to clipping).

    Rounding can leave slightly negative eigenvalues in a propagated
    covariance; they are clipped to zero.  Eigenvalues below the PSD_SLACK
    budget mean the state is corrupted and raise instead.
    """
    w, u = np.linalg.eigh(symmetrize(P))
    scale = max(float(np.trace(P)), 1e-300)
    if w[0] < -PSD_SLACK * scale:
        raise np.linalg.LinAlgError(
            f"covariance lost positive semidefiniteness "
            f"(lambda_min={w[0]:.3e}, trace={scale:.3e})")
    w = np.clip(w, 0.0, None)
    return w, u, u * np.sqrt(w)


def _gain_pieces(P, h_tilde, R):
    """Gain, innovation covariance and the PSD factor of P used to build them.

    The innovation covariance is assembled as a Gram product
    (H~ F)(H~ F)^T + R so it cannot drop below R through cancellation, and
    is then factorized (Cholesky); its explicit inverse is never formed.
    """
    R = np.asarray(R, dtype=float)
    m = h_tilde.shape[0]
    if R.shape != (m, m):
        raise ValueError(f"noise covariance has shape {R.shape}, expected ({m}, {m})")
    w, u, f = _psd_split(P)
    hf = h_tilde @ f
    sigma = symmetrize(hf @ hf.T + R)
    p_ht = (u * w) @ (h_tilde @ u).T
    factor = spd_factor(sigma, "innovation covariance")
    gain = cho_solve(factor, p_ht.T).T
    return gain, sigma, f


def gain(state, R_prev):
    """Gain applied to the innovation from observation y(state.step)."""
    if state.H_tilde_next is None:
        raise HorizonError(f"no observation available at step {state.step}")
    value, sigma, _ = _gain_pieces(state.P, state.H_tilde_next, R_prev)
    return GainMatrix(value=readonly(value), innovation_cov=readonly(sigma))


def step(state, y_prev, R_prev, model):
    """Consume observation y(state.step) and return the refined state.

    The covariance update is the Joseph form, evaluated as a sum of two
    Gram products so the result stays PSD at rounding level even when P
    spans many orders of magnitude.
    """
    d = model.d
    if state.H_tilde_next is None:
        raise HorizonError(f"no observation available at step {state.step}")
    y_prev = np.asarray(y_prev, dtype=float).reshape(-1)
    h_tilde = state.H_tilde_next
    if y_prev.shape != (h_tilde.shape[0],):
        raise ValueError(f"observation has length {y_prev.shape[0]}, expected {h_tilde.shape[0]}")
    R_prev = np.asarray(R_prev, dtype=float)

    k_gain, _, f = _gain_pieces(state.P, h_tilde, R_prev)
    x_next = state.x_hat + k_gain @ (y_prev - h_tilde @ state.x_hat)

    mix = np.eye(d) - k_gain @ h_tilde
    mf = mix @ f
    kl = k_gain @ np.linalg.cholesky(symmetrize(R_prev))
    p_next = symmetrize(mf @ mf.T + kl @ kl.T)

    if __debug__:
        p_short = mix @ state.P
        assert spectral_norm(p_next - symmetrize(p_short)) <= 1e-8 * (1.0 + spectral_norm(p_next)), \
            "Joseph and short-form covariance updates disagree"

    k_next = state.step + 1
    try:
        h_next = readonly(advance_observed_evolution(model, h_tilde, k_next))
    except HorizonError:
        h_next = None
    return EstimatorState(step=k_next, x_hat=readonly(x_next), P=readonly(p_next),
                          H_tilde_next=h_next)


def _as_observations(observations, m):
    obs = np.asarray(observations, dtype=float)
    if obs.size == 0:
        return np.zeros((0, m))
    if obs.ndim == 1:
        obs = obs.reshape(-1, 1) if m == 1 else obs.reshape(1, -1)
    if obs.ndim != 2 or obs.shape[1] != m:
        raise ValueError(f"observations must be rows of length m={m}, got shape {obs.shape}")
    return obs


def run(model, x_hat0, P0, observations):
    """Fold ``step`` over observations y(0), y(1), ...

    Returns the full list of states [state_0, ..., state_N] so every
    intermediate (real-time) estimate is available; an empty observation
    sequence returns just the initial state.
    """
    observations = _as_observations(observations, model.m)
    states = [init(model, x_hat0, P0)]
    for t, y in enumerate(observations):
        states.append(step(states[-1], y, model.R_at(t), model))
    return states


def covariance_sequence(model, P0, k_max):
    """The deterministic covariance trajectory [P_0, ..., P_k_max].

    P_k does not depend on the observed values, only on the model and P0,
    so the recursion is run on zero observations.
    """
    zeros = np.zeros((k_max, model.m))
    return [s.P for s in run(model, None, P0, zeros)]


def batch_wls(model, x_hat0, P0, observations):
    """One-shot weighted least-squares estimate of x0 from all observations.

    Minimizes

        (x - x^_0)^T P0^-1 (x - x^_0)
            + sum_j (y(j) - H~_j x)^T R_j^-1 (y(j) - H~_j x)

    by assembling the normal equations
    (P0^-1 + O(N,0)) x = P0^-1 x^_0 + sum_j H~_j^T R_j^-1 y(j) and
    factorizing the SPD left-hand side.  Observers H~_j are recomputed
    incrementally; the observation history is consumed in one pass.
    """
    x_hat0, P0 = _prior(model, x_hat0, P0)
    observations = _as_observations(observations, model.m)
    n = observations.shape[0]

    p0_inv = spd_inverse(P0, "P0")
    lhs = p0_inv.copy()
    rhs = p0_inv @ x_hat0
    for j, h_tilde in enumerate(observed_evolution_sequence(model, n)):
        r_factor = spd_factor(model.R_at(j), f"R_{j}")
        w = cho_solve(r_factor, h_tilde)
        lhs = symmetrize(lhs + h_tilde.T @ w)
        rhs = rhs + h_tilde.T @ cho_solve(r_factor, observations[j])
    try:
        factor = spd_factor(lhs, "normal matrix")
    except np.linalg.LinAlgError:
        raise np.linalg.LinAlgError(
            "normal matrix is numerically singular; check that P0 is positive definite")
    return cho_solve(factor, rhs)
