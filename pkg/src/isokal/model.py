"""System descriptions and state-transition algebra.

A system is

    x(k+1) = A_{k+1} x(k),          x(0) = x0,
    y(k)   = H_k x(k) + v_k,        v_k ~ N(0, R_k),

with invertible dynamics A_k (d x d), observation operators H_k (m x d,
m <= d) and SPD noise covariances R_k bounded below by sigma^2 I > 0.
Dynamics/observation/noise may each be constant (LTI) or a finite explicit
sequence (LTV).
"""

from dataclasses import dataclass

import numpy as np

from ._linalg import asymmetry, min_max_singular, readonly, sym_eigvalsh

# A_k invertibility: smallest singular value must exceed this fraction of the
# largest (condition estimate below 1e12).
_INVERTIBILITY_RTOL = 1e-12
_SYMMETRY_RTOL = 1e-12
DEFAULT_SIGMA2_FLOOR = 1e-15


class ConfigError(ValueError):
    """Invalid system configuration; ``path`` names the offending field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class HorizonError(ValueError):
    """A step index beyond the finite horizon of an LTV sequence."""


def _as_array(value, path):
    try:
        return np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, f"not a numeric array: {exc}") from None


def _as_square(a, path):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ConfigError(path, f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ConfigError(path, "entries must be finite")
    return a


def _check_invertible(a, path):
    smin, smax = min_max_singular(a)
    if smax == 0.0 or smin <= _INVERTIBILITY_RTOL * smax:
        raise ConfigError(path, "matrix is numerically singular (condition estimate > 1e12)")


def _check_noise_cov(r, m, floor, path):
    r = _as_square(r, path)
    if r.shape[0] != m:
        raise ConfigError(path, f"expected {m}x{m}, got {r.shape[0]}x{r.shape[0]}")
    if asymmetry(r) > _SYMMETRY_RTOL:
        raise ConfigError(path, "covariance is not symmetric")
    lam_min = sym_eigvalsh(r)[0]
    if lam_min < floor:
        raise ConfigError(path, f"covariance not positive definite above the floor "
                                f"(lambda_min={lam_min:.3e} < {floor:.1e})")
    return r


class SystemModel:
    """Immutable system description (dynamics, observation, noise).

    Parameters
    ----------
    dynamics : (d, d) array or sequence of (d, d) arrays
        A single matrix means LTI; a sequence [A_1, A_2, ...] means LTV,
        where entry t advances step t -> t+1.
    observation : (m, d) array or sequence of (m, d) arrays
        A single matrix means LTI; sequence entry t is H_t.
    noise : float or sequence of (m, m) arrays
        A scalar sigma2 > 0 means isotropic R_k = sigma2 * I for all k;
        a sequence gives per-step covariances [R_0, R_1, ...].
    sigma2_floor : float
        Models whose noise covariances have eigenvalues below this are
        rejected.
    """

    def __init__(self, dynamics, observation, noise, sigma2_floor=DEFAULT_SIGMA2_FLOOR):
        dyn = _as_array(dynamics, "dynamics")
        self.lti_dynamics = dyn.ndim == 2
        if self.lti_dynamics:
            a = _as_square(dyn, "dynamics.A")
            _check_invertible(a, "dynamics.A")
            self._a = readonly(a)
            self._a_seq = None
        else:
            if dyn.ndim != 3 or dyn.shape[0] == 0:
                raise ConfigError("dynamics", "pass one d x d matrix or a non-empty sequence of them")
            seq = [_as_square(m, f"dynamics.A_seq[{t}]") for t, m in enumerate(dyn)]
            for t, m in enumerate(seq):
                _check_invertible(m, f"dynamics.A_seq[{t}]")
            self._a = None
            self._a_seq = tuple(readonly(m) for m in seq)

        d = (self._a if self.lti_dynamics else self._a_seq[0]).shape[0]
        self.d = int(d)

        obs = _as_array(observation, "observation")
        self.lti_observation = obs.ndim == 2
        if self.lti_observation:
            self._h = readonly(self._check_obs(obs, "observation.H"))
            self._h_seq = None
        else:
            if obs.ndim != 3 or obs.shape[0] == 0:
                raise ConfigError("observation", "pass one m x d matrix or a non-empty sequence of them")
            seq = [self._check_obs(m, f"observation.H_seq[{t}]") for t, m in enumerate(obs)]
            self._h = None
            self._h_seq = tuple(readonly(m) for m in seq)
        self.m = int((self._h if self.lti_observation else self._h_seq[0]).shape[0])

        self.sigma2_floor = float(sigma2_floor)
        if np.isscalar(noise):
            sigma2 = float(noise)
            if not np.isfinite(sigma2) or sigma2 < self.sigma2_floor:
                raise ConfigError("noise.sigma2",
                                  f"must be >= {self.sigma2_floor:.1e}, got {sigma2!r}")
            self.isotropic = True
            self.sigma2 = sigma2
            self._r_seq = None
        else:
            rs = _as_array(noise, "noise")
            if rs.ndim != 3 or rs.shape[0] == 0:
                raise ConfigError("noise", "pass a scalar sigma2 or a non-empty sequence of R matrices")
            seq = [_check_noise_cov(r, self.m, self.sigma2_floor, f"noise.R_seq[{t}]")
                   for t, r in enumerate(rs)]
            self.isotropic = False
            self.sigma2 = None
            self._r_seq = tuple(readonly(r) for r in seq)

    def _check_obs(self, h, path):
        h = np.asarray(h, dtype=float)
        if h.ndim != 2:
            raise ConfigError(path, f"expected a 2-d matrix, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise ConfigError(path, "entries must be finite")
        m, d = h.shape
        if d != self.d:
            raise ConfigError(path, f"expected {m}x{self.d}, got {m}x{d}")
        if m > d:
            raise ConfigError(path, f"observation dimension m={m} exceeds state dimension d={d}")
        return h

    @property
    def is_lti(self):
        """Constant dynamics and observation (noise may still vary per step)."""
        return self.lti_dynamics and self.lti_observation

    @property
    def horizon(self):
        """Number of usable observation steps, or None when unlimited.

        Step k is usable when H_k, R_k and the transitions A_1..A_k exist.
        """
        limits = []
        if not self.lti_dynamics:
            limits.append(len(self._a_seq) + 1)
        if not self.lti_observation:
            limits.append(len(self._h_seq))
        if not self.isotropic:
            limits.append(len(self._r_seq))
        return min(limits) if limits else None

    def _check_horizon(self, k):
        if k < 0:
            raise ValueError(f"step index must be non-negative, got {k}")
        h = self.horizon
        if h is not None and k >= h:
            raise HorizonError(f"step {k} exceeds the model horizon ({h} observation steps)")

    def A_at(self, k):
        """Dynamics matrix advancing step k-1 -> k (k >= 1)."""
        if k < 1:
            raise ValueError(f"dynamics index must be >= 1, got {k}")
        if self.lti_dynamics:
            return self._a
        if k > len(self._a_seq):
            raise HorizonError(f"dynamics step {k} exceeds the LTV horizon ({len(self._a_seq)})")
        return self._a_seq[k - 1]

    def H_at(self, k):
        """Observation operator at step k >= 0."""
        if k < 0:
            raise ValueError(f"observation index must be non-negative, got {k}")
        if self.lti_observation:
            return self._h
        if k >= len(self._h_seq):
            raise HorizonError(f"observation step {k} exceeds the LTV horizon ({len(self._h_seq)})")
        return self._h_seq[k]

    def R_at(self, k):
        """Noise covariance at step k >= 0."""
        if k < 0:
            raise ValueError(f"noise index must be non-negative, got {k}")
        if self.isotropic:
            return self.sigma2 * np.eye(self.m)
        if k >= len(self._r_seq):
            raise HorizonError(f"noise step {k} exceeds the LTV horizon ({len(self._r_seq)})")
        return self._r_seq[k]

    def __repr__(self):
        kind = "LTI" if self.is_lti else "LTV"
        noise = f"sigma2={self.sigma2}" if self.isotropic else "per-step R"
        return f"SystemModel({kind}, d={self.d}, m={self.m}, {noise})"


@dataclass(frozen=True)
class TransitionMatrix:
    """Product of dynamics matrices carrying state from ``from_step`` to ``to_step``."""

    value: np.ndarray
    from_step: int
    to_step: int


def transition(model, k, j):
    """State transition from step j to step k.

    Returns the ordered product A_k A_{k-1} ... A_{j+1} for k > j, the
    identity for k = j, and the inverse transition for k < j (computed by a
    linear solve against the forward product, not an explicit inverse).
    """
    if k < 0 or j < 0:
        raise ValueError("step indices must be non-negative")
    lo, hi = (j, k) if k >= j else (k, j)
    value = np.eye(model.d)
    for i in range(lo + 1, hi + 1):
        value = model.A_at(i) @ value
    if k < j:
        value = np.linalg.solve(value, np.eye(model.d))
    return TransitionMatrix(value=value, from_step=j, to_step=k)


def observed_evolution(model, k):
    """The operator H_k A(k,0) mapping the initial state to observation k."""
    model._check_horizon(k)
    return model.H_at(k) @ transition(model, k, 0).value


def observed_evolution_sequence(model, count):
    """Yield H_k A(k,0) for k = 0..count-1, one dynamics step at a time.

    For fully LTI models this is the running product H, HA, HA^2, ...;
    otherwise the transition A(k,0) is accumulated and applied to H_k.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    if count == 0:
        return
    if model.is_lti:
        h_tilde = model.H_at(0)
        for k in range(count):
            yield h_tilde
            if k + 1 < count:
                h_tilde = h_tilde @ model.A_at(k + 1)
    else:
        phi = np.eye(model.d)
        for k in range(count):
            yield model.H_at(k) @ phi
            if k + 1 < count:
                phi = model.A_at(k + 1) @ phi


def advance_observed_evolution(model, h_tilde_prev, k):
    """H_k A(k,0) given H_{k-1} A(k-1,0).

    Fully LTI models advance by one right-multiplication; anything
    time-varying falls back to the direct product (the new dynamics factor
    enters on the left of A(k-1,0), so no right-multiplication recurrence
    exists).
    """
    if model.is_lti:
        return h_tilde_prev @ model.A_at(k)
    return observed_evolution(model, k)


def _matrix_field(doc, path):
    cur = doc
    for part in path.split("."):
        if not isinstance(cur, dict) or part not in cur:
            raise ConfigError(path, "missing required field")
        cur = cur[part]
    return cur


def load_model(doc):
    """Build a validated SystemModel from a parsed JSON config document.

    Expected top-level keys: ``d``, ``m``, ``dynamics``, ``observation``,
    ``noise``; see the README for the full schema.  Violations raise
    ConfigError carrying the offending field path.
    """
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    for key in ("d", "m", "dynamics", "observation", "noise"):
        if key not in doc:
            raise ConfigError(key, "missing required field")
    d, m = doc["d"], doc["m"]
    if not isinstance(d, int) or d < 1:
        raise ConfigError("d", f"must be a positive integer, got {d!r}")
    if not isinstance(m, int) or m < 1:
        raise ConfigError("m", f"must be a positive integer, got {m!r}")
    if m > d:
        raise ConfigError("m", f"observation dimension m={m} exceeds state dimension d={d}")

    kind = _matrix_field(doc, "dynamics.kind")
    if kind == "lti":
        dynamics = _as_array(_matrix_field(doc, "dynamics.A"), "dynamics.A")
    elif kind == "ltv":
        dynamics = _as_array(_matrix_field(doc, "dynamics.A_seq"), "dynamics.A_seq")
        if dynamics.ndim != 3:
            raise ConfigError("dynamics.A_seq", f"expected a sequence of matrices, got shape {dynamics.shape}")
    else:
        raise ConfigError("dynamics.kind", f"must be 'lti' or 'ltv', got {kind!r}")

    kind = _matrix_field(doc, "observation.kind")
    if kind == "lti":
        observation = _as_array(_matrix_field(doc, "observation.H"), "observation.H")
    elif kind == "ltv":
        observation = _as_array(_matrix_field(doc, "observation.H_seq"), "observation.H_seq")
        if observation.ndim != 3:
            raise ConfigError("observation.H_seq", f"expected a sequence of matrices, got shape {observation.shape}")
    else:
        raise ConfigError("observation.kind", f"must be 'lti' or 'ltv', got {kind!r}")

    kind = _matrix_field(doc, "noise.kind")
    if kind == "isotropic":
        noise = _matrix_field(doc, "noise.sigma2")
        if not isinstance(noise, (int, float)) or isinstance(noise, bool):
            raise ConfigError("noise.sigma2", f"must be a number, got {noise!r}")
        noise = float(noise)
    elif kind == "per_step":
        noise = _as_array(_matrix_field(doc, "noise.R_seq"), "noise.R_seq")
        if noise.ndim != 3:
            raise ConfigError("noise.R_seq", f"expected a sequence of matrices, got shape {noise.shape}")
    else:
        raise ConfigError("noise.kind", f"must be 'isotropic' or 'per_step', got {kind!r}")

    model = SystemModel(dynamics, observation, noise)
    if model.d != d:
        raise ConfigError("d", f"declared d={d} but matrices have d={model.d}")
    if model.m != m:
        raise ConfigError("m", f"declared m={m} but matrices have m={model.m}")
    return model
