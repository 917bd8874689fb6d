"""Trajectory simulation, seeded Monte Carlo ensembles and bundled examples.

Reproducibility contract: all randomness flows through numpy's PCG64
``Generator``.  Trial t of an ensemble seeded with S uses the stream
``default_rng(SeedSequence((S, t)))``, so results are identical regardless
of execution order or thread count.  Within one trial the draws are
consumed in a fixed order: first the initial-guess perturbation (when the
ensemble is prior-calibrated), then one standard-normal m-vector per
simulated step.
"""

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import estimator
from ._linalg import symmetrize
from .model import SystemModel, observed_evolution_sequence

THREADS_ENV = "ISOKAL_THREADS"


@dataclass(frozen=True)
class TrialResult:
    """Per-step error and covariance diagnostics for one ensemble trial."""

    trial_id: int
    seed_key: tuple
    err_sq: np.ndarray        # ||e_k||^2, k = 0..T
    err_inf: np.ndarray       # ||x^_k - x0||_inf
    trace_p: np.ndarray       # trace(P_k)
    p_eigs: np.ndarray        # eigenvalues of P_k, descending, (T+1, d)


@dataclass(frozen=True)
class EnsembleStats:
    """Sample statistics across trials: empirical MSE and bias per step."""

    n_trials: int
    mse: np.ndarray           # mean ||e_k||^2
    bias: np.ndarray          # mean e_k, (T+1, d)
    mean_trace_p: np.ndarray

    @property
    def bias_norm(self):
        return np.linalg.norm(self.bias, axis=1)


def trial_seed(master_seed, trial_id):
    """The documented per-trial seeding rule: SeedSequence((master, trial))."""
    return np.random.SeedSequence((int(master_seed), int(trial_id)))


def simulate(model, x0, T, seed, noiseless=False):
    """Observations y(k) = H~_k x0 + v_k for k = 0..T-1, shape (T, m).

    Noise is drawn per step as L_k g with L_k the lower Cholesky factor of
    R_k and g standard normal; the sequence is fully determined by
    ``seed`` (an int, SeedSequence or Generator).  ``noiseless`` skips the
    noise entirely and returns the exact evolved observations.
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape != (model.d,):
        raise ValueError(f"x0 has length {x0.shape[0]}, model state dimension is {model.d}")
    rng = np.random.default_rng(seed)
    out = np.empty((T, model.m))
    chol = None
    for k, h_tilde in enumerate(observed_evolution_sequence(model, T)):
        out[k] = h_tilde @ x0
        if not noiseless:
            if chol is None or not model.isotropic:
                chol = np.linalg.cholesky(symmetrize(model.R_at(k)))
            out[k] += chol @ rng.standard_normal(model.m)
    return out


def _thread_count():
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    if n == 0:
        return os.cpu_count() or 1
    return max(1, n)


def _run_trial(model, x0, x_hat0, P0, T, master_seed, t, calibrated, noiseless):
    rng = np.random.default_rng(trial_seed(master_seed, t))
    guess = np.asarray(x_hat0, dtype=float)
    if calibrated:
        guess = guess + np.linalg.cholesky(symmetrize(P0)) @ rng.standard_normal(model.d)
    obs = simulate(model, x0, T, rng, noiseless=noiseless)
    states = estimator.run(model, guess, P0, obs)
    err = np.stack([s.x_hat - x0 for s in states])
    result = TrialResult(
        trial_id=t,
        seed_key=(int(master_seed), t),
        err_sq=np.einsum("kd,kd->k", err, err),
        err_inf=np.max(np.abs(err), axis=1),
        trace_p=np.array([float(np.trace(s.P)) for s in states]),
        p_eigs=np.stack([np.linalg.eigvalsh(s.P)[::-1] for s in states]),
    )
    return result, err


def monte_carlo(model, x0, x_hat0, P0, T, trials, seed, calibrated=True,
                noiseless=False):
    """Run ``trials`` independent simulate+estimate pairs and aggregate.

    With ``calibrated`` (the default) each trial perturbs the initial guess
    by a draw from N(0, P0), so the ensemble's initial error actually has
    covariance P0 and trace(P_k) is comparable to the empirical
    mse - ||bias||^2.  A fixed guess across trials (calibrated=False)
    measures the error conditional on that guess instead, for which the
    covariance comparison does not apply.

    Parallelism across trials is capped by the ISOKAL_THREADS environment
    variable (unset/1 = sequential, 0 = auto); aggregation is by trial
    index, so the output never depends on scheduling.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    x_hat0, P0 = estimator._prior(model, x_hat0, P0)

    def work(t):
        return _run_trial(model, x0, x_hat0, P0, T, seed, t, calibrated, noiseless)

    n_threads = _thread_count()
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            pairs = list(pool.map(work, range(trials)))
    else:
        pairs = [work(t) for t in range(trials)]

    results = [r for r, _ in pairs]
    errors = np.stack([e for _, e in pairs])          # (trials, T+1, d)
    stats = EnsembleStats(
        n_trials=trials,
        mse=np.stack([r.err_sq for r in results]).mean(axis=0),
        bias=errors.mean(axis=0),
        mean_trace_p=np.stack([r.trace_p for r in results]).mean(axis=0),
    )
    return stats, results


# Bundled demonstration systems.  sigma is quoted as a noise level; by
# default it is read as a standard deviation (R = sigma^2 I), and
# sigma_is_variance flips that reading (R = sigma I).
_EXAMPLES = {
    "example1": dict(
        A=[[1.99, -0.32, 0.0, 0.07],
           [0.43, 1.17, 0.02, 0.0],
           [0.13, -0.09, 1.52, -0.13],
           [0.28, -0.14, 0.03, 1.22]],
        H=[[1.0, 0.0, 0.0, 0.0],
           [0.0, 0.0, 1.0, 0.0]],
        sigma=0.01,
        x0=[0.2, 0.4, 0.5, 0.3],
        x_hat0=[0.376, 0.502, 0.421, 0.366],
        p0_scale=1e-2,
        snapshots=(5, 10, 40),
    ),
    "example2": dict(
        A=[[1.0, -0.5],
           [-0.5, 1.0]],
        H=[[0.0, 1.0]],
        sigma=0.001,
        x0=[0.83053274, 0.35472554],
        x_hat0=[0.99065169, 0.19889222],
        p0_scale=1e-2,
        snapshots=(2, 5, 20),
    ),
}

EXAMPLE_NAMES = tuple(sorted(_EXAMPLES))
EXAMPLE_STEPS = 40


def example_system(which, sigma_is_variance=False):
    """One of the bundled demonstration systems.

    Returns (model, x0, x_hat0, P0, snapshot_steps).  ``which`` is
    "example1" (all dynamics eigenvalues outside the unit circle) or
    "example2" (eigenvalues straddling it).
    """
    if which not in _EXAMPLES:
        raise ValueError(f"unknown example {which!r}; expected one of {EXAMPLE_NAMES}")
    entry = _EXAMPLES[which]
    sigma2 = entry["sigma"] if sigma_is_variance else entry["sigma"] ** 2
    model = SystemModel(np.array(entry["A"]), np.array(entry["H"]), float(sigma2))
    d = model.d
    return (model, np.array(entry["x0"]), np.array(entry["x_hat0"]),
            entry["p0_scale"] * np.eye(d), entry["snapshots"])


def format_float(x):
    """Shortest round-trip decimal form; fixed across platforms for a value."""
    return repr(float(x))


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else format_float(v) for v in row])


def write_observations_csv(path, observations):
    m = observations.shape[1]
    header = ["k"] + [f"y_{i}" for i in range(m)]
    rows = [[str(k)] + [y for y in obs] for k, obs in enumerate(observations)]
    write_csv(path, header, rows)


def read_observations_csv(path):
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "k":
            raise ValueError(f"{path}: expected an observations CSV with a 'k' first column")
        rows = [[float(v) for v in row[1:]] for row in reader if row]
    m = len(header) - 1
    out = np.array(rows, dtype=float).reshape(-1, m)
    return out


def write_estimates_csv(path, states, truth=None):
    d = states[0].x_hat.shape[0]
    header = ["k"] + [f"xhat_{i}" for i in range(d)] + ["trace_P"]
    if truth is not None:
        header.append("err_norm")
    rows = []
    for s in states:
        row = [str(s.step)] + list(s.x_hat) + [float(np.trace(s.P))]
        if truth is not None:
            row.append(float(np.linalg.norm(s.x_hat - truth)))
        rows.append(row)
    write_csv(path, header, rows)


def reproduce_example(which, trials, seed, out_dir, sigma_is_variance=False):
    """Run one bundled example end to end and write its CSV file set.

    Writes into ``out_dir``:

    - snapshots.csv: the showcase estimate at the example's snapshot steps
      next to the true initial state;
    - estimates.csv: the full showcase trajectory (the example's exact
      initial guess, noise stream (seed, trials));
    - mse.csv: per-step empirical MSE, bias norm and mean trace(P_k) over
      the prior-calibrated ensemble (k = 1..T);
    - p_eigs.csv: eigenvalues of P_k, descending, k = 0..T.

    Returns the dict of written paths.  Identical arguments produce
    byte-identical files.
    """
    model, x0, x_hat0, P0, snapshots = example_system(which, sigma_is_variance)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    T = EXAMPLE_STEPS
    d = model.d

    stats, results = monte_carlo(model, x0, x_hat0, P0, T, trials, seed)

    # Showcase run: the example's exact initial guess on its own noise stream.
    showcase_obs = simulate(model, x0, T, trial_seed(seed, trials))
    showcase = estimator.run(model, x_hat0, P0, showcase_obs)

    paths = {name: out_dir / f"{name}.csv"
             for name in ("snapshots", "estimates", "mse", "p_eigs")}

    write_estimates_csv(paths["estimates"], showcase, truth=x0)

    snap_header = ["k"] + [f"xhat_{i}" for i in range(d)] + [f"xtrue_{i}" for i in range(d)]
    snap_rows = [[str(k)] + list(showcase[k].x_hat) + list(x0) for k in snapshots]
    write_csv(paths["snapshots"], snap_header, snap_rows)

    bias_norm = stats.bias_norm
    mse_rows = [[str(k), stats.mse[k], bias_norm[k], stats.mean_trace_p[k]]
                for k in range(1, T + 1)]
    write_csv(paths["mse"], ["k", "mse", "bias_norm", "mean_trace_P"], mse_rows)

    p_eigs = results[0].p_eigs
    eig_rows = [[str(k)] + list(p_eigs[k]) for k in range(T + 1)]
    write_csv(paths["p_eigs"], ["k"] + [f"eig_{i}" for i in range(1, d + 1)], eig_rows)

    return {name: str(p) for name, p in paths.items()}
