"""Is the estimation error guaranteed to behave?

The expected estimation error follows its own linear time-varying system
z(k) = Psi_k z(k-1).  This script inspects those transitions, watches the
Lyapunov function z^T P_k^-1 z descend, classifies two contrasting
systems, and uses singular values of matrix powers to locate eigenvalue
magnitudes without an eigensolver.

Run with:  python demos/03_error_dynamics_stability.py
"""

import numpy as np

from isokal import analyze_stability, classify, gelfand_diagnostic
from isokal.estimator import covariance_sequence
from isokal.harness import example_system
from isokal.stability import lyapunov_value, psi_transition

np.set_printoptions(precision=5, suppress=True)

# --- 1. Two systems, two verdicts -----------------------------------------

model_fast, *_ = example_system("example1")   # all |eig(A)| > 1
model_slow, *_ = example_system("example2")   # |eig(A)| = 0.5 and 1.5

print("all eigenvalues outside the unit circle ->", classify(model_fast))
print("one eigenvalue inside the unit circle   ->", classify(model_slow))

# Lyapunov stability always holds (the error cannot blow up); asymptotic
# decay of the error's expectation needs every |eig(A)| > 1, because only
# then does information about every direction keep accumulating.

# --- 2. The error transitions come straight from the covariances ----------

P0 = 1e-2 * np.eye(2)
covs = covariance_sequence(model_slow, P0, 12)
psi_3 = psi_transition(covs[3], covs[2])
print("\nPsi_3 (= P_3 P_2^-1):\n", psi_3)
print("||Psi(12,0)|| =", np.linalg.norm(covs[12] @ np.linalg.inv(covs[0]), 2))

# --- 3. Watching the Lyapunov function descend ----------------------------

z = np.array([1.0, 1.0]) / np.sqrt(2.0)
print("\n  k    V(k, z(k))")
for k in range(0, 13):
    if k > 0:
        z = psi_transition(covs[k], covs[k - 1]) @ z
    if k in (0, 1, 2, 4, 8, 12):
        print(f"  {k:2d}   {lyapunov_value(covs[k], z):.6f}")

# --- 4. Full report in one call --------------------------------------------

report = analyze_stability(model_fast, P0=1e-2, k_max=40)
alpha, beta = report.exp_fit
print(f"\nfast system: classification = {report.classification}")
print(f"  ||Psi(k,0)|| fit ~ {alpha:.3g} * exp(-{beta:.3f} k)")
print(f"  ||P_40|| / ||P_0|| = {report.covariance_norm_trace[-1] / report.covariance_norm_trace[0]:.2e}")
print(f"  Lyapunov trace monotone: {report.lyapunov_monotone}")

# --- 5. Eigenvalue magnitudes from matrix powers ---------------------------
#
# s_i(A^n)^(1/n) converges to |eig_i(A)|, so singular values of powers
# bracket the spectrum even for non-normal matrices.  Powers are rescaled
# internally, so expanding dynamics do not overflow.

diag = gelfand_diagnostic(model_fast.A_at(1), n_max=60)
eigs = np.sort(np.abs(np.linalg.eigvals(model_fast.A_at(1))))
print("\n  n    s_min(A^n)^(1/n)   (true |eig|_min = %.6f)" % eigs[0])
for n in (1, 5, 15, 30, 60):
    print(f"  {n:2d}   {diag[n - 1][1][-1]:.6f}")
