"""When can the initial state be recovered at all?

Observability Gramians answer that: the window Gramian sums the evolved,
noise-weighted observers, and its smallest eigenvalue measures how well
the worst direction of x0 is pinned down.  This script certifies window
lengths, shows a system that can never be observed, and contrasts the two
growth regimes of lambda_min as the window stretches.

Run with:  python demos/02_observability_analysis.py
"""

import numpy as np

from isokal import SystemModel, check_observability, gramian, lambda_min_asymptotics

np.set_printoptions(precision=4, suppress=True)

# --- 1. A window of observations, summarized by one matrix ---------------

A = np.array([[1.0, -0.5],
              [-0.5, 1.0]])
H = np.array([[0.0, 1.0]])
model = SystemModel(A, H, 1e-6)

print("one-step Gramian:\n", gramian(model, 0, 1))
print("two-step Gramian:\n", gramian(model, 0, 2))

# One step only sees the second coordinate (the matrix is rank one); the
# second step, through the dynamics, reaches the rest of the plane.

report = check_observability(model, L_max=5)
print(f"\nverdict: {report.verdict}, window L = {report.L}, bound rho = {report.rho:.4g}")

# --- 2. A structurally blind system ---------------------------------------
#
# With identity dynamics and an observer that never touches the second
# coordinate, no window length helps.

blind = SystemModel(np.eye(2), np.array([[1.0, 0.0]]), 1e-6)
print("\nblind system:", check_observability(blind, L_max=8).verdict)

# --- 3. How much information keeps arriving? ------------------------------
#
# For expanding dynamics (all |eig| > 1) the evolved observers keep
# growing, and lambda_min of the anchored Gramian diverges; contracting
# directions (|eig| < 1) stop contributing and lambda_min levels off.

expanding = SystemModel(np.array([[1.3, 0.0], [0.2, 1.2]]), H, 1e-4)
growth = lambda_min_asymptotics(expanding, K=25)
print(f"\nexpanding dynamics -> {growth.growth_class}, "
      f"fitted exponential rate beta = {growth.beta:.3f}")

growth = lambda_min_asymptotics(model, K=25)
print(f"mixed dynamics     -> {growth.growth_class}, "
      f"limit = {growth.limit:.4g} (converged: {growth.converged})")

trace = growth.lambda_min_trace
print("\n  k    lambda_min(O(k,0))")
for k in (1, 2, 3, 5, 10, 25):
    print(f"  {k:2d}   {trace[k - 1]:.6g}")

# The plateau is what limits the estimator on this system: once
# lambda_min stops growing, so does the achievable accuracy in the
# worst-observed direction.
