#!/usr/bin/env python3
# Copyright 2026 The dflpool Authors.
# SPDX-License-Identifier: Apache-2.0
#
# Independent reference values frozen into tests/. Uses mpmath, scipy and
# scikit-learn only; nothing here imports the C++ code.

import math

import mpmath as mp
import numpy as np
from scipy.stats import norm
from sklearn.mixture import GaussianMixture

mp.mp.dps = 40

print("gaussian_pdf(3; 1, 4) =", mp.nstr(mp.npdf(3, 1, 2), 20))
print("gaussian_pdf(0; 0, 1) =", mp.nstr(mp.npdf(0, 0, 1), 20))
print("kl([.5,.5] || [.25,.75]) =",
      mp.nstr(mp.mpf(1) / 2 * mp.log(2) + mp.mpf(1) / 2 * mp.log(mp.mpf(2) / 3), 20))
print("bic(-100, 3, 1000) =", mp.nstr(200 + 3 * mp.log(1000), 20))
print("kl([.5,.5] || [.75,.25]) =",
      mp.nstr(mp.mpf(1) / 2 * mp.log(mp.mpf(2) / 3) + mp.mpf(1) / 2 * mp.log(2), 20))


def dir_var(alpha, k):
    a0 = alpha * k
    return alpha * (a0 - alpha) / (a0 * a0 * (a0 + 1))


for a in (0.1, 1.0, 20.0):
    print(f"dirichlet_variance(k=10, alpha={a}) =", repr(dir_var(a, 10)))

# Labels from one discretized Gaussian cluster. Deterministic so the C++ test
# rebuilds the same vector: y_i = clamp(round(4.5 + 1.5 * Phi^-1((i + .5) / n)), 0, 9).
n = 500
y = np.array([min(9, max(0, round(4.5 + 1.5 * norm.ppf((i + 0.5) / n)))) for i in range(n)],
             dtype=float)
print("single-cluster labels: histogram", np.bincount(y.astype(int), minlength=10).tolist())
print("  mean", repr(y.mean()), "var", repr(y.var()))
best = []
for m in range(1, 6):
    lls = []
    for seed in range(20):
        g = GaussianMixture(m, covariance_type="full", reg_covar=1e-4, tol=1e-10,
                            max_iter=2000, random_state=seed, init_params="random").fit(
            y.reshape(-1, 1))
        lls.append(g.score(y.reshape(-1, 1)) * n)
    ll = max(lls)
    bic = -2 * ll + m * math.log(n)
    best.append(bic)
    print(f"  M={m}: max lnL={ll:.6f}  BIC={bic:.6f}")
print("  argmin BIC M =", int(np.argmin(best)) + 1)
print("  closed-form M=1 lnL =",
      repr(float(np.sum(norm.logpdf(y, y.mean(), math.sqrt(y.var()))))))
