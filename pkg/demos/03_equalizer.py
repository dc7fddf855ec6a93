"""Unit-gain MMSE and soft interference cancellation on a random 4x4 real channel.

Run: python demos/03_equalizer.py
"""
import numpy as np

from latticebp.equalizer import ic_mmse_all, mmse_filters

rng = np.random.default_rng(0)
H = rng.standard_normal((4, 4))
N0, n = 0.5, 20_000

fb = mmse_filters(H, P=4.0, N0=N0, Nt=2)
print("unit gain m_i^T h_i:", np.round(np.einsum("km,mk->k", fb.m, H), 12))
print("predicted MSE:", np.round(fb.sigma2, 4))

X = rng.choice([-1.0, 1.0], (n, 4))
Y = X @ H.T + np.sqrt(N0 / 2) * rng.standard_normal((n, 4))
Hb = np.broadcast_to(H, (n, 4, 4))

# No feedback, then feedback that is right on average, then perfect feedback
for name, x_ic in (("none", np.zeros((n, 4))), ("perfect", X)):
    xh, s2 = ic_mmse_all(Y, Hb, x_ic, 4.0, N0, Nt=2)
    print(f"{name:>8}: predicted {np.round(s2[0], 4)} empirical {np.round(np.var(xh - X, axis=0), 4)}")

mean = np.array([0.8, -0.4, 0.0, 0.6])
Xm = np.where(rng.random((n, 4)) < (1 + mean) / 2, 1.0, -1.0)
Ym = Xm @ H.T + np.sqrt(N0 / 2) * rng.standard_normal((n, 4))
xh, s2 = ic_mmse_all(Ym, Hb, np.broadcast_to(mean, (n, 4)), 4.0, N0, Nt=2)
print(f"{'soft':>8}: predicted {np.round(s2[0], 4)} empirical {np.round(np.var(xh - Xm, axis=0), 4)}")
