"""Radial-only finite-volume reference for rotationally symmetric annulus data.

Coded independently of the package: dense matrices, explicit loops over
faces. Unknowns are r*rho on N_r rings; the drift is transversal with speed
S * rho(outer ring) taken from the previous step.
"""
import numpy as np


def radial_transversal(P0, R_min, R_max, dt, n_steps, D=1.0, chi=1.0, S=1.0):
    P = np.array(P0, dtype=float)
    n = P.size
    dr = (R_max - R_min) / n
    r = R_min + dr * (np.arange(n) + 0.5)
    faces = R_min + dr * np.arange(1, n)  # interior faces only
    for _ in range(n_steps):
        u = S * P[-1] / r[-1]
        # net outward flux through each face as a linear map of P_new
        flux = np.zeros((n - 1, n))
        for f in range(n - 1):
            lo, hi = f, f + 1
            flux[f, hi] += D * faces[f] / (r[hi] * dr)
            flux[f, lo] -= D * faces[f] / (r[lo] * dr)
            if u > 0:
                flux[f, lo] -= chi * u
            else:
                flux[f, hi] -= chi * u
        div = np.zeros((n, n))
        for f in range(n - 1):
            div[f] += flux[f] / dr      # flux leaves ring f through its outer face ...
            div[f + 1] -= flux[f] / dr  # ... and enters ring f + 1
        P = np.linalg.solve(np.eye(n) / dt - div, P / dt)
    return P
