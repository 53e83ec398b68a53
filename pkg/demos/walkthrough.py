"""End-to-end tour on a coarse copy of the reference waveguide.

Run with ``python3 demos/walkthrough.py``.  It takes a few seconds: the grid
has 30 points across the width and the wavenumber is kW/pi = 5.5, so every
step is cheap enough to read along.
"""
import math
from pathlib import Path

import numpy as np

from qwslab.fock import sector_qws, sector_variance
from qwslab.gaussian import db_of
from qwslab.gws import eigendecompose, expected_classical_force, gws_matrix
from qwslab.metrology import optimal_coherent_probe, optimal_gaussian_probe, optimal_noon_probe
from qwslab.micromanipulation import optimal_force_probe, p_opt, reduction_factor
from qwslab.scattering import load_scenario, solve_scattering
from qwslab.vacuum import band_grid, vacuum_force

sc = load_scenario(Path(__file__).parent / "scenarios" / "fig3_coarse.json")
print(f"scenario: {len(sc.scatterers)} scatterers, N' = {sc.open_modes} open modes per lead")

# classical scattering
res = solve_scattering(sc)
S = res.S.entries
print(f"S is {S.shape[0]}x{S.shape[1]}, unitarity defect {res.S.unitarity_defect:.1e}")

# generalized Wigner-Smith matrix for the target's x position
q = gws_matrix(sc)
eig = eigendecompose(q.entries)
lam = eig.eigenvalues
print(f"Q_x: trace {q.trace:+.4f}, eigenvalues from {lam[0]:+.4f} to {lam[-1]:+.4f}")

# a random incident wave pushes less than the top eigenvector
rng = np.random.default_rng(0)
a = rng.normal(size=q.N) + 1j * rng.normal(size=q.N)
a /= np.linalg.norm(a)
print(f"force of a random unit wave {expected_classical_force(a, q.entries):+.4f}, "
      f"of the top eigenchannel {lam[0]:+.4f}")

# quantum force: the one-photon QWS operator is Q + tr(Q)/2 on the single-photon sector
H1 = sector_qws(q.entries, 1)
w = eig.W[:, eig.i_max]
print(f"one-photon mean force {np.vdot(w, H1.matrix @ w).real:+.4f} "
      f"= lambda_max + tr/2 = {lam[0] + 0.5 * q.trace:+.4f}, variance "
      f"{sector_variance(H1.matrix, w):.1e}")

# optimal force-noise reduction with squeezing
nu = 49
rep = optimal_force_probe(lam, nu)
print(f"nu = {nu}: squeeze {db_of(p_opt(nu)):.2f} dB, force noise x{reduction_factor(nu):.3f} "
      f"of the coherent probe (sigma {rep.sigma:.4f})")

# metrology: coherent, optimal Gaussian and NOON probes
for name, fn in (("coherent", optimal_coherent_probe), ("gaussian", optimal_gaussian_probe),
                 ("noon", optimal_noon_probe)):
    F = [fn(lam, n)[1].F for n in (10, 100)]
    print(f"{name:9s} F(10) = {F[0]:10.2f}  F(100) = {F[1]:12.2f}  "
          f"slope {math.log10(F[1] / F[0]):.2f}")

# vacuum force over one band, with its step-halving error bar
scan = vacuum_force(sc, band_grid(sc, 4.1 * math.pi, 5.9 * math.pi, 0.05))
print(f"vacuum force over kW/pi in [4.1, 5.9]: {scan.value:+.4f} +- {scan.error:.4f}")
mirror = vacuum_force(sc.mirrored("x"), band_grid(sc, 4.1 * math.pi, 5.9 * math.pi, 0.05))
print(f"mirrored geometry:                     {mirror.value:+.4f} +- {mirror.error:.4f}")
