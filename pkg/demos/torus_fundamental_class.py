# coding: utf-8

# # Fundamental class of the flat 2-torus
#
# The torus model has D = n sigma_x + m sigma_y on the modes |n|, |m| <= N, grading sigma_z
# and generators u, v.  The antisymmetrized chain u*v* (x) u (x) v - u*v* (x) v (x) u is the
# fundamental cycle.  Its pairing is computed from the Fredholm module of the double, from the
# regularized traces psi_t and from the Dixmier-valued cocycles, over a sweep of cutoffs.

import numpy as np

from nclab import chern as ch

rep = ch.main_theorem_report("torus2", "fundamental", [12, 16, 24])
lam = ch.lambda_n(2)
for pt in rep.points:
    vals = {k: complex(*v) / lam for k, v in pt["values"].items()}
    line = "  ".join(f"{k}={v.imag:8.4f}i" for k, v in vals.items())
    print(f"N={pt['N']:3d}  {line}  agreement={pt['agreement']:.4f}")

# The spinor trace of Gamma g1 g2 is 2i up to sign and the scalar lattice value of
# (1+|n|^2)^{-1} is pi, so the values should approach 4 pi in absolute value.

print("4 pi =", 4 * np.pi)

# ## Volume
#
# The nonvanishing of the Dixmier trace of (1+D^2)^{-1} follows from a nonzero pairing.

for pt in rep.points:
    print(pt["N"], "tau_w((1+D^2)^-1) =", pt["volume"]["value"][0], "  (2 pi =", 2 * np.pi, ")")
