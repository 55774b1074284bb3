# coding: utf-8

# # The regulator f_p and its small-t scaling laws
#
# f_p = 1 - erf_p with erf_p(x) = c(p) int_0^x r^{p-1} e^{-r^2} dr.  For even p these are
# polynomial times Gaussian; for odd p the negative half-line is glued on with a tail that
# matches four derivatives at -k.

import numpy as np

from nclab import models as md
from nclab import regulators as rg

x = np.linspace(0, 3, 7)
for p in (1, 2, 3, 4):
    print(p, np.round(rg.f_p(p, x), 6))

tail = rg.build_odd_tail(1)
print("odd tail C^4 residuals:", rg.tail_residuals(1, tail))

# ## Trace norms against t
#
# ||f_p(t|D_m|)||_1 grows like t^{-p}; commutators with the algebra lose one power.
# The chain-rule defect is reported as well: the symmetric difference it contains is a
# trapezoid rule, so it decays one power faster than the generic bound t^{2-p}.

dm = md.double(md.build_circle(2048), 1.0)
t = rg.default_t_grid(dm)
a = dm.word("u")
for q in ("intable", "commutator", "chainrule_defect"):
    fit = rg.scaling_fit(dm, q, None if q == "intable" else a, t)
    print(f"{q:18s} slope {fit['slope']:+.3f}")
