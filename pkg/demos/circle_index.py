# coding: utf-8

# # The winding cycle on the circle
#
# The circle truncated to modes |n| <= N carries D e_n = n e_n and the shift u e_n = e_{n+1}.
# D has a kernel, so we pass to the double with mass m = 1, where D_m is invertible and
# F = D_m |D_m|^{-1} squares to one.  The pairing of the winding cycle u* (x) u with the
# Chern character of F should be lambda_1 times an integer, and that integer can be read
# off independently from the Fredholm index of the compressed shift.

import numpy as np

from nclab import chern as ch
from nclab import hochschild as hs
from nclab import models as md

N = 1024
base = md.build_circle(N)
dm = md.double(base, 1.0)
cycle = hs.HochschildChain.from_literal(ch.CYCLES["winding"][1])
print("cycle on the interior:", hs.is_cycle(cycle, base))

# ## Index oracle
#
# P u P with P = 1_{D >= 0} is the unilateral shift: no kernel, one-dimensional cokernel.

oracle = ch.index_oracle(base)
print(oracle)

# ## Four ways to compute the same number

lam = ch.lambda_n(1)
vals = {
    "Chern character, doubled": ch.chern_pair(dm, cycle),
    "psi_t, extrapolated t -> 0": ch.psi_limit(dm, cycle)["value"],
    "zeta_1 (Dixmier)": ch.zeta_pair(dm, 1, cycle).value,
    "phi_omega (Dixmier)": ch.phi_pair(base, cycle).value,
}
for name, v in vals.items():
    print(f"{name:30s} value/lambda_1 = {(v / lam).real:+.5f}")
print("mutual agreement:", ch.mutual_agreement(vals))

# ## How psi_t approaches its limit
#
# The raw values drift linearly in t; the fit in the basis {1, t} removes the drift.

r = ch.psi_limit(dm, cycle)
for t, v in zip(r["t"], r["values"]):
    print(f"t = {t:.4f}   psi_t/lambda_1 = {(v / lam).real:.5f}")
