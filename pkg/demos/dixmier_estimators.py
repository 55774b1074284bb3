# coding: utf-8

# # Estimating Dixmier traces from finite spectra
#
# tau_w(T) is an w-limit of (1/log(1+t)) int_0^t mu_s(T) ds.  On a matrix we can only look at
# a window of t well inside the spectrum.  The direct estimator averages the log-mean over such
# a window with a few weight profiles; their spread is a cheap measurability diagnostic.

import numpy as np
import scipy.sparse as sp

from nclab import models as md
from nclab import singular_trace as st

s = np.arange(1, 2 ** 18 + 1, dtype=float)
est = st.dixmier_direct(1 / s)
print("harmonic sequence:", est.value.real, "spread", est.spread)

# ## An operator that is not measurable
#
# mu_s = (2 + sin(log log s))/s has a log-mean that keeps oscillating, so different windows
# and weights disagree.

mu = (2 + np.sin(np.log(np.log(s + 2)))) / s
print("oscillating witness spread:", st.measurability_probe(mu)["relative_spread"])

# ## Resolvent of the doubled circle, two routes

dm = md.double(md.build_circle(2048), 1.0)
T = dm.unit @ dm.spectral(lambda x: (1 + x * x) ** -0.5)
direct = st.dixmier_direct(T, window=st.model_window(dm))
heat = st.dixmier_heat(dm, dm.unit)
print("direct:", direct.value.real, " heat:", heat.value.real)

# ## Finite-rank operators
#
# Both estimators must see nothing.  The plain heat average keeps a bias of order
# rank * <t> on a finite window; fitting c0 + c1 t^p and reporting c0 removes it.

d = np.zeros(dm.dim)
d[dm.dim // 2 - 5:dm.dim // 2 + 5] = 1.0
A = sp.diags(d)
print("direct  :", abs(st.dixmier_direct(A).value))
print("heat avg:", abs(st.dixmier_heat(dm, A).value))
print("heat fit:", abs(st.dixmier_heat(dm, A, mode="intercept").value))
