"""Numerical tolerances shared by the library and its test suite.

Keeping them in one table guarantees that the validation performed inside
the library and the assertions in the tests agree on what "Hermitian" or
"positive" means.
"""

# Max elementwise |M - M^dag| for a matrix to count as Hermitian.
HERMITICITY_TOL = 1e-10

# |tr(rho) - nominal| for density matrices (nominal is 1 for normalized states).
TRACE_TOL = 1e-9

# Eigenvalues of a normalized state may dip this far below zero.
PSD_TOL = 1e-9

# |  ||psi|| - 1 | for kets flagged normalized.
KET_NORM_TOL = 1e-10

# ||M v - lambda v|| allowed for every reported eigenpair.
EIG_RESIDUAL_TOL = 1e-8

# Partial-transpose eigenvalues above -PPT_TOL are treated as numerical noise
# rather than genuine negativity.
PPT_TOL = 1e-7

# Trace lost to truncation that a channel application may silently absorb.
CHANNEL_TRACE_TOL = 1e-8

# Coherent-tail weight allowed beyond the cutoff when displacing a state.
DISPLACEMENT_TRUNC_TOL = 1e-6
