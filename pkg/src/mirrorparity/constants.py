"""Physical constants (CODATA 2018, SI units)."""

HBAR = 1.054571817e-34  # J s
K_B = 1.380649e-23  # J / K
C_LIGHT = 299792458.0  # m / s
# Atomic mass constant, used as the mass per nucleon of the mirror material.
NUCLEON_MASS = 1.66053906660e-27  # kg
