"""Default budgets and tolerances.

Every function that enforces one of these accepts an override argument; the
module-level values are only defaults.
"""

#: Maximum number of profiles for exact enumeration of a table over S.
STATE_CAP = 10**6

#: Maximum |S| for dense |S| x |S| objects (kernels, K and U matrices).
MATRIX_CAP = 4096

#: Maximum |S| for exact mixing-time computation.
MIXING_CAP = 1024

#: Absolute tolerance for exactness and identity checks on O(1)-O(100) utilities.
ATOL = 1e-9

#: Reversibility tolerance ladder (log domain): pass below, fail above.
REV_PASS = 1e-8
REV_FAIL = 1e-5

#: Largest admissible beta * (per-player utility spread).
MAX_EXPONENT = 700.0
