STRUCTURE_TOL = 1e-12
UNITARITY_TOL = 1e-10

DENSE_CAP = 2**16
DENSE_TRANSFER_CAP = 4096
SWEEP_CAP = 2**18
DENSE_TRACE_CAP = 2**10

DEFAULT_NU = 0.2
QUADRATURE_NODES = 9
MC_AVERAGING_NODES = 2048

ZERO_CEILING = 1e-8
GAP_FLOOR = 1e-4
RANK_THRESHOLD = 1e-8
CLUSTER_TOL = 1e-6
DENSE_COMMUTANT_CAP = 64

HEAVY_TAIL_RELATIVE_SE = 0.25
POWER_ITERATION_BUDGET = 5000
POWER_ITERATION_TOL = 1e-12
MAX_LEADING_EIGS = 32

WORK_BUDGET = 1e13
SWEEP_CHUNK = 256
SCHEMA_VERSION = "1.0"
ENV_PREFIX = "DUSFF_"
