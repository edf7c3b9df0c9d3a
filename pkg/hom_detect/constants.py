HERMITIAN_TOLERANCE = 1e-12
NORM_TOLERANCE = 1e-12
TRACE_TOLERANCE = 1e-12
SPECTRAL_TOLERANCE = 1e-10
PSD_CLAMP_TOLERANCE = 1e-10
EIGENVALUE_DROP_TOLERANCE = 1e-12
IMAGINARY_RESIDUE_TOLERANCE = 1e-12

BISECTION_TOLERANCE = 1e-9
BISECTION_XTOL = 1e-11
BISECTION_MAX_ITERATIONS = 200
MINIMALITY_TOLERANCE = 1e-8

DECOMPOSITION_TOLERANCE = 1e-6
DECOMPOSITION_ENSEMBLE_SIZE = 256
DECOMPOSITION_RESTARTS = 8
DECOMPOSITION_WEIGHT_FLOOR = 1e-12
KERNEL_TOLERANCE = 1e-8

# 2x2 and 2x3 are the only sizes where PPT is equivalent to separability
PPT_EXACT_MAX_DIMENSION = 6

AMPLITUDE_PRUNE_TOLERANCE = 1e-14

JOINING_SUCCESS_PROBABILITY = 1 / 32
HALF_WAVE_PLATE_ANGLE = 22.5

TRIAL_BLOCK_SIZE = 2**16
DECISION_GUARD = 1e-9

THREADS_ENV_VAR = 'HOM_DETECT_THREADS'
