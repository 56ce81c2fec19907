"""Numeric defaults for the model, solver, training and evaluation."""

from typing import Tuple

# Model
IMAGE_SIZE = 224
SIZE_MULTIPLE = 32
CHANNELS = 64
STAGE_CHANNELS: Tuple[int, int, int, int] = (32, 64, 160, 256)
STAGE_STRIDES: Tuple[int, int, int, int] = (4, 2, 2, 2)
REDUCTION_RATIOS: Tuple[int, int, int, int] = (8, 4, 2, 1)
MLP_RATIO = 4
POSE_LAYERS = 2
DECODER_STRIDE = 4

# DEQ solver
SOLVER_TOL = 1e-5
SOLVER_MAX_ITER = 40
ANDERSON_MEMORY = 5
DAMPING = 0.5
RESIDUAL_EPS = 1e-8
ANDERSON_REG = 1e-10
ANDERSON_MAX_COND = 1e8
NEUMANN_TERMS = 25
SPECTRAL_SCALE = 0.9
CONTRACTION = 0.5

# Training
LEARNING_RATE = 6e-5
BETAS: Tuple[float, float] = (0.9, 0.999)
ADAM_EPS = 1e-8
WEIGHT_DECAY = 0.01
BATCH_SIZE = 24
BATCH_SIZE_AFF_UNSEEN = 12
LOSS_WEIGHTS: Tuple[float, float, float] = (1.0, 1.0, 1.0)
MASK_THRESHOLD = 0.5

# Annotation processing
KERNEL_DIVISOR = 3.0
MIN_KERNEL_SIZE = 3
SIGMA_FRACTION = 1.0 / 6.0

# Evaluation
METRIC_EPS = 1e-12
PR_THRESHOLDS = 255
F_BETA_SQUARED = 0.3
GT_BINARY_THRESHOLD = 0.5

# Splits
SEEN_TRAIN_FRACTION = 0.7
SEEN_VAL_FRACTION = 0.1
HELD_OUT_FRACTION = 0.3
