"""Sample training script with the tunable knobs declared at the top."""

import math

DEPTH = 8
ASPECT_RATIO = 64
HEAD_DIM = 128
DEVICE_BATCH_SIZE = 128
TOTAL_BATCH_SIZE = 524288
EMBEDDING_LR = 0.6
UNEMBEDDING_LR = 0.004
MATRIX_LR = 0.04
SCALAR_LR = 0.5
WEIGHT_DECAY = 0.2
WARMUP_RATIO = 0.0
WARMDOWN_RATIO = 0.5
FINAL_LR_FRAC = 0.0
WINDOW_PATTERN = "SSSL"  # S = short (local) attention, L = long (full) attention

# Derived quantities; not hyperparameters (non-literal right-hand sides).
MODEL_DIM = DEPTH * ASPECT_RATIO
num_heads = MODEL_DIM // HEAD_DIM
grad_accum_steps = TOTAL_BATCH_SIZE // DEVICE_BATCH_SIZE


def lr_schedule(step, total_steps):
    warmup = int(WARMUP_RATIO * total_steps)
    warmdown = int(WARMDOWN_RATIO * total_steps)
    if step < warmup:
        return step / max(1, warmup)
    if step > total_steps - warmdown:
        frac = (total_steps - step) / max(1, warmdown)
        return FINAL_LR_FRAC + (1.0 - FINAL_LR_FRAC) * frac
    return 1.0


def main():
    print("training a depth-%d model (val_bpb goes here)" % DEPTH)
    print("schedule midpoint:", lr_schedule(100, 200), math.pi)


if __name__ == "__main__":
    main()
