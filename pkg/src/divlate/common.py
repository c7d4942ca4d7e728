"""Shared numeric constants and small helpers."""

import numpy as np

# probability clipping shared by every nuisance prediction path
PROB_CLIP_LO = 1e-3
PROB_CLIP_HI = 1.0 - 1e-3

# minority-class threshold below which learning backends skip fitting
FALLBACK_MIN_COUNT = 5


def clip_probs(p: np.ndarray) -> np.ndarray:
    return np.clip(p, PROB_CLIP_LO, PROB_CLIP_HI)


def derive_seed(*parts) -> int:
    """Deterministic child seed from integer parts via SeedSequence hashing."""
    ss = np.random.SeedSequence([int(p) & 0xFFFFFFFF for p in parts])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
