"""Deterministic seed derivation.

Every stochastic consumer in the pipeline receives a seed derived from the
master seed plus a structured path (stage name, function id, trial index,
repetition index, ...), so results are reproducible regardless of execution
order or parallelism.
"""

import hashlib

_MASK64 = (1 << 64) - 1


def derive_seed(master_seed: int, *parts) -> int:
    """Map (master_seed, *parts) to a stable 64-bit seed.

    Parts may be ints or strings; the mapping is independent of process,
    platform and PYTHONHASHSEED.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(master_seed)).encode())
    for part in parts:
        h.update(b"\x1f")
        h.update(str(part).encode())
    return int.from_bytes(h.digest(), "little") & _MASK64
