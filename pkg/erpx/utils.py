"""
Hashing and seed-derivation helpers.

All randomness in erpx flows from one root seed per run. Each stochastic
sub-task gets its own stream derived from (root seed, stable task labels), so
the order in which a thread pool happens to schedule tasks can never change a
result.
"""
import hashlib
from collections.abc import Iterable

import numpy as np

_SEED_BYTES = 8


def derive_seed(root: int, *labels: object) -> int:
    """
    Derives a 64-bit unsigned seed from a root seed and a sequence of labels.

    Labels are rendered with `str`, so use values with a stable textual form
    (ints, strings, tuples of those).
    """
    key = "|".join([str(int(root))] + [str(label) for label in labels])
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=_SEED_BYTES).digest()
    return int.from_bytes(digest, "little")


def rng_for(root: int, *labels: object) -> np.random.Generator:
    """Returns an independent numpy Generator for the task named by `labels`."""
    return np.random.default_rng(derive_seed(root, *labels))


def content_hash(*parts: object) -> str:
    """
    Stable hex digest of arrays, index tuples and plain values.

    numpy arrays contribute their dtype, shape and raw bytes; everything else
    contributes its `repr`.
    """
    h = hashlib.sha256()
    for part in parts:
        if isinstance(part, np.ndarray):
            arr = np.ascontiguousarray(part)
            h.update(str(arr.dtype).encode())
            h.update(str(arr.shape).encode())
            h.update(arr.tobytes())
        else:
            h.update(repr(part).encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()


def subset_key(subset: Iterable[int]) -> tuple[int, ...]:
    """Canonical form of a feature subset: sorted, de-duplicated ints."""
    return tuple(sorted({int(i) for i in subset}))
