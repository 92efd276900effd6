"""Deterministic derivation of independent random streams from a master seed.

Every randomized component of a scenario (topology, sessions, codebook,
initial powers, Monte Carlo trials) draws from its own child seed so that
components can be regenerated independently and trials can run in any order
while staying bit-reproducible.

The splitting rule is: fold each stream index into the state with
``state = splitmix64(state XOR (index + 1) * GOLDEN)``, where GOLDEN is the
64-bit golden-ratio constant and splitmix64 is the standard finalizer.
"""

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(x: int) -> int:
    x &= _MASK64
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    x = (x ^ (x >> 27)) * 0x94D049BB133111EB & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def derive_seed(master_seed: int, *indices: int) -> int:
    """Derive a child seed from ``master_seed`` and one or more stream indices.

    Indices fold in left to right, so ``derive_seed(m, a, b)`` equals
    ``derive_seed(derive_seed(m, a), b)``.
    """
    state = master_seed & _MASK64
    for index in indices:
        state = _splitmix64(state ^ (((index + 1) * _GOLDEN) & _MASK64))
    return state
