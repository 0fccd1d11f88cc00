"""Reproducible random sub-streams.

Each (seed, trial, role) triple maps to an independent ``PCG64`` generator
through NumPy's ``SeedSequence`` hashing. The mapping depends only on the
triple, so results do not change with the order or the thread in which
trials are executed.
"""

import zlib

import numpy as np

ROLES = ("nlos", "bits", "noise", "instance")


def role_tag(role):
    """Stable 32-bit integer for a role name (CRC-32 of its UTF-8 bytes)."""
    return zlib.crc32(role.encode("utf-8"))


def substream(seed, trial=0, role="nlos", *extra):
    """Generator for one (seed, trial, role) triple.

    ``extra`` integers (for example the array size in a sweep over ``M``)
    are appended to the entropy so that each point of a sweep gets its own
    stream.
    """
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    entropy = [int(seed), int(trial), role_tag(role), *(int(e) for e in extra)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def as_generator(rng_or_seed):
    if isinstance(rng_or_seed, np.random.Generator):
        return rng_or_seed
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(rng_or_seed))))
