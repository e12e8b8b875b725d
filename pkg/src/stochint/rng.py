"""Counter-based random number generation.

Two flavours are provided:

* :func:`keyed_normals` -- a vectorized Philox-4x32-10 implementation where
  every draw is addressed by an explicit (seed, stream, index) triple.  The
  value of a draw never depends on how many other draws were made, which is
  what makes truncation-order sweeps consistent: enlarging a table keeps all
  previously generated entries bit-for-bit identical.
* :func:`component_stream` -- a numpy ``Philox`` generator keyed by
  (seed, stream) for bulk sequential sampling (fine-grid Wiener increments),
  where per-draw addressing is not required but determinism is.
"""

from __future__ import annotations

import numpy as np

_PHILOX_M0 = np.uint64(0xD2511F53)
_PHILOX_M1 = np.uint64(0xCD9E8D57)
_PHILOX_W0 = np.uint32(0x9E3779B9)
_PHILOX_W1 = np.uint32(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)

# domain tags keep independent uses of the same seed from colliding
DOMAIN_TABLE = 0x7AB1E
DOMAIN_PATH = 0x9A7


def _philox_rounds(c0, c1, c2, c3, k0, k1):
    """Ten rounds of Philox-4x32; inputs are uint64 arrays holding 32-bit values."""
    for _ in range(10):
        p0 = _PHILOX_M0 * c0
        p1 = _PHILOX_M1 * c2
        hi0, lo0 = p0 >> np.uint64(32), p0 & _MASK32
        hi1, lo1 = p1 >> np.uint64(32), p1 & _MASK32
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
        k0 = (k0 + _PHILOX_W0) & _MASK32
        k1 = (k1 + _PHILOX_W1) & _MASK32
    return c0, c1, c2, c3


def philox_words(seed, stream, index, domain: int = 0):
    """Four 32-bit output words for each (seed, stream, index) counter.

    ``seed``, ``stream`` and ``index`` broadcast against each other; the
    result has their broadcast shape plus a trailing axis of length 4.
    """
    seed = np.asarray(seed, dtype=np.uint64)
    stream = np.asarray(stream, dtype=np.uint64)
    index = np.asarray(index, dtype=np.uint64)
    seed, stream, index = np.broadcast_arrays(seed, stream, index)
    k0 = seed & _MASK32
    k1 = seed >> np.uint64(32)
    c0 = stream & _MASK32
    c1 = index & _MASK32
    c2 = (index >> np.uint64(32)) & _MASK32
    c3 = np.full_like(c0, np.uint64(domain & 0xFFFFFFFF))
    w0, w1, w2, w3 = _philox_rounds(c0, c1, c2, c3, np.copy(k0), np.copy(k1))
    return np.stack([w0, w1, w2, w3], axis=-1)


def keyed_normals(seed: int, stream, index, domain: int = DOMAIN_TABLE):
    """Standard normal draws addressed by (seed, stream, index).

    Uses one Philox evaluation per draw; the four output words feed a
    Box-Muller transform (two 53-bit uniforms, cosine branch).
    """
    w = philox_words(seed, stream, index, domain)
    hi = (w[..., 0] >> np.uint64(6)) << np.uint64(27)
    u1 = (hi + (w[..., 1] >> np.uint64(5)) + np.uint64(1)) * 2.0 ** -53
    hi2 = (w[..., 2] >> np.uint64(6)) << np.uint64(27)
    u2 = (hi2 + (w[..., 3] >> np.uint64(5))) * 2.0 ** -53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def component_stream(seed: int, stream: int, domain: int = DOMAIN_PATH) -> np.random.Generator:
    """Sequential generator for one noise component, keyed by (seed, stream)."""
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF, (int(stream) << 16) ^ domain]
    return np.random.Generator(np.random.Philox(key=key))
