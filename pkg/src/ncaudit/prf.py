"""The three keyed pseudorandom functions used by the protocol.

F1 derives MAC vectors, F2 the mask basis, F3 the masking coefficients.
Domains are separated by an injective byte encoding:

    function id (1 byte)
    || u32 BE length of file id || file id
    || [u32 BE length of nonce || nonce]      (F3 only)
    || u32 BE per integer index

Two instantiations exist:

* production (default): keyed BLAKE2b in counter mode over the trailing
  index, 64 output bytes per call, so bulk vector derivation needs one hash
  per 64 symbols;
* test mode (NCAUDIT_TEST_PRF=1): a pinned splitmix64 absorption that is
  byte-exact and trivially portable, used for golden vectors.
"""

from __future__ import annotations

import hashlib
import os
import struct

import numpy as np

F1 = 1
F2 = 2
F3 = 3

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK64 = (1 << 64) - 1

_G64 = np.uint64(_GOLDEN)
_M164 = np.uint64(_MIX1)
_M264 = np.uint64(_MIX2)


def test_mode() -> bool:
    return os.environ.get("NCAUDIT_TEST_PRF") == "1"


def new_key(rng, lambda_bits: int = 128) -> bytes:
    nbytes = lambda_bits // 8
    if rng is None:
        return os.urandom(nbytes)
    return rng.bytes(nbytes)


def encode_domain(fn: int, file_id: bytes, indices, nonce: bytes = b"") -> bytes:
    """Injective encoding of a PRF domain point."""
    if fn not in (F1, F2, F3):
        raise ValueError(f"unknown PRF function id {fn}")
    if fn == F3 and not nonce:
        raise ValueError("F3 requires a nonce")
    if fn != F3 and nonce:
        raise ValueError("only F3 carries a nonce")
    if not indices:
        raise ValueError("at least one index required")
    for i in indices:
        if i < 1:
            raise ValueError(f"index {i} out of range (must be >= 1)")
    parts = [bytes([fn]), struct.pack(">I", len(file_id)), file_id]
    if fn == F3:
        parts += [struct.pack(">I", len(nonce)), nonce]
    parts += [struct.pack(">I", i) for i in indices]
    return b"".join(parts)


# -- pinned test instantiation -------------------------------------------

def _mix(z: int) -> int:
    z = (z + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def _pinned_seed(key: bytes) -> int:
    if len(key) < 8:
        raise ValueError("key must be at least 8 bytes")
    a = int.from_bytes(key[:8], "little")
    b = int.from_bytes(key[-8:], "little")
    return a ^ b


def _pinned_absorb(state: int, data: bytes) -> int:
    for byte in data:
        state = _mix(state ^ ((byte * _GOLDEN) & _MASK64))
    return state


def _mix_vec(z: np.ndarray) -> np.ndarray:
    z = z + _G64
    z = (z ^ (z >> np.uint64(30))) * _M164
    z = (z ^ (z >> np.uint64(27))) * _M264
    return z ^ (z >> np.uint64(31))


def _pinned_batch(key: bytes, prefix: bytes, last: np.ndarray) -> np.ndarray:
    """Evaluate the pinned PRF for many values of the trailing u32 index."""
    state0 = _pinned_absorb(_pinned_seed(key), prefix)
    st = np.full(last.shape, state0, dtype=np.uint64)
    li = last.astype(np.uint64)
    with np.errstate(over="ignore"):
        for shift in (24, 16, 8, 0):
            b = (li >> np.uint64(shift)) & np.uint64(0xFF)
            st = _mix_vec(st ^ (b * _G64))
    return (st & np.uint64(0xFF)).astype(np.uint8)


# -- production instantiation ----------------------------------------------

def _prod_block(key: bytes, prefix: bytes, chunk: int) -> bytes:
    return hashlib.blake2b(
        prefix + struct.pack(">I", chunk), key=key[:64], digest_size=64
    ).digest()


def _prod_batch(key: bytes, prefix: bytes, last: np.ndarray) -> np.ndarray:
    out = np.empty(last.shape, dtype=np.uint8)
    blocks: dict[int, bytes] = {}
    for pos, idx in enumerate(last):
        chunk, off = divmod(int(idx), 64)
        block = blocks.get(chunk)
        if block is None:
            block = _prod_block(key, prefix, chunk)
            blocks[chunk] = block
        out[pos] = block[off]
    return out


# -- public surface ---------------------------------------------------------

def prf_eval(key: bytes, fn: int, file_id: bytes, indices, nonce: bytes = b"") -> int:
    """One field symbol, deterministic in (key, domain)."""
    encode_domain(fn, file_id, indices, nonce)  # range/shape validation
    head = list(indices[:-1])
    last = int(indices[-1])
    parts = [bytes([fn]), struct.pack(">I", len(file_id)), file_id]
    if fn == F3:
        parts += [struct.pack(">I", len(nonce)), nonce]
    parts += [struct.pack(">I", i) for i in head]
    pre = b"".join(parts)
    arr = np.array([last], dtype=np.uint32)
    if test_mode():
        return int(_pinned_batch(key, pre, arr)[0])
    return int(_prod_batch(key, pre, arr)[0])


def eval_range(key: bytes, fn: int, file_id: bytes, head_indices, count: int,
               nonce: bytes = b"", start: int = 1) -> np.ndarray:
    """PRF outputs for trailing indices start..start+count-1, as a vector."""
    if count < 1:
        raise ValueError("count must be >= 1")
    parts = [bytes([fn]), struct.pack(">I", len(file_id)), file_id]
    if fn == F3:
        parts += [struct.pack(">I", len(nonce)), nonce]
    parts += [struct.pack(">I", i) for i in head_indices]
    prefix = b"".join(parts)
    last = np.arange(start, start + count, dtype=np.uint32)
    if test_mode():
        return _pinned_batch(key, prefix, last)
    return _prod_batch(key, prefix, last)


def derive_r_vector(k_v: bytes, file_id: bytes, length: int, key_index: int = 1) -> np.ndarray:
    """The F1 vector r for one key index; prefix-stable in length."""
    if length < 1:
        raise ValueError("length must be >= 1")
    if key_index < 1:
        raise ValueError("key_index must be >= 1")
    return eval_range(k_v, F1, file_id, (key_index,), length)


def derive_mask_row(k_e: bytes, file_id: bytes, i: int, width: int) -> np.ndarray:
    """F2 row i of the mask basis, width n-2."""
    if i < 1:
        raise ValueError("basis row index must be >= 1")
    return eval_range(k_e, F2, file_id, (i,), width)


def derive_betas(k_e: bytes, file_id: bytes, nonce: bytes, count: int) -> np.ndarray:
    """F3 masking coefficients beta_1..beta_count for one nonce."""
    return eval_range(k_e, F3, file_id, (), count, nonce=nonce)
