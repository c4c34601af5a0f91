"""The four-algorithm audit protocol tying blocks, MAC, and masking together.

KeyGen / TagGen run at the user, GenProof at a storage node, VerifyProof at
the auditor.  The auditor holds only the verification key and the coding
coefficients; response data reaches it masked.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import field, ncrypt, spacemac
from .blocks import CodedBlock, FileManifest, SystemParams, make_source_blocks, combine_blocks
from .ncrypt import AuxiliaryElements, Ciphertext, MaskBundle


@dataclass
class KeyMaterial:
    k_v: bytes  # verification key: user and TPA only
    k_e: bytes  # encryption key: user and nodes only


def keygen(params: SystemParams, rng) -> KeyMaterial:
    nbytes = params.lambda_bits // 8
    return KeyMaterial(k_v=rng.bytes(nbytes), k_e=rng.bytes(nbytes))


@dataclass
class Challenge:
    file_id: str
    entries: List[Tuple[int, int]]  # (block index, alpha), indices distinct
    node: int = 0                   # addressing; not part of the wire format

    def __post_init__(self):
        if not self.entries:
            raise ValueError("challenge needs at least one entry")
        idx = [i for i, _ in self.entries]
        if len(set(idx)) != len(idx):
            raise ValueError("challenge indices must be distinct")

    def to_bytes(self) -> bytes:
        fid = self.file_id.encode()
        out = [struct.pack(">I", len(fid)), fid, struct.pack(">I", len(self.entries))]
        for i, a in self.entries:
            out.append(struct.pack(">IB", i, a))
        return b"".join(out)

    @classmethod
    def from_bytes(cls, raw: bytes, node: int = 0) -> "Challenge":
        (flen,) = struct.unpack(">I", raw[:4])
        fid = raw[4: 4 + flen].decode()
        (count,) = struct.unpack(">I", raw[4 + flen: 8 + flen])
        entries = []
        off = 8 + flen
        for _ in range(count):
            i, a = struct.unpack(">IB", raw[off: off + 5])
            entries.append((i, a))
            off += 5
        return cls(fid, entries, node)


@dataclass
class Proof:
    ciphertext: Ciphertext
    pad: np.ndarray  # the two clear padding symbols e^(n-1), e^(n)
    tag: np.ndarray  # ell aggregated tag symbols

    def to_bytes(self) -> bytes:
        return self.ciphertext.to_bytes() + self.pad.tobytes() + self.tag.tobytes()

    @classmethod
    def from_bytes(cls, raw: bytes, params: SystemParams) -> "Proof":
        n, ell, lam = params.n, params.ell, params.lambda_bits
        ct_len = (n - 2) + lam // 8 + ell
        ct = Ciphertext.from_bytes(raw[:ct_len], n, ell, lam)
        pad = np.frombuffer(raw[ct_len: ct_len + 2], dtype=np.uint8).copy()
        tag = np.frombuffer(raw[ct_len + 2: ct_len + 2 + ell], dtype=np.uint8).copy()
        return cls(ct, pad, tag)

    def wire_size(self) -> int:
        return len(self.to_bytes())


@dataclass
class NodePayload:
    """What the user hands a storage node at setup."""
    blocks: List[CodedBlock]
    tags: List[np.ndarray]
    aux: AuxiliaryElements
    k_e: bytes


def taggen(coeffs, source_tags: np.ndarray) -> np.ndarray:
    """Tag of a coded block as the coefficient combination of source tags."""
    return spacemac.combine_tag_arrays(np.asarray(source_tags, dtype=np.uint8),
                                       field.vec(coeffs))


def setup_file(file_bytes: bytes, params: SystemParams, keys: KeyMaterial,
               code_layout: Dict[int, np.ndarray], rng, file_id: str = "file",
               ) -> Tuple[FileManifest, Dict[int, NodePayload]]:
    """Build source blocks, tag them, encode per-node payloads.

    code_layout maps node id -> (M, m) coefficient rows.  Encoded-block tags
    go through TagGen (the Combine route), never a fresh Mac.
    """
    params.validate()
    fid = file_id.encode()
    sources, residual, lengths = make_source_blocks(file_bytes, params, rng)
    source_tags = np.stack([spacemac.mac(keys.k_v, fid, b, params.ell) for b in sources])
    aux = ncrypt.setup(keys.k_e, keys.k_v, fid, params)

    payloads: Dict[int, NodePayload] = {}
    node_coeffs: Dict[int, np.ndarray] = {}
    for node, rows in code_layout.items():
        rows = np.asarray(rows, dtype=np.uint8)
        if rows.shape != (params.M, params.m):
            raise ValueError(f"layout rows for node {node} must be (M, m)")
        blocks = [combine_blocks(sources, rows[j]) for j in range(params.M)]
        tags = [taggen(rows[j], source_tags) for j in range(params.M)]
        payloads[node] = NodePayload(blocks, tags, aux, keys.k_e)
        node_coeffs[node] = rows.copy()

    manifest = FileManifest(
        file_id=file_id,
        params=params,
        residual_len=residual,
        block_lengths=lengths,
        node_coeffs=node_coeffs,
        logical_order=list(range(params.m)),
    )
    return manifest, payloads


def gen_challenge(manifest: FileManifest, node: int, count: int, rng) -> Challenge:
    """count distinct block indices with uniformly random coefficients."""
    M = manifest.node_coeffs[node].shape[0]
    if not 1 <= count <= M:
        raise ValueError(f"challenge count must be in [1, {M}]")
    idx = rng.choice(M, size=count, replace=False)
    alphas = rng.integers(0, 256, size=count, dtype=np.uint8)
    entries = [(int(i), int(a)) for i, a in zip(idx, alphas)]
    return Challenge(manifest.file_id, entries, node)


@dataclass
class GenProofStats:
    block_mults: int = 0  # aggregating the n data symbols: C*n
    tag_mults: int = 0    # aggregating the stored tags: C*ell
    mask_mults: int = 0   # 0 when the mask bundle is precomputed


class MissingBlockError(KeyError):
    pass


def gen_proof(blocks: List[Optional[CodedBlock]], tags: List[Optional[np.ndarray]],
              chal: Challenge, k_e: bytes, aux: AuxiliaryElements, rng,
              params: SystemParams, mask: MaskBundle | None = None,
              strict: bool = True) -> Tuple[Proof, GenProofStats]:
    """Aggregate the challenged blocks and tags, then mask the data part.

    Only the first n symbols are aggregated; the coefficient part is never
    transmitted (the auditor recomputes it from its own records).  With
    strict=False a missing block is replaced by a uniformly random one.
    """
    n, ell = params.n, params.ell
    stats = GenProofStats()
    counting = field.counter.enabled
    before = field.counter.value if counting else 0

    agg = np.zeros(n, dtype=np.uint8)
    agg_tag = np.zeros(ell, dtype=np.uint8)
    for i, a in chal.entries:
        block, tag = blocks[i], tags[i]
        if block is None or tag is None:
            if strict:
                raise MissingBlockError(f"block {i} not in store")
            block = CodedBlock(rng.integers(0, 256, size=n + params.m, dtype=np.uint8),
                               n, params.m)
            tag = rng.integers(0, 256, size=ell, dtype=np.uint8)
        agg ^= field.vec_scale(a, block.vec[:n])
    if counting:
        stats.block_mults = field.counter.value - before
        before = field.counter.value
    for i, a in chal.entries:
        tag = tags[i]
        if tag is None:
            tag = rng.integers(0, 256, size=ell, dtype=np.uint8)
        agg_tag ^= field.vec_scale(a, np.asarray(tag, dtype=np.uint8))
    if counting:
        stats.tag_mults = field.counter.value - before
        before = field.counter.value

    e_bar, pad = agg[: n - 2], agg[n - 2: n].copy()
    ct = ncrypt.enc(k_e, chal.file_id.encode(), e_bar, aux, rng,
                    params.lambda_bits, mask=mask)
    if counting:
        stats.mask_mults = field.counter.value - before
    return Proof(ct, pad, agg_tag), stats


@dataclass
class VerifyStats:
    mults: int = 0  # C*m coefficient aggregation + ell*(n+m) verification dots


def verify_proof(k_v: bytes, manifest: FileManifest, chal: Challenge,
                 proof: Proof) -> Tuple[bool, VerifyStats]:
    """Rebuild the expected coefficients, compensate the mask, verify tags."""
    params = manifest.params
    n, m, ell = params.n, params.m, params.ell
    if proof.ciphertext.c_bar.shape[0] != n - 2 or proof.tag.shape[0] != ell \
            or proof.pad.shape[0] != 2 or proof.ciphertext.p.shape[0] != ell:
        raise ValueError("malformed proof dimensions")
    rows = manifest.node_coeffs[chal.node]
    stats = VerifyStats()
    counting = field.counter.enabled
    before = field.counter.value if counting else 0

    idx = np.array([i for i, _ in chal.entries])
    alphas = np.array([a for _, a in chal.entries], dtype=np.uint8)
    aug = field.combine_rows(alphas, rows[idx])

    c = np.concatenate([proof.ciphertext.c_bar, proof.pad, aug])
    expected = proof.tag ^ proof.ciphertext.p
    fid = manifest.file_id.encode()
    ok = True
    for j in range(ell):
        r = spacemac.r_vector(k_v, fid, n + m, j + 1)
        if field.dot(c, r) != int(expected[j]):
            ok = False
            break
    if counting:
        stats.mults = field.counter.value - before
    return ok, stats


def aggregate_coeffs(manifest: FileManifest, chal: Challenge) -> np.ndarray:
    """The challenged combination's source coefficients, from the manifest."""
    rows = manifest.node_coeffs[chal.node]
    idx = np.array([i for i, _ in chal.entries])
    alphas = np.array([a for _, a in chal.entries], dtype=np.uint8)
    return field.combine_rows(alphas, rows[idx])
