"""Recovering a node's blocks from a prover that sometimes lies.

The prover answers aggregate challenges; a lying answer still has to pass
tag verification to count, and a random lie rarely does.  Each target
combination is asked R times with proportional coefficients (c * alpha for
random nonzero c), normalized by 1/c, and settled by majority vote over the
(data, tag) answers.  M independent majority winners pin down the node's
blocks by elimination.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from . import field, ncrypt, spacemac
from .audit import Challenge, Proof
from .blocks import CodedBlock, FileManifest


class ExtractionError(RuntimeError):
    pass


# oracle: Challenge -> Proof or None (refusal)
ProofOracle = Callable[[Challenge], Optional[Proof]]


@dataclass
class ExtractionReport:
    blocks: List[CodedBlock]
    tags: List[np.ndarray]
    queries: int
    discarded: int  # answers that failed tag verification


def extract_node(oracle: ProofOracle, manifest: FileManifest, node: int,
                 k_e: bytes, k_v: bytes, aux: ncrypt.AuxiliaryElements,
                 rng, rounds: int = 15, equations: Optional[int] = None,
                 extra_budget: int = 3) -> ExtractionReport:
    """Rebuild all M blocks stored at `node`, with their tags.

    `rounds` challenges per equation; an equation whose vote is not a strict
    majority of verified answers is redrawn with fresh coefficients, up to
    extra_budget * equations replacements in total.
    """
    params = manifest.params
    rows = manifest.node_coeffs[node]
    M = rows.shape[0]
    if equations is None:
        equations = M
    n, m, ell = params.n, params.m, params.ell
    fid = manifest.file_id.encode()

    solved_alphas: List[np.ndarray] = []
    solved_vecs: List[np.ndarray] = []
    solved_tags: List[np.ndarray] = []
    queries = discarded = 0
    budget = extra_budget * equations

    while len(solved_alphas) < equations:
        alphas = rng.integers(0, 256, size=M, dtype=np.uint8)
        if not alphas.any():
            continue
        basis = np.stack(solved_alphas + [alphas]) if solved_alphas else alphas[None]
        if field.matrix_rank(basis) < basis.shape[0]:
            continue  # dependent on earlier equations

        votes: Counter = Counter()
        for _ in range(rounds):
            c = int(rng.integers(1, 256))
            entries = [(i, int(field.mul(c, int(a))))
                       for i, a in enumerate(alphas) if field.mul(c, int(a))]
            if not entries:
                continue
            chal = Challenge(manifest.file_id, entries, node)
            proof = oracle(chal)
            queries += 1
            if proof is None:
                continue
            aug = field.combine_rows(
                np.array([a for _, a in entries], dtype=np.uint8),
                rows[[i for i, _ in entries]])
            # after decryption the plain tag applies; t+p matches only the
            # masked form
            full = np.concatenate([
                ncrypt.dec(k_e, fid, proof.ciphertext, aux), proof.pad, aug])
            tag = proof.tag
            if not spacemac.verify_vector(k_v, fid, full, tag):
                discarded += 1
                continue
            inv = field.inv(c)
            votes[(field.vec_scale(inv, full[:n]).tobytes(),
                   field.vec_scale(inv, tag).tobytes())] += 1
        if votes:
            (win, count), = votes.most_common(1)
            if count * 2 > sum(votes.values()):
                solved_alphas.append(alphas)
                vec = np.concatenate([
                    np.frombuffer(win[0], dtype=np.uint8),
                    field.combine_rows(alphas, rows)])
                solved_vecs.append(vec)
                solved_tags.append(np.frombuffer(win[1], dtype=np.uint8).copy())
                continue
        budget -= 1
        if budget < 0:
            raise ExtractionError("vote budget exhausted")

    A = np.stack(solved_alphas)            # (equations, M)
    V = np.stack(solved_vecs)              # (equations, n+m)
    T = np.stack(solved_tags)              # (equations, ell)
    res = field.gaussian_solve(A, np.concatenate([V, T], axis=1))
    if res.status != "unique":
        raise ExtractionError(f"equation system {res.status}")
    sol = res.solution
    blocks, tags = [], []
    for j in range(M):
        block = CodedBlock(sol[j, : n + m].astype(np.uint8), n, m)
        tag = sol[j, n + m:].astype(np.uint8)
        if not spacemac.verify(k_v, fid, block, tag):
            raise ExtractionError(f"recovered block {j} fails verification")
        blocks.append(block)
        tags.append(tag)
    return ExtractionReport(blocks, tags, queries, discarded)
