import numpy as np
import pytest

from ncaudit import audit, field, ncrypt
from ncaudit.audit import Challenge, Proof
from ncaudit.blocks import SystemParams
from ncaudit.cluster import EVENODD4

PARAMS = SystemParams(n=32, m=4, N=4, M=2, P=3, Q=1, ell=2, lambda_bits=80)


@pytest.fixture
def system(rng):
    keys = audit.keygen(PARAMS, rng)
    data = bytes(range(100))
    manifest, payloads = audit.setup_file(data, PARAMS, keys, EVENODD4, rng)
    return keys, manifest, payloads


def test_honest_round_accepts(system, rng):
    keys, manifest, payloads = system
    for node in range(4):
        chal = audit.gen_challenge(manifest, node, 2, rng)
        p = payloads[node]
        proof, _ = audit.gen_proof(p.blocks, p.tags, chal, keys.k_e, p.aux,
                                   rng, PARAMS)
        ok, _ = audit.verify_proof(keys.k_v, manifest, chal, proof)
        assert ok


def test_corrupted_block_rejected(system, rng):
    keys, manifest, payloads = system
    p = payloads[1]
    p.blocks[0].vec[3] ^= 0x40
    rejections = 0
    for _ in range(50):
        chal = Challenge(manifest.file_id, [(0, int(rng.integers(1, 256))),
                                            (1, int(rng.integers(1, 256)))], 1)
        proof, _ = audit.gen_proof(p.blocks, p.tags, chal, keys.k_e, p.aux,
                                   rng, PARAMS)
        ok, _ = audit.verify_proof(keys.k_v, manifest, chal, proof)
        rejections += not ok
    assert rejections == 50  # two key indices: escape odds ~2^-16 per round


def test_wrong_coefficients_rejected(system, rng):
    # proof is honest but the auditor's records disagree -> reject
    keys, manifest, payloads = system
    chal = audit.gen_challenge(manifest, 2, 2, rng)
    p = payloads[2]
    proof, _ = audit.gen_proof(p.blocks, p.tags, chal, keys.k_e, p.aux,
                               rng, PARAMS)
    manifest.node_coeffs[2] = manifest.node_coeffs[2].copy()
    manifest.node_coeffs[2][0, 0] ^= 1
    ok, _ = audit.verify_proof(keys.k_v, manifest, chal, proof)
    assert not ok


def test_gen_proof_strict_missing_block(system, rng):
    keys, manifest, payloads = system
    p = payloads[0]
    p.blocks[1] = None
    chal = Challenge(manifest.file_id, [(0, 5), (1, 7)], 0)
    with pytest.raises(audit.MissingBlockError):
        audit.gen_proof(p.blocks, p.tags, chal, keys.k_e, p.aux, rng, PARAMS)
    # lenient mode substitutes a random block instead
    proof, _ = audit.gen_proof(p.blocks, p.tags, chal, keys.k_e, p.aux,
                               rng, PARAMS, strict=False)
    ok, _ = audit.verify_proof(keys.k_v, manifest, chal, proof)
    assert not ok


def test_challenge_wire_roundtrip():
    chal = Challenge("some-file", [(3, 200), (0, 1), (7, 255)], node=2)
    back = Challenge.from_bytes(chal.to_bytes(), node=2)
    assert back.file_id == chal.file_id
    assert back.entries == chal.entries


def test_challenge_rejects_duplicates():
    with pytest.raises(ValueError):
        Challenge("f", [(1, 2), (1, 3)])
    with pytest.raises(ValueError):
        Challenge("f", [])


def test_proof_wire_roundtrip(system, rng):
    keys, manifest, payloads = system
    chal = audit.gen_challenge(manifest, 3, 2, rng)
    p = payloads[3]
    proof, _ = audit.gen_proof(p.blocks, p.tags, chal, keys.k_e, p.aux,
                               rng, PARAMS)
    raw = proof.to_bytes()
    # data, nonce, auxiliary tags, two padding symbols, tag symbols
    assert len(raw) == (32 - 2) + 10 + 2 + 2 + 2
    back = Proof.from_bytes(raw, PARAMS)
    ok, _ = audit.verify_proof(keys.k_v, manifest, chal, back)
    assert ok


def test_multiplication_counts(system, rng):
    keys, manifest, payloads = system
    n, m, ell, C = PARAMS.n, PARAMS.m, PARAMS.ell, 2
    chal = audit.gen_challenge(manifest, 0, C, rng)
    p = payloads[0]
    mask = ncrypt.precompute_mask(keys.k_e, manifest.file_id.encode(), p.aux,
                                  rng, PARAMS.lambda_bits)
    with field.counter:
        proof, gstats = audit.gen_proof(p.blocks, p.tags, chal, keys.k_e,
                                        p.aux, rng, PARAMS, mask=mask)
    assert gstats.block_mults == C * n
    assert gstats.tag_mults == C * ell
    assert gstats.mask_mults == 0
    with field.counter:
        ok, vstats = audit.verify_proof(keys.k_v, manifest, chal, proof)
    assert ok
    assert vstats.mults == C * m + ell * (n + m)


def test_proof_privacy(system, rng):
    # the transmitted data symbols never equal the plain aggregate
    keys, manifest, payloads = system
    p = payloads[0]
    chal = Challenge(manifest.file_id, [(0, 9)], 0)
    plain = field.vec_scale(9, p.blocks[0].vec[: PARAMS.n - 2])
    proof, _ = audit.gen_proof(p.blocks, p.tags, chal, keys.k_e, p.aux,
                               rng, PARAMS)
    assert not np.array_equal(proof.ciphertext.c_bar, plain)
