import numpy as np
import pytest

from ncaudit import dynamics
from ncaudit.blocks import SystemParams
from ncaudit.cluster import spawn_cluster

PARAMS = SystemParams(n=16, m=4, N=4, M=2, P=3, Q=1, ell=2, lambda_bits=80)
DATA = bytes(range(56))  # 4 blocks of 14


@pytest.fixture
def cluster():
    return spawn_cluster(PARAMS, "evenodd4", DATA, seed=42)


def _payloads(cluster):
    return {i: cluster.nodes[i].payload for i in cluster.nodes}


def _audit_all(cluster):
    return all(cluster.run_audit_round(node, 2)[0] for node in range(4))


def test_append_leaves_old_tags_alone(cluster, rng):
    payloads = _payloads(cluster)
    before = {i: [t.copy() for t in payloads[i].tags] for i in payloads}
    dynamics.append_block(cluster.manifest, payloads, cluster.user.keys,
                          b"appended", rng, placements={1: None, 2: None})
    for i in (0, 3):  # untouched nodes: tags bit-identical
        assert all(np.array_equal(a, b)
                   for a, b in zip(before[i], payloads[i].tags))
    assert _audit_all(cluster)
    assert cluster.decode_current_file() == DATA + b"appended"


def test_append_mixed_placement(cluster, rng):
    payloads = _payloads(cluster)
    # node 3 stores old-block-0 + 5*new instead of a plain copy
    mix = np.zeros(3, dtype=np.uint8)
    mix[0], mix[2] = 1, 5
    dynamics.append_block(cluster.manifest, payloads, cluster.user.keys,
                          b"mix", rng, placements={3: mix})
    assert _audit_all(cluster)
    assert cluster.decode_current_file() == DATA + b"mix"


def test_append_with_donation(cluster, rng):
    payloads = _payloads(cluster)
    dynamics.append_block(cluster.manifest, payloads, cluster.user.keys,
                          b"dn", rng, placements={0: None},
                          donations=[(1, 0, 3)])
    # node 3 now also holds node 1's first block, with its original tag
    assert np.array_equal(payloads[3].blocks[-1].vec, payloads[1].blocks[0].vec)
    assert _audit_all(cluster)


def test_update_patches_and_verifies(cluster, rng):
    payloads = _payloads(cluster)
    dynamics.update_block(cluster.manifest, payloads, cluster.user.keys,
                          1, b"fresh-content!", rng)
    assert cluster.manifest.deltas  # auditor holds a running adjustment
    assert _audit_all(cluster)
    expect = DATA[:14] + b"fresh-content!" + DATA[28:]
    assert cluster.decode_current_file() == expect


def test_stale_node_rejected_after_update(cluster, rng):
    payloads = _payloads(cluster)
    stale = 2
    live = {i: p for i, p in payloads.items() if i != stale}
    dynamics.update_block(cluster.manifest, live, cluster.user.keys,
                          0, b"new-v2", rng)
    for node in live:
        assert cluster.run_audit_round(node, 2)[0]
    rejected = sum(not cluster.run_audit_round(stale, 2)[0] for _ in range(20))
    assert rejected == 20


def test_double_update_same_block(cluster, rng):
    payloads = _payloads(cluster)
    dynamics.update_block(cluster.manifest, payloads, cluster.user.keys,
                          3, b"v2", rng)
    dynamics.update_block(cluster.manifest, payloads, cluster.user.keys,
                          3, b"v3-final", rng)
    assert _audit_all(cluster)
    assert cluster.decode_current_file() == DATA[:42] + b"v3-final"


def test_insert_reorders_logically(cluster, rng):
    payloads = _payloads(cluster)
    dynamics.insert_block(cluster.manifest, payloads, cluster.user.keys,
                          0, b"head", rng)
    assert cluster.decode_current_file() == b"head" + DATA
    assert _audit_all(cluster)


def test_delete_tombstones(cluster, rng):
    payloads = _payloads(cluster)
    dynamics.delete_block(cluster.manifest, payloads, cluster.user.keys,
                          0, rng)
    assert cluster.decode_current_file() == DATA[14:]
    assert _audit_all(cluster)


def test_insert_delete_roundtrip(cluster, rng):
    payloads = _payloads(cluster)
    res = dynamics.insert_block(cluster.manifest, payloads, cluster.user.keys,
                                2, b"tmp", rng)
    dynamics.delete_block(cluster.manifest, payloads, cluster.user.keys,
                          res.index, rng)
    assert cluster.decode_current_file() == DATA
    assert _audit_all(cluster)
