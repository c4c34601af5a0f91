"""In-process three-party simulation: user, storage nodes, auditor.

No sockets; messages are method calls, but every payload that would cross
the wire is serialized and the byte ledgers are charged from the serialized
length.  Key visibility is role-scoped: nodes never see the verification
key, the auditor never sees the encryption key.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import audit, field, ncrypt, repair
from .audit import Challenge, KeyMaterial, NodePayload, Proof
from .blocks import CodedBlock, FileManifest, SystemParams, decode_file

# Fig.-style 4-node parity layout over m=4 source blocks (rows are nodes,
# entries are source coefficients of each stored block).
EVENODD4 = {
    0: np.array([[1, 0, 0, 0], [0, 1, 0, 0]], dtype=np.uint8),   # b1, b2
    1: np.array([[0, 0, 1, 0], [0, 0, 0, 1]], dtype=np.uint8),   # b3, b4
    2: np.array([[1, 0, 1, 0], [0, 1, 0, 1]], dtype=np.uint8),   # b1+b3, b2+b4
    3: np.array([[0, 1, 1, 0], [1, 1, 0, 1]], dtype=np.uint8),   # b2+b3, b1+b2+b4
}

LEDGER_CATEGORIES = ("data_block_bytes", "tag_bytes", "coefficient_bytes",
                     "proof_bytes", "control_bytes")


class KeyScopeError(PermissionError):
    pass


@dataclass
class ByteLedger:
    sent: Dict[str, int] = dc_field(default_factory=lambda: dict.fromkeys(LEDGER_CATEGORIES, 0))
    received: Dict[str, int] = dc_field(default_factory=lambda: dict.fromkeys(LEDGER_CATEGORIES, 0))

    def charge(self, other: "ByteLedger", category: str, nbytes: int) -> None:
        if category not in self.sent:
            raise ValueError(f"unknown ledger category {category!r}")
        if nbytes < 0:
            raise ValueError("ledger counters are monotone")
        self.sent[category] += nbytes
        other.received[category] += nbytes

    def totals(self) -> Dict[str, int]:
        return {k: self.sent[k] + self.received[k] for k in LEDGER_CATEGORIES}


@dataclass
class Fault:
    kind: str  # corrupt_symbol | delete_block | replay_old | lie_probability
    block: int = 0
    position: int = 0
    delta: int = 0
    epsilon: float = 0.0
    snapshot: Optional[Tuple[List[CodedBlock], List[np.ndarray]]] = None

    def validate(self, store_size: int) -> None:
        if self.kind == "corrupt_symbol":
            if self.delta == 0:
                raise ValueError("corruption delta must be nonzero")
            if not 0 <= self.block < store_size:
                raise ValueError("corrupt_symbol block out of range")
        elif self.kind == "delete_block":
            if not 0 <= self.block < store_size:
                raise ValueError("delete_block index out of range")
        elif self.kind == "replay_old":
            if self.snapshot is None:
                raise ValueError("replay_old needs a snapshot")
        elif self.kind == "lie_probability":
            if not 0 <= self.epsilon <= 1:
                raise ValueError("epsilon outside [0, 1]")
        else:
            raise ValueError(f"unknown fault kind {self.kind!r}")


class Node:
    """One storage node.  Holds k_e and its payload; never k_v."""

    def __init__(self, node_id: int, payload: NodePayload, params: SystemParams, rng):
        self.node_id = node_id
        self.payload = payload
        self.params = params
        self.rng = rng
        self.ledger = ByteLedger()
        self.lie_epsilon = 0.0
        self._mask: Optional[ncrypt.MaskBundle] = None

    def apply_fault(self, fault: Fault) -> None:
        fault.validate(len(self.payload.blocks))
        if fault.kind == "corrupt_symbol":
            self.payload.blocks[fault.block].vec[fault.position] ^= fault.delta
        elif fault.kind == "delete_block":
            self.payload.blocks[fault.block] = None
            self.payload.tags[fault.block] = None
        elif fault.kind == "replay_old":
            blocks, tags = fault.snapshot
            self.payload.blocks = [b.copy() for b in blocks]
            self.payload.tags = [t.copy() for t in tags]
        elif fault.kind == "lie_probability":
            self.lie_epsilon = fault.epsilon

    def precompute_mask(self, file_id: str, lambda_bits: int) -> None:
        self._mask = ncrypt.precompute_mask(self.payload.k_e, file_id.encode(),
                                            self.payload.aux, self.rng, lambda_bits)

    def answer(self, chal: Challenge) -> Tuple[Proof, audit.GenProofStats]:
        lying = self.lie_epsilon and self.rng.random() < self.lie_epsilon
        proof, stats = audit.gen_proof(
            self.payload.blocks, self.payload.tags, chal, self.payload.k_e,
            self.payload.aux, self.rng, self.params,
            mask=self._mask, strict=False)
        self._mask = None  # single-use: the nonce must not repeat
        if lying:
            junk = self.rng.integers(0, 256, size=proof.ciphertext.c_bar.shape,
                                     dtype=np.uint8)
            proof = Proof(ncrypt.Ciphertext(junk, proof.ciphertext.nonce,
                                            proof.ciphertext.p),
                          proof.pad, proof.tag)
        return proof, stats

    def snapshot(self) -> Tuple[List[CodedBlock], List[np.ndarray]]:
        return ([b.copy() for b in self.payload.blocks],
                [t.copy() for t in self.payload.tags])


class Tpa:
    """Auditor.  Holds k_v and the manifest; never k_e."""

    def __init__(self, k_v: bytes, manifest: FileManifest, rng):
        self._k_v = k_v
        self.manifest = manifest
        self.rng = rng
        self.ledger = ByteLedger()

    def challenge(self, node: int, count: int) -> Challenge:
        return audit.gen_challenge(self.manifest, node, count, self.rng)

    def verify(self, chal: Challenge, proof: Proof):
        from . import dynamics
        return dynamics.verify_with_deltas(self._k_v, self.manifest, chal, proof)


class User:
    """Data owner.  The only role holding both keys."""

    def __init__(self, keys: KeyMaterial, rng):
        self._keys = keys
        self.rng = rng
        self.ledger = ByteLedger()

    @property
    def keys(self) -> KeyMaterial:
        return self._keys


class Cluster:
    def __init__(self, params: SystemParams, layout: str, file_bytes: bytes,
                 seed: int):
        self.params = params
        self.layout = layout
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.user = User(audit.keygen(params, rng), np.random.default_rng(rng.integers(2**63)))
        if layout == "evenodd4":
            if (params.m, params.N, params.M, params.P, params.Q) != (4, 4, 2, 3, 1):
                raise ValueError("evenodd4 requires m=4, N=4, M=2, P=3, Q=1")
            code = {k: v.copy() for k, v in EVENODD4.items()}
        elif layout == "random_functional":
            code = {}
            for node in range(params.N):
                while True:
                    rows = rng.integers(0, 256, size=(params.M, params.m), dtype=np.uint8)
                    if all(rows[j].any() for j in range(params.M)):
                        code[node] = rows
                        break
            stacked = np.concatenate(list(code.values()), axis=0)
            if field.matrix_rank(stacked) < params.m:
                raise ValueError("random layout failed to span the source space")
        else:
            raise ValueError(f"unknown layout {layout!r}")

        self.manifest, payloads = audit.setup_file(
            file_bytes, params, self.user.keys, code, rng,
            file_id=f"file-{seed:016x}")
        self.file_bytes = file_bytes
        self.nodes: Dict[int, Node] = {}
        for node_id, payload in payloads.items():
            node_rng = np.random.default_rng(rng.integers(2**63))
            self.nodes[node_id] = Node(node_id, payload, params, node_rng)
        self.tpa = Tpa(self.user.keys.k_v, self.manifest,
                       np.random.default_rng(rng.integers(2**63)))
        self.rng = rng
        self.transcript: List[dict] = []

    # -- role-scoped key accessors ------------------------------------
    def key_for(self, role: str, which: str) -> bytes:
        allowed = {("user", "k_v"), ("user", "k_e"),
                   ("tpa", "k_v"), ("node", "k_e")}
        if (role, which) not in allowed:
            raise KeyScopeError(f"role {role!r} may not read {which}")
        return getattr(self.user.keys, which)

    # -- protocol steps ------------------------------------------------
    def run_audit_round(self, node: int, count: int) -> Tuple[bool, dict]:
        chal = self.tpa.challenge(node, count)
        self.tpa.ledger.charge(self.nodes[node].ledger, "control_bytes",
                               len(chal.to_bytes()))
        proof, _ = self.nodes[node].answer(chal)
        raw = proof.to_bytes()
        self.nodes[node].ledger.charge(self.tpa.ledger, "proof_bytes", len(raw))
        accepted, _ = self.tpa.verify(
            chal, Proof.from_bytes(raw, self.manifest.params))
        record = {"event": "audit", "node": node, "count": count,
                  "accepted": bool(accepted), "proof_bytes": len(raw)}
        self.transcript.append(record)
        return accepted, record

    def inject_fault(self, node: int, fault: Fault) -> None:
        self.nodes[node].apply_fault(fault)
        self.transcript.append({"event": "fault", "node": node, "kind": fault.kind})

    def snapshot_node(self, node: int):
        return self.nodes[node].snapshot()

    def fail_and_repair(self, node: int, mode: str = "exact",
                        helpers: Optional[List[int]] = None) -> None:
        """Drop a node, rebuild it from P helpers, refresh the manifest."""
        params = self.params
        if helpers is None:
            helpers = [h for h in sorted(self.nodes) if h != node][: params.P]
        plan_rng = np.random.default_rng(self.rng.integers(2**63))
        if mode == "exact":
            plan = repair.plan_exact_repair(self.manifest, node, helpers, plan_rng)
        elif mode == "functional":
            plan = repair.plan_functional_repair(self.manifest, node, helpers, plan_rng)
        else:
            raise ValueError(f"unknown repair mode {mode!r}")
        # user ships gamma to helpers (coefficient traffic, no data)
        shipments = []
        for h in helpers:
            if h not in plan.gamma:
                continue
            g = plan.gamma[h]
            self.user.ledger.charge(self.nodes[h].ledger, "coefficient_bytes",
                                    int(g.size))
            ship = repair.make_repair_blocks(self.nodes[h].payload, g, h)
            nbytes = sum(b.vec.size for b in ship.blocks)
            tbytes = sum(t.size for t in ship.tags)
            self.nodes[h].ledger.charge(self.nodes[node].ledger,
                                        "data_block_bytes", nbytes)
            self.nodes[h].ledger.charge(self.nodes[node].ledger,
                                        "tag_bytes", tbytes)
            shipments.append(ship)
        blocks, tags = repair.reconstruct_node(plan, shipments)
        old = self.nodes[node]
        fresh = Node(node, NodePayload(blocks, tags, old.payload.aux,
                                       old.payload.k_e),
                     params, np.random.default_rng(self.rng.integers(2**63)))
        fresh.ledger = old.ledger
        self.nodes[node] = fresh
        # user tells the TPA the replacement coefficients
        self.user.ledger.charge(self.tpa.ledger, "coefficient_bytes",
                                int(plan.target_rows.size))
        repair.refresh_manifest(self.manifest, plan)
        self.transcript.append({"event": "repair", "node": node, "mode": mode,
                                "helpers": helpers})

    def decode_current_file(self) -> bytes:
        blocks = [b for node in sorted(self.nodes)
                  for b in self.nodes[node].payload.blocks if b is not None]
        return decode_file(blocks, self.manifest)


def spawn_cluster(params: SystemParams, layout: str, file_bytes: bytes,
                  seed: int) -> Cluster:
    return Cluster(params, layout, file_bytes, seed)


def run_scenario(scenario: dict, out) -> int:
    """Execute a declarative scenario; JSON records to `out`; returns the
    number of rejected audits."""
    params = SystemParams(**scenario["params"])
    cluster = spawn_cluster(params, scenario.get("layout", "evenodd4"),
                            bytes.fromhex(scenario.get("file_hex", ""))
                            or scenario.get("file_text", "").encode(),
                            scenario.get("seed", 0))
    rejects = 0
    for step in scenario.get("steps", []):
        op = step["op"]
        if op == "audit":
            ok, rec = cluster.run_audit_round(step["node"], step.get("count", 1))
            rejects += not ok
        elif op == "fault":
            cluster.inject_fault(step["node"], Fault(**step["fault"]))
        elif op == "repair":
            cluster.fail_and_repair(step["node"], step.get("mode", "exact"),
                                    step.get("helpers"))
        else:
            raise ValueError(f"unknown scenario op {op!r}")
    for rec in cluster.transcript:
        out.write(json.dumps(rec) + "\n")
    return rejects
