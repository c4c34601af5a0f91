"""Command-line front end: setup / audit / corrupt / repair / extract /
bench / scenario.

On-disk layout written by `setup`:
    <dir>/manifest.json
    <dir>/keys.json                 (hex keys; a real deployment would split these)
    <dir>/aux.bin
    <dir>/nodes/node<i>/block<j>.ncab
    <dir>/nodes/node<i>/tags.bin

Exit codes: 0 success / all audits accepted, 1 at least one audit rejected,
2 usage error, 3 internal failure.
"""

from __future__ import annotations

import argparse
import json
import os
import statistics
import sys
import time
from pathlib import Path

import numpy as np

from . import audit, field, ncrypt, repair, spacemac
from .audit import Challenge, KeyMaterial, NodePayload, Proof
from .blocks import CodedBlock, FileManifest, SystemParams
from .cluster import EVENODD4, run_scenario


class UsageError(ValueError):
    pass


def _seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed, 16) if isinstance(args.seed, str) else args.seed
    env = os.environ.get("NCAUDIT_SEED")
    return int(env, 0) if env else 0


# ---------------------------------------------------------------- store I/O

def _save_store(out: Path, manifest: FileManifest, keys: KeyMaterial,
                payloads) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(manifest.to_json())
    (out / "keys.json").write_text(json.dumps(
        {"k_v": keys.k_v.hex(), "k_e": keys.k_e.hex()}, indent=1))
    aux = next(iter(payloads.values())).aux
    (out / "aux.bin").write_bytes(aux.to_bytes())
    for node, payload in payloads.items():
        ndir = out / "nodes" / f"node{node}"
        ndir.mkdir(parents=True, exist_ok=True)
        for j, block in enumerate(payload.blocks):
            (ndir / f"block{j}.ncab").write_bytes(block.to_bytes())
        (ndir / "tags.bin").write_bytes(
            b"".join(np.asarray(t, dtype=np.uint8).tobytes()
                     for t in payload.tags))


def _load_store(root: Path):
    manifest = FileManifest.from_json((root / "manifest.json").read_text())
    kj = json.loads((root / "keys.json").read_text())
    keys = KeyMaterial(bytes.fromhex(kj["k_v"]), bytes.fromhex(kj["k_e"]))
    params = manifest.params
    aux = _load_aux(root / "aux.bin", params)
    payloads = {}
    for node, rows in manifest.node_coeffs.items():
        ndir = root / "nodes" / f"node{node}"
        blocks, tags = [], []
        raw_tags = (ndir / "tags.bin").read_bytes()
        for j in range(rows.shape[0]):
            blocks.append(CodedBlock.from_bytes(
                (ndir / f"block{j}.ncab").read_bytes()))
            tags.append(np.frombuffer(
                raw_tags[j * params.ell: (j + 1) * params.ell],
                dtype=np.uint8).copy())
        payloads[node] = NodePayload(blocks, tags, aux, keys.k_e)
    return manifest, keys, payloads


def _load_aux(path: Path, params: SystemParams) -> ncrypt.AuxiliaryElements:
    raw = np.frombuffer(path.read_bytes(), dtype=np.uint8)
    n, ell = params.n, params.ell
    basis = raw[: (n - 1) * (n - 2)].reshape(n - 1, n - 2).copy()
    scalars = raw[(n - 1) * (n - 2):].reshape(n - 1, ell).copy()
    return ncrypt.AuxiliaryElements(basis, scalars)


# --------------------------------------------------------------- commands

def cmd_setup(args) -> int:
    src = Path(args.file)
    if not src.exists():
        raise UsageError(f"no such file: {src}")
    rng = np.random.default_rng(_seed(args))
    if args.layout == "evenodd4":
        params = SystemParams(n=args.n, m=4, N=4, M=2, P=3, Q=1, ell=args.ell,
                              lambda_bits=args.lam)
        code = {k: v.copy() for k, v in EVENODD4.items()}
    else:
        params = SystemParams(n=args.n, m=args.m, N=args.nodes,
                              M=-(-args.m // args.nodes) + 1,
                              P=args.nodes - 1, Q=1, ell=args.ell,
                              lambda_bits=args.lam)
        code = {node: rng.integers(1, 256, size=(params.M, params.m),
                                   dtype=np.uint8)
                for node in range(params.N)}
    keys = audit.keygen(params, rng)
    manifest, payloads = audit.setup_file(src.read_bytes(), params, keys,
                                          code, rng, file_id=src.name)
    _save_store(Path(args.out), manifest, keys, payloads)
    print(f"wrote {args.out}: {params.N} nodes, {params.m} source blocks, "
          f"n={params.n}, ell={params.ell}")
    return 0


def cmd_audit(args) -> int:
    manifest, keys, payloads = _load_store(Path(args.dir))
    rng = np.random.default_rng(_seed(args))
    params = manifest.params
    accepted = 0
    times = []
    for _ in range(args.rounds):
        chal = audit.gen_challenge(manifest, args.node, args.count, rng)
        p = payloads[args.node]
        t0 = time.perf_counter()
        proof, _ = audit.gen_proof(p.blocks, p.tags, chal, keys.k_e, p.aux,
                                   rng, params)
        t1 = time.perf_counter()
        ok, _ = audit.verify_proof(keys.k_v, manifest, chal, proof)
        t2 = time.perf_counter()
        accepted += ok
        times.append((t1 - t0, t2 - t1))
        print(json.dumps({"event": "audit", "node": args.node,
                          "accepted": bool(ok),
                          "gen_ms": round((t1 - t0) * 1e3, 3),
                          "verify_ms": round((t2 - t1) * 1e3, 3)}))
    print(f"{accepted}/{args.rounds} accepted")
    return 0 if accepted == args.rounds else 1


def cmd_corrupt(args) -> int:
    root = Path(args.dir)
    manifest, _, payloads = _load_store(root)
    if args.delta % 256 == 0:
        raise UsageError("corruption delta must be nonzero mod 256")
    block = payloads[args.node].blocks[args.block]
    block.vec[args.position] ^= args.delta % 256
    path = root / "nodes" / f"node{args.node}" / f"block{args.block}.ncab"
    path.write_bytes(block.to_bytes())
    print(f"flipped node {args.node} block {args.block} "
          f"position {args.position} by {args.delta % 256:#04x}")
    return 0


def cmd_repair(args) -> int:
    root = Path(args.dir)
    manifest, keys, payloads = _load_store(root)
    rng = np.random.default_rng(_seed(args))
    helpers = [h for h in sorted(payloads) if h != args.node][: manifest.params.P]
    if args.mode == "exact":
        plan = repair.plan_exact_repair(manifest, args.node, helpers, rng)
    else:
        plan = repair.plan_functional_repair(manifest, args.node, helpers, rng)
    shipments = [repair.make_repair_blocks(payloads[h], plan.gamma[h], h)
                 for h in plan.helpers]
    blocks, tags = repair.reconstruct_node(plan, shipments)
    repair.refresh_manifest(manifest, plan)
    payloads[args.node] = NodePayload(blocks, tags,
                                      payloads[args.node].aux, keys.k_e)
    _save_store(root, manifest, keys, payloads)
    print(f"rebuilt node {args.node} ({args.mode}) from helpers {plan.helpers}")
    return 0


def cmd_extract(args) -> int:
    from . import extractor
    manifest, keys, payloads = _load_store(Path(args.dir))
    params = manifest.params
    rng = np.random.default_rng(_seed(args))
    node_rng = np.random.default_rng(rng.integers(2**63))
    p = payloads[args.node]

    def oracle(chal: Challenge):
        proof, _ = audit.gen_proof(p.blocks, p.tags, chal, keys.k_e, p.aux,
                                   node_rng, params, strict=False)
        if args.epsilon and node_rng.random() < args.epsilon:
            junk = node_rng.integers(0, 256, size=proof.ciphertext.c_bar.shape,
                                     dtype=np.uint8)
            proof = Proof(ncrypt.Ciphertext(junk, proof.ciphertext.nonce,
                                            proof.ciphertext.p),
                          proof.pad, proof.tag)
        return proof

    report = extractor.extract_node(oracle, manifest, args.node, keys.k_e,
                                    keys.k_v, p.aux, rng, rounds=args.rounds)
    match = all(np.array_equal(a.vec, b.vec)
                for a, b in zip(report.blocks, p.blocks))
    print(f"extracted {len(report.blocks)} blocks in {report.queries} queries "
          f"({report.discarded} discarded); store match: {match}")
    return 0 if match else 1


def cmd_bench(args) -> int:
    n = args.block_kb * 1024
    m, C, ell = args.m, args.challenge, args.ell
    lam = args.lam
    params = SystemParams(n=n, m=m, N=1, M=C, P=1, Q=1, ell=ell,
                          lambda_bits=lam)
    rng = np.random.default_rng(_seed(args))
    keys = audit.keygen(params, rng)
    fid = b"bench"

    # synthetic store: each stored block is one scaled source block, so the
    # manifest is cheap to build but proofs still verify honestly
    sources = []
    src_tags = []
    for i in range(m):
        vec = np.zeros(n + m, dtype=np.uint8)
        vec[:n] = rng.integers(0, 256, size=n, dtype=np.uint8)
        vec[n + i] = 1
        blk = CodedBlock(vec, n, m)
        sources.append(blk)
        src_tags.append(spacemac.mac(keys.k_v, fid, blk, ell))
    src_tags = np.stack(src_tags)
    rows = np.zeros((C, m), dtype=np.uint8)
    blocks, tags = [], []
    for j in range(C):
        i = j % m
        a = int(rng.integers(1, 256))
        rows[j, i] = a
        blocks.append(CodedBlock(field.vec_scale(a, sources[i].vec), n, m))
        tags.append(audit.taggen(rows[j], src_tags))
    manifest = FileManifest(file_id="bench", params=params, residual_len=0,
                            block_lengths=[n - 2] * m,
                            node_coeffs={0: rows},
                            logical_order=list(range(m)))
    aux = ncrypt.setup(keys.k_e, keys.k_v, fid, params)

    gen_times, ver_times = [], []
    gen_mults = ver_mults = 0
    for t in range(args.trials):
        chal = audit.gen_challenge(manifest, 0, C, rng)
        mask = ncrypt.precompute_mask(keys.k_e, fid, aux, rng, lam)
        with field.counter:
            t0 = time.perf_counter()
            proof, gstats = audit.gen_proof(blocks, tags, chal, keys.k_e, aux,
                                            rng, params, mask=mask)
            t1 = time.perf_counter()
            ok, vstats = audit.verify_proof(keys.k_v, manifest, chal, proof)
            t2 = time.perf_counter()
        if not ok:
            raise RuntimeError("benchmark proof rejected")
        gen_times.append((t1 - t0) * 1e3)
        ver_times.append((t2 - t1) * 1e3)
        gen_mults, ver_mults = gstats.block_mults, vstats.mults

    overhead = (lam // 8 + ell + 2) / n
    report = {
        "params": {"n": n, "m": m, "C": C, "ell": ell, "lambda_bits": lam},
        "gen_ms_median": round(statistics.median(gen_times), 3),
        "gen_ms_mean": round(statistics.fmean(gen_times), 3),
        "verify_ms_median": round(statistics.median(ver_times), 3),
        "verify_ms_mean": round(statistics.fmean(ver_times), 3),
        "gen_proof_mults": gen_mults,
        "gen_proof_mults_expected": C * n,
        "verify_proof_mults": ver_mults,
        "verify_proof_mults_expected": C * m + ell * (n + m),
        "proof_bytes": proof.wire_size(),
        "overhead_ratio": round(overhead, 6),
    }
    print(json.dumps(report, indent=1))
    print(f"gen_proof median {report['gen_ms_median']} ms, "
          f"verify_proof median {report['verify_ms_median']} ms, "
          f"mults {gen_mults} / {ver_mults}")
    return 0


def cmd_scenario(args) -> int:
    scenario = json.loads(Path(args.file).read_text())
    rejects = run_scenario(scenario, sys.stdout)
    return 0 if rejects == 0 else 1


# ------------------------------------------------------------------ main

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ncaudit",
                                description="network-coded storage auditing")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("setup", help="encode a file across nodes")
    s.add_argument("--file", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--layout", choices=["evenodd4", "random"], default="evenodd4")
    s.add_argument("--n", type=int, default=1024)
    s.add_argument("--m", type=int, default=4)
    s.add_argument("--nodes", type=int, default=4)
    s.add_argument("--ell", type=int, default=1)
    s.add_argument("--lam", type=int, default=128)
    s.add_argument("--seed")
    s.set_defaults(func=cmd_setup)

    s = sub.add_parser("audit", help="run audit rounds against one node")
    s.add_argument("--dir", required=True)
    s.add_argument("--node", type=int, default=0)
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--rounds", type=int, default=1)
    s.add_argument("--seed")
    s.set_defaults(func=cmd_audit)

    s = sub.add_parser("corrupt", help="flip one stored symbol")
    s.add_argument("--dir", required=True)
    s.add_argument("--node", type=int, required=True)
    s.add_argument("--block", type=int, default=0)
    s.add_argument("--position", type=int, default=0)
    s.add_argument("--delta", type=int, default=1)
    s.set_defaults(func=cmd_corrupt)

    s = sub.add_parser("repair", help="rebuild a node from the others")
    s.add_argument("--dir", required=True)
    s.add_argument("--node", type=int, required=True)
    s.add_argument("--mode", choices=["exact", "functional"], default="exact")
    s.add_argument("--seed")
    s.set_defaults(func=cmd_repair)

    s = sub.add_parser("extract", help="recover a node's blocks from audits")
    s.add_argument("--dir", required=True)
    s.add_argument("--node", type=int, default=0)
    s.add_argument("--rounds", type=int, default=15)
    s.add_argument("--epsilon", type=float, default=0.0)
    s.add_argument("--seed")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("bench", help="time gen/verify and count multiplications")
    s.add_argument("--block-kb", type=int, default=4)
    s.add_argument("--m", type=int, default=500)
    s.add_argument("--challenge", type=int, default=300)
    s.add_argument("--ell", type=int, default=10)
    s.add_argument("--lam", type=int, default=80)
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--seed")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("scenario", help="run a declarative fault scenario")
    s.add_argument("--file", required=True)
    s.set_defaults(func=cmd_scenario)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except (UsageError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # pragma: no cover - defensive
        print(f"internal failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
