"""Privacy-preserving integrity auditing for network-coded storage."""

from .audit import (Challenge, KeyMaterial, NodePayload, Proof, gen_challenge,
                    gen_proof, keygen, setup_file, taggen, verify_proof)
from .blocks import (CodedBlock, FileManifest, SystemParams, UndecodableError,
                     combine_blocks, decode_file, decode_source_data,
                     make_source_blocks)
from .cluster import Cluster, Fault, spawn_cluster
from .dynamics import append_block, delete_block, insert_block, update_block, verify_with_deltas
from .extractor import ExtractionError, extract_node
from .ncrypt import AuxiliaryElements, Ciphertext, dec, enc, precompute_mask
from .repair import (PlanningError, RepairPlan, make_repair_blocks,
                     plan_exact_repair, plan_functional_repair,
                     reconstruct_node, refresh_manifest)
from .spacemac import combine_tags, mac, verify

__version__ = "0.1.0"

__all__ = [
    "AuxiliaryElements", "Challenge", "Ciphertext", "CodedBlock", "Cluster",
    "ExtractionError", "Fault", "FileManifest", "KeyMaterial", "NodePayload",
    "PlanningError", "Proof", "RepairPlan", "SystemParams", "UndecodableError",
    "append_block", "combine_blocks", "combine_tags", "dec",
    "decode_file", "decode_source_data", "delete_block", "enc",
    "extract_node", "gen_challenge", "gen_proof", "insert_block", "keygen",
    "mac", "make_repair_blocks", "make_source_blocks", "plan_exact_repair",
    "plan_functional_repair", "precompute_mask", "reconstruct_node",
    "refresh_manifest", "setup_file", "spawn_cluster", "taggen",
    "update_block", "verify", "verify_proof", "verify_with_deltas",
]
