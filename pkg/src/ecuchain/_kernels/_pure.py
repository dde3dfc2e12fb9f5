"""Pure-Python hash kernels.

Reference implementation of the hot loops; the compiled module in
``_native.pyx`` must produce byte-identical output.
"""

from __future__ import annotations

import hashlib
import struct

LEAF_PREFIX = b"\x00"
NODE_PREFIX = b"\x01"


def merkle_root(digests: list[bytes]) -> bytes:
    """Merkle root over 32-byte firmware digests in ECU-index order.

    Leaf i hashes ``0x00 || i as u64 big-endian || digest_i``; interior
    nodes hash ``0x01 || left || right``. A level with an odd node count
    duplicates its last node.
    """
    n = len(digests)
    if n == 0:
        raise ValueError("empty ECU state")
    sha256 = hashlib.sha256
    pack = struct.Struct(">Q").pack
    level = [sha256(LEAF_PREFIX + pack(i) + d).digest() for i, d in enumerate(digests)]
    while len(level) > 1:
        if len(level) % 2:
            level.append(level[-1])
        level = [
            sha256(NODE_PREFIX + level[i] + level[i + 1]).digest()
            for i in range(0, len(level), 2)
        ]
    return level[0]
