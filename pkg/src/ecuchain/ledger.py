"""Appendable-block ledger: one block per identity, hash-linked entries.

Appending needs no consensus round; it is gated only by signature and
ownership checks, and block headers are decoupled from the entry list so
old entries can move to external archive storage without breaking block
integrity.

Link discipline: an entry's ``prev_link`` is the SHA-256 of the preceding
entry's *content* (payload bytes and entry timestamp, not its own
prev_link), or the block header hash for the first entry. Keeping the
predecessor's prev_link out of the link input means pruning can re-anchor
the first retained entry to the header without disturbing any other link,
while tamper evidence is preserved because every entry's timestamp must
equal its payload's signed timestamp and every payload carries a
signature.

Pruning keeps the last two entries (previous and current state). Removed
entries move to the archive under the block's external address; the first
retained entry's pre-relink bytes are archived too, so the earliest
archive record per sequence number is always the entry's original bytes
and an auditor can replay the full original chain.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional

from .crypto import (
    DIGEST_LEN,
    PUBLIC_KEY_LEN,
    ZERO_DIGEST,
    Digest,
    PublicKey,
    sha256,
    verify,
)
from .transactions import (
    Transaction,
    decode_transaction,
    tx_signer,
    tx_timestamp,
    tx_vehicle,
)
from .wire import U64, Reader, WireError, encode_bytes, encode_str, encode_u64

LEDGER_MAGIC = b"ECUL1"


class LedgerError(ValueError):
    """Violation of a ledger precondition (duplicate block, bad signature...)."""


class ArchiveError(RuntimeError):
    """Archive storage could not be written or read."""


@dataclass(frozen=True)
class BlockHeader:
    owner_pk: PublicKey
    prev_header_hash: Digest
    created_ts: int
    external_address: str

    def to_bytes(self) -> bytes:
        return b"".join(
            (
                encode_bytes(self.owner_pk),
                encode_bytes(self.prev_header_hash),
                encode_u64(self.created_ts),
                encode_str(self.external_address),
            )
        )


def header_hash(header: BlockHeader) -> Digest:
    return sha256(header.to_bytes())


@dataclass(frozen=True)
class LedgerEntry:
    payload: Transaction
    prev_link: Digest
    entry_ts: int

    def to_bytes(self) -> bytes:
        return b"".join(
            (
                encode_bytes(self.payload.to_bytes()),
                encode_bytes(self.prev_link),
                encode_u64(self.entry_ts),
            )
        )


def entry_link(entry: LedgerEntry) -> Digest:
    """Link target for the entry's successor: hash of payload and timestamp."""
    return sha256(encode_bytes(entry.payload.to_bytes()) + encode_u64(entry.entry_ts))


@dataclass(frozen=True)
class AppendableBlock:
    """Header plus hash-linked entries. ``archived_count`` tracks how many
    entries have been pruned to the archive (bookkeeping only, never
    serialized: archive files carry their own sequence numbers).
    """

    header: BlockHeader
    entries: tuple[LedgerEntry, ...]
    archived_count: int = 0

    def to_bytes(self) -> bytes:
        parts = [self.header.to_bytes(), encode_u64(len(self.entries))]
        parts.extend(e.to_bytes() for e in self.entries)
        return b"".join(parts)


def read_entry(r: Reader) -> LedgerEntry:
    payload = decode_transaction(r.read_bytes())
    return LedgerEntry(
        payload=payload, prev_link=r.read_fixed(DIGEST_LEN), entry_ts=r.read_u64()
    )


def read_block(r: Reader) -> AppendableBlock:
    header = BlockHeader(
        owner_pk=r.read_fixed(PUBLIC_KEY_LEN),
        prev_header_hash=r.read_fixed(DIGEST_LEN),
        created_ts=r.read_u64(),
        external_address=r.read_str(),
    )
    count = r.read_u64()
    if count > 10_000_000:
        raise WireError(f"implausible entry count {count}")
    entries = tuple(read_entry(r) for _ in range(count))
    return AppendableBlock(header=header, entries=entries)


def decode_block(data: bytes) -> AppendableBlock:
    r = Reader(data)
    block = read_block(r)
    r.finish()
    return block


def validate_block(block: AppendableBlock) -> bool:
    """True iff the header anchor, every entry link, every entry timestamp
    and every payload signature verify. Never raises.
    """
    try:
        expected = header_hash(block.header)
        for entry in block.entries:
            if entry.prev_link != expected:
                return False
            if entry.entry_ts != tx_timestamp(entry.payload):
                return False
            owner = tx_vehicle(entry.payload)
            if owner is not None and owner != block.header.owner_pk:
                return False
            signer, sig = tx_signer(entry.payload)
            if not verify(signer, entry.payload.signing_bytes(), sig):
                return False
            expected = entry_link(entry)
    except Exception:
        return False
    return True


def validate_block_bytes(data: bytes) -> bool:
    try:
        block = decode_block(data)
    except WireError:
        return False
    return validate_block(block)


def append_entry(block: AppendableBlock, tx: Transaction) -> AppendableBlock:
    """Block with ``tx`` appended; rejects bad signatures and entries
    addressed to a different owner.
    """
    signer, sig = tx_signer(tx)
    if not verify(signer, tx.signing_bytes(), sig):
        raise LedgerError("signature")
    owner = tx_vehicle(tx)
    if owner is not None and owner != block.header.owner_pk:
        raise LedgerError("ownership")
    prev = entry_link(block.entries[-1]) if block.entries else header_hash(block.header)
    entry = LedgerEntry(payload=tx, prev_link=prev, entry_ts=tx_timestamp(tx))
    return replace(block, entries=block.entries + (entry,))


class Archive:
    """Append-only record store keyed by external address.

    Record layout on disk: 8-byte big-endian sequence number followed by
    the entry's wire bytes. Multiple records may share a sequence number
    (pruning logs an entry's pre-relink bytes under its own sequence); the
    earliest record per sequence number is the entry's original bytes.
    """

    def append_many(self, address: str, records: Iterable[tuple[int, bytes]]) -> None:
        raise NotImplementedError

    def read(self, address: str) -> list[tuple[int, bytes]]:
        raise NotImplementedError


class MemoryArchive(Archive):
    def __init__(self):
        self._store: dict[str, list[tuple[int, bytes]]] = {}

    def append_many(self, address, records):
        self._store.setdefault(address, []).extend(records)

    def read(self, address):
        return list(self._store.get(address, []))

    def addresses(self) -> list[str]:
        return sorted(self._store)


class FileArchive(Archive):
    """One append-only file per address under ``root``."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, address: str) -> Path:
        return self.root / (sha256(address.encode("utf-8")).hex()[:24] + ".arc")

    def append_many(self, address, records):
        blob = b"".join(U64.pack(seq) + data for seq, data in records)
        try:
            with open(self._path(address), "ab") as fh:
                fh.write(blob)
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise ArchiveError(f"archive write failed: {exc}") from exc

    def read(self, address):
        path = self._path(address)
        if not path.exists():
            return []
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise ArchiveError(f"archive read failed: {exc}") from exc
        records = []
        pos = 0
        while pos < len(data):
            if pos + 8 > len(data):
                raise ArchiveError("truncated archive record header")
            (seq,) = U64.unpack_from(data, pos)
            pos += 8
            inner = Reader(data[pos:])
            try:
                read_entry(inner)
            except WireError as exc:
                raise ArchiveError(f"corrupt archive record: {exc}") from exc
            consumed = len(data) - pos - inner.remaining
            records.append((seq, data[pos : pos + consumed]))
            pos += consumed
        return records


def prune_to_two(
    block: AppendableBlock, archive: Archive
) -> tuple[AppendableBlock, int]:
    """Move all but the last two entries to the archive.

    The removed entries are archived with their current bytes; the first
    retained entry is then re-anchored to the header hash, with its
    pre-relink bytes logged to the archive first. Returns the pruned block
    and the number of entries archived. On archive failure the block is
    returned unchanged by the caller (the exception propagates before any
    block mutation).
    """
    if len(block.entries) <= 2:
        return block, 0
    removed = block.entries[:-2]
    retained = block.entries[-2:]
    base = block.archived_count
    records = [(base + i, entry.to_bytes()) for i, entry in enumerate(removed)]
    keep_first = retained[0]
    relinked = replace(keep_first, prev_link=header_hash(block.header))
    if relinked.prev_link != keep_first.prev_link:
        records.append((base + len(removed), keep_first.to_bytes()))
    archive.append_many(block.header.external_address, records)
    pruned = replace(
        block,
        entries=(relinked, retained[1]),
        archived_count=base + len(removed),
    )
    return pruned, len(removed)


def reconstruct_history(
    block: AppendableBlock, archive: Archive
) -> list[LedgerEntry]:
    """Rebuild and verify the block's full original entry sequence from the
    archive plus the retained entries.

    The earliest archive record per sequence number holds the entry's
    original bytes; retained entries past the archived range are original
    by construction except the first retained entry, whose original bytes
    (if it was ever re-anchored) are in the archive. Raises LedgerError if
    the sequence has gaps or the original link chain does not verify.
    """
    originals: dict[int, LedgerEntry] = {}
    for seq, data in archive.read(block.header.external_address):
        if seq not in originals:
            r = Reader(data)
            entry = read_entry(r)
            r.finish()
            originals[seq] = entry
    for offset, entry in enumerate(block.entries):
        originals.setdefault(block.archived_count + offset, entry)
    total = block.archived_count + len(block.entries)
    if sorted(originals) != list(range(total)):
        raise LedgerError("archive sequence has gaps or strays")
    sequence = [originals[i] for i in range(total)]
    expected = header_hash(block.header)
    for i, entry in enumerate(sequence):
        if entry.prev_link != expected:
            raise LedgerError(f"original link chain broken at entry {i}")
        expected = entry_link(entry)
    return sequence


class Ledger:
    """All blocks of one tier, keyed by owner public key. Owned and mutated
    by a single node actor; blocks handed out are immutable snapshots.
    """

    def __init__(self):
        self.blocks: dict[PublicKey, AppendableBlock] = {}
        self.creation_order: list[PublicKey] = []
        self._last_header_hash: Digest = ZERO_DIGEST

    def __len__(self) -> int:
        return len(self.blocks)

    def create_block(
        self,
        owner_pk: PublicKey,
        genesis: Transaction,
        ts: int,
        external_address: str,
    ) -> AppendableBlock:
        """Open a block for ``owner_pk`` holding ``genesis`` as first entry.
        Header chains to the most recently created block's header.
        """
        if owner_pk in self.blocks:
            raise LedgerError("block exists")
        owner = tx_vehicle(genesis)
        if owner is not None and owner != owner_pk:
            raise LedgerError("genesis not addressed to owner")
        header = BlockHeader(
            owner_pk=owner_pk,
            prev_header_hash=self._last_header_hash,
            created_ts=ts,
            external_address=external_address,
        )
        block = append_entry(AppendableBlock(header=header, entries=()), genesis)
        self.blocks[owner_pk] = block
        self.creation_order.append(owner_pk)
        self._last_header_hash = header_hash(header)
        return block

    def append(self, owner_pk: PublicKey, tx: Transaction) -> AppendableBlock:
        block = self.blocks.get(owner_pk)
        if block is None:
            raise LedgerError("unknown block")
        updated = append_entry(block, tx)
        self.blocks[owner_pk] = updated
        return updated

    def replace_block(self, owner_pk: PublicKey, block: AppendableBlock) -> None:
        if owner_pk not in self.blocks:
            raise LedgerError("unknown block")
        self.blocks[owner_pk] = block

    def lookup(self, pk: PublicKey) -> Optional[AppendableBlock]:
        return self.blocks.get(pk)

    def serialize(self) -> bytes:
        parts = [encode_bytes(LEDGER_MAGIC), encode_u64(len(self.creation_order))]
        for pk in self.creation_order:
            parts.append(encode_bytes(self.blocks[pk].to_bytes()))
        return b"".join(parts)

    def serialized_size(self) -> int:
        return len(self.serialize())

    def validate(self) -> bool:
        """Every block validates and the header chain follows creation order."""
        prev = ZERO_DIGEST
        for pk in self.creation_order:
            block = self.blocks.get(pk)
            if block is None or block.header.owner_pk != pk:
                return False
            if block.header.prev_header_hash != prev:
                return False
            if not validate_block(block):
                return False
            prev = header_hash(block.header)
        return len(self.creation_order) == len(self.blocks)


def deserialize_ledger(data: bytes) -> Ledger:
    r = Reader(data)
    if r.read_bytes() != LEDGER_MAGIC:
        raise WireError("bad ledger magic")
    count = r.read_u64()
    ledger = Ledger()
    for _ in range(count):
        block = decode_block(r.read_bytes())
        pk = block.header.owner_pk
        if pk in ledger.blocks:
            raise WireError("duplicate block owner")
        ledger.blocks[pk] = block
        ledger.creation_order.append(pk)
        ledger._last_header_hash = header_hash(block.header)
    r.finish()
    return ledger
