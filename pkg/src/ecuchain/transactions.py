"""Transaction variants, challenge/response records and verdicts.

Every signed structure exposes ``signing_bytes()`` (canonical wire bytes
with the signature field omitted) and ``to_bytes()`` (signing bytes plus
the signature appended). Each encoding starts with the variant tag so a
signature can never be replayed across types.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union

from .crypto import DIGEST_LEN, PUBLIC_KEY_LEN, Digest, PublicKey, Signature
from .ecu import EcuRecord
from .wire import Reader, WireError, encode_bytes, encode_str, encode_u64

TAG_GENESIS = 0
TAG_UPDATE = 1
TAG_REQUEST = 2
TAG_CHALLENGE_RECORD = 3


class Verdict(Enum):
    """Outcome of verifying a challenge response at a roadside unit."""

    VALID = "Valid"
    UNKNOWN_VEHICLE = "UnknownVehicle"
    BAD_SIGNATURE = "BadSignature"
    STATE_MISMATCH = "StateMismatch"
    SUBSET_MISMATCH = "SubsetMismatch"
    STALE_TIMESTAMP = "StaleTimestamp"


def _encode_ecu_list(records: tuple[EcuRecord, ...]) -> bytes:
    parts = [encode_u64(len(records))]
    for rec in records:
        parts.append(encode_u64(rec.ecu_id))
        parts.append(encode_bytes(rec.firmware_digest))
        parts.append(encode_u64(rec.last_write_ts))
    return b"".join(parts)


def _read_ecu_list(r: Reader) -> tuple[EcuRecord, ...]:
    count = r.read_u64()
    if count > 1_000_000:
        raise WireError(f"implausible ECU list length {count}")
    return tuple(
        EcuRecord(
            ecu_id=r.read_u64(),
            firmware_digest=r.read_fixed(DIGEST_LEN),
            last_write_ts=r.read_u64(),
        )
        for _ in range(count)
    )


@dataclass(frozen=True)
class GenesisTx:
    """Vehicle registration: full ECU inventory plus its Merkle state root,
    signed by the manufacturer that assembled the vehicle.
    """

    state_root: Digest
    ts: int
    ecu_list: tuple[EcuRecord, ...]
    vehicle_pk: PublicKey
    maker_pk: PublicKey
    sig: Signature

    def signing_bytes(self) -> bytes:
        return b"".join(
            (
                encode_u64(TAG_GENESIS),
                encode_bytes(self.state_root),
                encode_u64(self.ts),
                _encode_ecu_list(self.ecu_list),
                encode_bytes(self.vehicle_pk),
                encode_bytes(self.maker_pk),
            )
        )

    def to_bytes(self) -> bytes:
        return self.signing_bytes() + encode_bytes(self.sig)


@dataclass(frozen=True)
class UpdateTx:
    """Authorized maintenance: the new state root after a firmware change,
    signed by the manufacturer or technician that performed it.
    """

    new_root: Digest
    ts: int
    vehicle_pk: PublicKey
    maintainer_pk: PublicKey
    metadata: str
    sig: Signature

    def signing_bytes(self) -> bytes:
        return b"".join(
            (
                encode_u64(TAG_UPDATE),
                encode_bytes(self.new_root),
                encode_u64(self.ts),
                encode_bytes(self.vehicle_pk),
                encode_bytes(self.maintainer_pk),
                encode_str(self.metadata),
            )
        )

    def to_bytes(self) -> bytes:
        return self.signing_bytes() + encode_bytes(self.sig)


@dataclass(frozen=True)
class RequestTx:
    """Insurer evidence request, stored on the authority audit block."""

    insurer_pk: PublicKey
    query: str
    ts: int
    sig: Signature

    def signing_bytes(self) -> bytes:
        return b"".join(
            (
                encode_u64(TAG_REQUEST),
                encode_bytes(self.insurer_pk),
                encode_str(self.query),
                encode_u64(self.ts),
            )
        )

    def to_bytes(self) -> bytes:
        return self.signing_bytes() + encode_bytes(self.sig)


@dataclass(frozen=True)
class ChallengeResponse:
    """Vehicle's answer to a challenge: current state root plus the raw
    records of the requested ECU subset, signed by the vehicle.
    """

    state_root: Digest
    subset: tuple[EcuRecord, ...]
    ts: int
    vehicle_pk: PublicKey
    sig: Signature

    def signing_bytes(self) -> bytes:
        return b"".join(
            (
                encode_bytes(self.state_root),
                _encode_ecu_list(self.subset),
                encode_u64(self.ts),
                encode_bytes(self.vehicle_pk),
            )
        )

    def to_bytes(self) -> bytes:
        return self.signing_bytes() + encode_bytes(self.sig)


def read_challenge_response(r: Reader) -> ChallengeResponse:
    return ChallengeResponse(
        state_root=r.read_fixed(DIGEST_LEN),
        subset=_read_ecu_list(r),
        ts=r.read_u64(),
        vehicle_pk=r.read_fixed(PUBLIC_KEY_LEN),
        sig=r.read_bytes(),
    )


def decode_challenge_response(data: bytes) -> ChallengeResponse:
    r = Reader(data)
    resp = read_challenge_response(r)
    r.finish()
    return resp


@dataclass(frozen=True)
class ChallengeRecordTx:
    """A verified challenge response countersigned by the recording RSU."""

    response: ChallengeResponse
    rsu_pk: PublicKey
    rsu_sig: Signature

    def signing_bytes(self) -> bytes:
        return b"".join(
            (
                encode_u64(TAG_CHALLENGE_RECORD),
                encode_bytes(self.response.to_bytes()),
                encode_bytes(self.rsu_pk),
            )
        )

    def to_bytes(self) -> bytes:
        return self.signing_bytes() + encode_bytes(self.rsu_sig)


Transaction = Union[GenesisTx, UpdateTx, RequestTx, ChallengeRecordTx]


@dataclass(frozen=True)
class Challenge:
    """RSU's twofold challenge: prove the state root and reveal the raw
    records of a randomly selected ECU subset. Challenges are unsigned;
    freshness relies on the response-timestamp check.
    """

    rsu_pk: PublicKey
    vehicle_pk: PublicKey
    subset_indices: tuple[int, ...]
    issued_ts: int


def tx_timestamp(tx: Transaction) -> int:
    """The variant's canonical timestamp (ledger entries must carry it)."""
    if isinstance(tx, ChallengeRecordTx):
        return tx.response.ts
    return tx.ts


def tx_signer(tx: Transaction) -> tuple[PublicKey, Signature]:
    """(public key, signature) pair that must verify over signing_bytes()."""
    if isinstance(tx, GenesisTx):
        return tx.maker_pk, tx.sig
    if isinstance(tx, UpdateTx):
        return tx.maintainer_pk, tx.sig
    if isinstance(tx, RequestTx):
        return tx.insurer_pk, tx.sig
    return tx.rsu_pk, tx.rsu_sig


def tx_vehicle(tx: Transaction) -> PublicKey | None:
    """The vehicle a transaction is addressed to; None for audit-only txs."""
    if isinstance(tx, (GenesisTx, UpdateTx)):
        return tx.vehicle_pk
    if isinstance(tx, ChallengeRecordTx):
        return tx.response.vehicle_pk
    return None


def decode_transaction(data: bytes) -> Transaction:
    r = Reader(data)
    tag = r.read_u64()
    tx: Transaction
    if tag == TAG_GENESIS:
        tx = GenesisTx(
            state_root=r.read_fixed(DIGEST_LEN),
            ts=r.read_u64(),
            ecu_list=_read_ecu_list(r),
            vehicle_pk=r.read_fixed(PUBLIC_KEY_LEN),
            maker_pk=r.read_fixed(PUBLIC_KEY_LEN),
            sig=r.read_bytes(),
        )
    elif tag == TAG_UPDATE:
        tx = UpdateTx(
            new_root=r.read_fixed(DIGEST_LEN),
            ts=r.read_u64(),
            vehicle_pk=r.read_fixed(PUBLIC_KEY_LEN),
            maintainer_pk=r.read_fixed(PUBLIC_KEY_LEN),
            metadata=r.read_str(),
            sig=r.read_bytes(),
        )
    elif tag == TAG_REQUEST:
        tx = RequestTx(
            insurer_pk=r.read_fixed(PUBLIC_KEY_LEN),
            query=r.read_str(),
            ts=r.read_u64(),
            sig=r.read_bytes(),
        )
    elif tag == TAG_CHALLENGE_RECORD:
        tx = ChallengeRecordTx(
            response=decode_challenge_response(r.read_bytes()),
            rsu_pk=r.read_fixed(PUBLIC_KEY_LEN),
            rsu_sig=r.read_bytes(),
        )
    else:
        raise WireError(f"unknown transaction tag {tag}")
    r.finish()
    return tx
