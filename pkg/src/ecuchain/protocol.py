"""Protocol procedures: vehicle registration, authorized maintenance
updates, and the roadside challenge-response round.

Tier state lives in two containers. The authority tier holds the
validator keys, the allow-lists, a countersigned audit log and an
audit-only ledger for insurer requests. The roadside tier holds the
per-vehicle blocks plus the materialized verification profile for each
vehicle (expected state root, per-ECU registry, last recorded response
timestamp); the profile is what a roadside unit actually checks a
response against, and it survives pruning because pruned entries leave
the block.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import crypto
from .crypto import Digest, KeyPair, PublicKey, Signature
from .ecu import EcuRecord, EcuState, compute_state_root, subset_report
from .ledger import Archive, Ledger, MemoryArchive, append_entry, prune_to_two
from .transactions import (
    Challenge,
    ChallengeRecordTx,
    ChallengeResponse,
    GenesisTx,
    RequestTx,
    UpdateTx,
    Verdict,
)
from .wire import encode_bytes, encode_str, encode_u64

SUBSET_SIZE = 3


class ProtocolError(ValueError):
    """A protocol precondition was violated; the operation was rejected."""


def external_address(vehicle_pk: PublicKey) -> str:
    """Archive locator written into the vehicle's block header."""
    return "ar://" + vehicle_pk.hex()[:16]


# ---------------------------------------------------------------------------
# Tier state
# ---------------------------------------------------------------------------


@dataclass
class VehicleProfile:
    """What the roadside tier currently vouches for about one vehicle."""

    expected_root: Digest
    registry: dict[int, tuple[Digest, int]]  # ecu_id -> (digest, last_write_ts)
    ecu_count: int
    last_response_ts: Optional[int] = None


@dataclass
class RoadsideTier:
    """Shared lower-tier state: vehicle blocks, archive, profiles."""

    ledger: Ledger = field(default_factory=Ledger)
    archive: Archive = field(default_factory=MemoryArchive)
    profiles: dict[PublicKey, VehicleProfile] = field(default_factory=dict)


@dataclass(frozen=True)
class AuditEvent:
    """Countersigned record of a validator-approved tier event."""

    action: str
    subject_pk: PublicKey
    ts: int
    signatures: tuple[tuple[PublicKey, Signature], ...]

    @staticmethod
    def signing_bytes(action: str, subject_pk: PublicKey, ts: int) -> bytes:
        return encode_str(action) + encode_bytes(subject_pk) + encode_u64(ts)

    def verify(self, validators: Sequence[PublicKey]) -> bool:
        signed = {pk for pk, _ in self.signatures}
        if signed != set(validators):
            return False
        message = self.signing_bytes(self.action, self.subject_pk, self.ts)
        return all(crypto.verify(pk, message, sig) for pk, sig in self.signatures)


@dataclass
class AuthorityTier:
    """Upper-tier state run by the transport and legal authorities."""

    validators: tuple[KeyPair, ...]
    authorized_makers: set[PublicKey]
    authorized_insurers: set[PublicKey]
    ledger: Ledger = field(default_factory=Ledger)
    audit_pk: PublicKey = b""
    audit_log: list[AuditEvent] = field(default_factory=list)

    def countersign(self, action: str, subject_pk: PublicKey, ts: int) -> AuditEvent:
        message = AuditEvent.signing_bytes(action, subject_pk, ts)
        event = AuditEvent(
            action=action,
            subject_pk=subject_pk,
            ts=ts,
            signatures=tuple((v.public, v.sign(message)) for v in self.validators),
        )
        self.audit_log.append(event)
        return event


def new_authority_tier(
    validators: Sequence[KeyPair],
    authorized_makers: Sequence[PublicKey],
    authorized_insurers: Sequence[PublicKey],
    ts: int = 0,
) -> AuthorityTier:
    """Authority tier with an audit block (owned by the first validator) that
    stores insurer request transactions.
    """
    if not validators:
        raise ProtocolError("at least one validator required")
    tier = AuthorityTier(
        validators=tuple(validators),
        authorized_makers=set(authorized_makers),
        authorized_insurers=set(authorized_insurers),
    )
    anchor = validators[0]
    # The audit block is bootstrapped with a single-record genesis naming the
    # authority itself; request transactions append after it.
    state = EcuState(
        records=(
            EcuRecord(
                ecu_id=0,
                firmware_digest=crypto.sha256(b"authority-audit" + anchor.public),
                last_write_ts=ts,
            ),
        )
    )
    genesis = make_genesis(anchor, anchor.public, state, ts)
    tier.ledger.create_block(anchor.public, genesis, ts, "ar://authority-audit")
    tier.audit_pk = anchor.public
    return tier


# ---------------------------------------------------------------------------
# Registration and maintenance
# ---------------------------------------------------------------------------


def make_genesis(
    maker_keys: KeyPair, vehicle_pk: PublicKey, ecu_state: EcuState, ts: int
) -> GenesisTx:
    """Registration transaction: state root plus the full ECU inventory,
    signed by the maker.
    """
    root = compute_state_root(ecu_state).root
    unsigned = GenesisTx(
        state_root=root,
        ts=ts,
        ecu_list=ecu_state.records,
        vehicle_pk=vehicle_pk,
        maker_pk=maker_keys.public,
        sig=b"",
    )
    return GenesisTx(
        state_root=root,
        ts=ts,
        ecu_list=ecu_state.records,
        vehicle_pk=vehicle_pk,
        maker_pk=maker_keys.public,
        sig=maker_keys.sign(unsigned.signing_bytes()),
    )


def initialize_vehicle(
    authority: AuthorityTier, roadside: RoadsideTier, genesis: GenesisTx, ts: int
) -> None:
    """Validate a registration and open the vehicle's block in the roadside
    tier; all validators countersign the creation event.
    """
    if not crypto.verify(genesis.maker_pk, genesis.signing_bytes(), genesis.sig):
        raise ProtocolError("genesis signature invalid")
    if genesis.maker_pk not in authority.authorized_makers:
        raise ProtocolError("unauthorized maker")
    state = EcuState(records=genesis.ecu_list)
    if compute_state_root(state).root != genesis.state_root:
        raise ProtocolError("genesis state root does not match ECU list")
    if roadside.ledger.lookup(genesis.vehicle_pk) is not None:
        raise ProtocolError("vehicle already registered")
    roadside.ledger.create_block(
        genesis.vehicle_pk, genesis, ts, external_address(genesis.vehicle_pk)
    )
    roadside.profiles[genesis.vehicle_pk] = VehicleProfile(
        expected_root=genesis.state_root,
        registry={
            rec.ecu_id: (rec.firmware_digest, rec.last_write_ts)
            for rec in genesis.ecu_list
        },
        ecu_count=len(genesis.ecu_list),
    )
    authority.countersign("register", genesis.vehicle_pk, ts)


MAINT_METADATA = re.compile(
    r"^ecu=(\d+);action=([^;]*);digest=([0-9a-f]{64});ts=(\d+)$"
)


def maintenance_metadata(ecu_id: int, action: str, digest: Digest, ts: int) -> str:
    """Structured update metadata naming the ECU, the action, and the new
    per-ECU record so the roadside registry can be refreshed.
    """
    if ";" in action:
        raise ProtocolError("action must not contain ';'")
    return f"ecu={ecu_id};action={action};digest={digest.hex()};ts={ts}"


def parse_maintenance_metadata(metadata: str) -> Optional[tuple[int, Digest, int]]:
    m = MAINT_METADATA.match(metadata)
    if m is None:
        return None
    return int(m.group(1)), bytes.fromhex(m.group(3)), int(m.group(4))


def apply_upper_update(
    authority: AuthorityTier, roadside: RoadsideTier, update: UpdateTx
) -> None:
    """Validate an authorized maintenance update, append it to the vehicle's
    block and refresh the verification profile.
    """
    if not crypto.verify(update.maintainer_pk, update.signing_bytes(), update.sig):
        raise ProtocolError("update signature invalid")
    if update.maintainer_pk not in authority.authorized_makers:
        raise ProtocolError("unauthorized maintainer")
    block = roadside.ledger.lookup(update.vehicle_pk)
    if block is None:
        raise ProtocolError("unknown vehicle")
    appended = append_entry(block, update)
    pruned, _ = prune_to_two(appended, roadside.archive)
    roadside.ledger.replace_block(update.vehicle_pk, pruned)
    profile = roadside.profiles[update.vehicle_pk]
    profile.expected_root = update.new_root
    parsed = parse_maintenance_metadata(update.metadata)
    if parsed is not None:
        ecu_id, digest, ts = parsed
        if ecu_id in profile.registry:
            profile.registry[ecu_id] = (digest, ts)
    authority.countersign("update", update.vehicle_pk, update.ts)


# ---------------------------------------------------------------------------
# Challenge-response round
# ---------------------------------------------------------------------------


def issue_challenge(
    rsu_pk: PublicKey,
    vehicle_pk: PublicKey,
    ecu_count: int,
    rng: random.Random,
    ts: int,
) -> Challenge:
    """Twofold challenge: prove the state root and reveal min(3, N) randomly
    selected ECU records.
    """
    if ecu_count <= 0:
        raise ProtocolError("vehicle must have at least one ECU")
    k = min(SUBSET_SIZE, ecu_count)
    indices = tuple(rng.sample(range(ecu_count), k))
    return Challenge(
        rsu_pk=rsu_pk, vehicle_pk=vehicle_pk, subset_indices=indices, issued_ts=ts
    )


def build_response(
    vehicle_keys: KeyPair, state: EcuState, challenge: Challenge, ts: int
) -> ChallengeResponse:
    """Honest response: current state root plus the requested records,
    signed by the vehicle.
    """
    if challenge.vehicle_pk != vehicle_keys.public:
        raise ProtocolError("challenge addressed to a different vehicle")
    subset = tuple(subset_report(state, challenge.subset_indices))
    root = compute_state_root(state).root
    unsigned = ChallengeResponse(
        state_root=root, subset=subset, ts=ts, vehicle_pk=vehicle_keys.public, sig=b""
    )
    return ChallengeResponse(
        state_root=root,
        subset=subset,
        ts=ts,
        vehicle_pk=vehicle_keys.public,
        sig=vehicle_keys.sign(unsigned.signing_bytes()),
    )


def verify_response(
    roadside: RoadsideTier, challenge: Challenge, response: ChallengeResponse
) -> Verdict:
    """Classify a response. Checks run in a fixed order and the first
    failure wins: block existence, signature, timestamp freshness, state
    root, then the per-ECU subset comparison.
    """
    pk = response.vehicle_pk
    profile = roadside.profiles.get(pk)
    if roadside.ledger.lookup(pk) is None or profile is None:
        return Verdict.UNKNOWN_VEHICLE
    if pk != challenge.vehicle_pk:
        return Verdict.BAD_SIGNATURE
    if not crypto.verify(pk, response.signing_bytes(), response.sig):
        return Verdict.BAD_SIGNATURE
    if profile.last_response_ts is not None and response.ts <= profile.last_response_ts:
        return Verdict.STALE_TIMESTAMP
    if response.state_root != profile.expected_root:
        return Verdict.STATE_MISMATCH
    if tuple(rec.ecu_id for rec in response.subset) != challenge.subset_indices:
        return Verdict.SUBSET_MISMATCH
    for rec in response.subset:
        known = profile.registry.get(rec.ecu_id)
        if known != (rec.firmware_digest, rec.last_write_ts):
            return Verdict.SUBSET_MISMATCH
    return Verdict.VALID


def record_response(
    rsu_keys: KeyPair, roadside: RoadsideTier, response: ChallengeResponse
) -> ChallengeRecordTx:
    """Append the countersigned response to the vehicle's block and prune it
    back to two entries. Callers must have obtained a Valid verdict first.
    The ledger is only mutated after the archive write succeeds.
    """
    block = roadside.ledger.lookup(response.vehicle_pk)
    if block is None:
        raise ProtocolError("unknown vehicle")
    unsigned = ChallengeRecordTx(response=response, rsu_pk=rsu_keys.public, rsu_sig=b"")
    record = ChallengeRecordTx(
        response=response,
        rsu_pk=rsu_keys.public,
        rsu_sig=rsu_keys.sign(unsigned.signing_bytes()),
    )
    appended = append_entry(block, record)
    pruned, _ = prune_to_two(appended, roadside.archive)
    roadside.ledger.replace_block(response.vehicle_pk, pruned)
    roadside.profiles[response.vehicle_pk].last_response_ts = response.ts
    return record


# ---------------------------------------------------------------------------
# Reporting and insurer requests
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReportEvent:
    """Signed escalation of a non-valid verdict to the authorities."""

    rsu_pk: PublicKey
    vehicle_pk: PublicKey
    verdict: Verdict
    ts: int
    sig: Signature

    def signing_bytes(self) -> bytes:
        return (
            encode_bytes(self.rsu_pk)
            + encode_bytes(self.vehicle_pk)
            + encode_str(self.verdict.value)
            + encode_u64(self.ts)
        )

    def verify(self) -> bool:
        return crypto.verify(self.rsu_pk, self.signing_bytes(), self.sig)


def report_malicious(
    rsu_keys: KeyPair, vehicle_pk: PublicKey, verdict: Verdict, ts: int
) -> ReportEvent:
    """Signed report for delivery to the authorities; rejects Valid verdicts."""
    if verdict is Verdict.VALID:
        raise ProtocolError("nothing to report")
    unsigned = ReportEvent(
        rsu_pk=rsu_keys.public, vehicle_pk=vehicle_pk, verdict=verdict, ts=ts, sig=b""
    )
    return ReportEvent(
        rsu_pk=rsu_keys.public,
        vehicle_pk=vehicle_pk,
        verdict=verdict,
        ts=ts,
        sig=rsu_keys.sign(unsigned.signing_bytes()),
    )


def submit_request(
    insurer_keys: KeyPair, authority: AuthorityTier, query: str, ts: int
) -> RequestTx:
    """Store an insurer's evidence request on the authority audit block."""
    if insurer_keys.public not in authority.authorized_insurers:
        raise ProtocolError("unauthorized insurer")
    unsigned = RequestTx(insurer_pk=insurer_keys.public, query=query, ts=ts, sig=b"")
    request = RequestTx(
        insurer_pk=insurer_keys.public,
        query=query,
        ts=ts,
        sig=insurer_keys.sign(unsigned.signing_bytes()),
    )
    authority.ledger.append(authority.audit_pk, request)
    return request
