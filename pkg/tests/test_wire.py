from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ecuchain.wire import Reader, WireError, encode_bytes, encode_str, encode_u64


def test_u64_layout():
    assert encode_u64(0) == bytes.fromhex("00000008" + "00" * 8)
    assert encode_u64(1) == bytes.fromhex("00000008" + "00" * 7 + "01")
    assert encode_u64(2**64 - 1) == bytes.fromhex("00000008" + "ff" * 8)


def test_u64_range_checked():
    with pytest.raises(WireError):
        encode_u64(-1)
    with pytest.raises(WireError):
        encode_u64(2**64)


def test_bytes_layout():
    assert encode_bytes(b"") == b"\x00\x00\x00\x00"
    assert encode_bytes(b"ab") == b"\x00\x00\x00\x02ab"


def test_reader_roundtrip():
    buf = encode_bytes(b"payload") + encode_u64(77) + encode_str("héllo")
    r = Reader(buf)
    assert r.read_bytes() == b"payload"
    assert r.read_u64() == 77
    assert r.read_str() == "héllo"
    r.finish()


def test_reader_rejects_trailing_bytes():
    r = Reader(encode_u64(1) + b"\x00")
    r.read_u64()
    with pytest.raises(WireError):
        r.finish()


def test_reader_rejects_truncation():
    buf = encode_bytes(b"abcdef")
    with pytest.raises(WireError):
        Reader(buf[:3]).read_bytes()
    with pytest.raises(WireError):
        Reader(buf[:-2]).read_bytes()


def test_reader_rejects_wrong_integer_width():
    with pytest.raises(WireError):
        Reader(encode_bytes(b"1234")).read_u64()


def test_read_fixed_enforces_length():
    r = Reader(encode_bytes(b"x" * 31))
    with pytest.raises(WireError):
        r.read_fixed(32)


def test_reader_rejects_invalid_utf8():
    with pytest.raises(WireError):
        Reader(encode_bytes(b"\xff\xfe")).read_str()


@given(
    fields=st.lists(
        st.one_of(
            st.binary(max_size=64),
            st.integers(min_value=0, max_value=2**64 - 1),
            st.text(max_size=32),
        ),
        max_size=12,
    )
)
def test_field_sequence_roundtrip(fields):
    encoded = b"".join(
        encode_bytes(f)
        if isinstance(f, bytes)
        else encode_u64(f)
        if isinstance(f, int)
        else encode_str(f)
        for f in fields
    )
    r = Reader(encoded)
    for f in fields:
        if isinstance(f, bytes):
            assert r.read_bytes() == f
        elif isinstance(f, int):
            assert r.read_u64() == f
        else:
            assert r.read_str() == f
    r.finish()
