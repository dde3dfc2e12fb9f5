# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled hash kernels backed by OpenSSL's SHA-256.

Must stay byte-for-byte compatible with ``_pure``; tests compare both
backends on random inputs. One digest context is reused for the whole
tree, which is where the win over per-call hashlib objects comes from.
"""

from cpython.bytes cimport PyBytes_AsString, PyBytes_FromStringAndSize, PyBytes_Size
from libc.stdlib cimport free, malloc
from libc.string cimport memcpy

cdef extern from "openssl/evp.h" nogil:
    ctypedef struct EVP_MD:
        pass
    ctypedef struct EVP_MD_CTX:
        pass
    const EVP_MD *EVP_sha256()
    EVP_MD_CTX *EVP_MD_CTX_new()
    void EVP_MD_CTX_free(EVP_MD_CTX *ctx)
    int EVP_DigestInit_ex(EVP_MD_CTX *ctx, const EVP_MD *type, void *impl)
    int EVP_DigestUpdate(EVP_MD_CTX *ctx, const void *d, size_t cnt)
    int EVP_DigestFinal_ex(EVP_MD_CTX *ctx, unsigned char *md, unsigned int *s)

DEF DIGEST_LEN = 32


cdef int _tree(EVP_MD_CTX *ctx, unsigned char *level, size_t n) nogil:
    # Leaf buffer already holds the raw firmware digests; hash them into
    # leaves in place, then collapse level by level. Returns 0 on success.
    cdef unsigned char buf[2 * DIGEST_LEN + 1]
    cdef const EVP_MD *md = EVP_sha256()
    cdef size_t i, m, right
    cdef unsigned int outlen
    cdef unsigned long long idx
    cdef int k
    if EVP_DigestInit_ex(ctx, md, NULL) != 1:
        return -1
    buf[0] = 0x00
    for i in range(n):
        idx = i
        for k in range(8):
            buf[1 + k] = <unsigned char> ((idx >> (8 * (7 - k))) & 0xFF)
        memcpy(buf + 9, level + i * DIGEST_LEN, DIGEST_LEN)
        if (EVP_DigestInit_ex(ctx, NULL, NULL) != 1
                or EVP_DigestUpdate(ctx, buf, DIGEST_LEN + 9) != 1
                or EVP_DigestFinal_ex(ctx, level + i * DIGEST_LEN, &outlen) != 1):
            return -1
    buf[0] = 0x01
    while n > 1:
        m = (n + 1) // 2
        for i in range(m):
            right = 2 * i + 1 if 2 * i + 1 < n else 2 * i
            memcpy(buf + 1, level + 2 * i * DIGEST_LEN, DIGEST_LEN)
            memcpy(buf + 1 + DIGEST_LEN, level + right * DIGEST_LEN, DIGEST_LEN)
            if (EVP_DigestInit_ex(ctx, NULL, NULL) != 1
                    or EVP_DigestUpdate(ctx, buf, 2 * DIGEST_LEN + 1) != 1
                    or EVP_DigestFinal_ex(ctx, level + i * DIGEST_LEN, &outlen) != 1):
                return -1
        n = m
    return 0


def merkle_root(list digests not None):
    """Merkle root over 32-byte firmware digests in ECU-index order."""
    cdef size_t n = len(digests)
    if n == 0:
        raise ValueError("empty ECU state")
    cdef unsigned char *level = <unsigned char *> malloc(n * DIGEST_LEN)
    if level == NULL:
        raise MemoryError()
    cdef EVP_MD_CTX *ctx = NULL
    cdef size_t i
    cdef object d
    cdef int rc
    try:
        for i in range(n):
            d = digests[i]
            if not isinstance(d, bytes) or PyBytes_Size(d) != DIGEST_LEN:
                raise ValueError("firmware digest must be 32 bytes")
            memcpy(level + i * DIGEST_LEN, PyBytes_AsString(d), DIGEST_LEN)
        ctx = EVP_MD_CTX_new()
        if ctx == NULL:
            raise MemoryError()
        with nogil:
            rc = _tree(ctx, level, n)
        if rc != 0:
            raise RuntimeError("SHA-256 failure")
        return PyBytes_FromStringAndSize(<char *> level, DIGEST_LEN)
    finally:
        if ctx != NULL:
            EVP_MD_CTX_free(ctx)
        free(level)
