#!/usr/bin/env python3
"""Writes capability-token test vectors computed with an independent stack
(pyca/cryptography Ed25519, hashlib SHA-256, a local varint encoder)."""

import hashlib
import json
import sys

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat


def varint(n):
    out = bytearray()
    while True:
        b = n & 0x7F
        n >>= 7
        if n:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


def string(s):
    raw = s.encode("utf-8")
    return varint(len(raw)) + raw


def body(subject, rights, issued_at, expires_at, issuer):
    out = b"\x01" + string(subject) + varint(len(rights))
    for r in sorted(set(rights), key=lambda x: x.encode("utf-8")):
        out += string(r)
    return out + varint(issued_at) + varint(expires_at) + string(issuer)


KEYS = {
    "hq": "9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60",
    "relay": "4ccd089b28ff96da9db6c346ec114e0f5b8a319f35aba624da8cf6ed4fb8a6fb",
}

TOKENS = [
    ("n1", [], 0, 1000, "hq"),
    ("n2", ["publish:alerts"], 0, 60000, "hq"),
    ("n3", ["critical", "publish:*"], 500, 120000, "relay"),
    ("uav-7", ["publish:tracks", "publish:alerts", "store:write"], 1, 2**40, "relay"),
    ("", ["x"], 0, 1, "hq"),
    ("né", ["publish:bé"], 300, 299 + 2**21, "hq"),
]


def main():
    keys = {}
    private = {}
    for kid, seed in KEYS.items():
        sk = Ed25519PrivateKey.from_private_bytes(bytes.fromhex(seed))
        private[kid] = sk
        pub = sk.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
        keys[kid] = {"seed_hex": seed, "public_hex": pub.hex()}
    vectors = []
    for subject, rights, issued, expires, issuer in TOKENS:
        b = body(subject, rights, issued, expires, issuer)
        sig = private[issuer].sign(b)
        vectors.append({
            "subject": subject,
            "rights": rights,
            "issued_at": issued,
            "expires_at": expires,
            "issuer": issuer,
            "body_hex": b.hex(),
            "token_id": hashlib.sha256(b).hexdigest()[:32],
            "signature_hex": sig.hex(),
            "encoded_hex": (b + sig).hex(),
        })
    json.dump({"keys": keys, "tokens": vectors}, sys.stdout, indent=2, ensure_ascii=False)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
