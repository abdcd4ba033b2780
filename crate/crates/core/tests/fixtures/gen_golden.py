"""Independent encoder for the record byte layout; writes golden_chain.txt.

Each output line: index, hex of the canonical bytes, hex of the SHA-256.
Regenerate with `python3 gen_golden.py > golden_chain.txt`.
"""
import hashlib
import struct


def s(x):
    b = x.encode("utf-8")
    return struct.pack(">I", len(b)) + b


def record(principal, event_id, kind, initiator, occurred, participants,
           messages, resource, action, outcome, tags, recorded, prev):
    out = s(principal) + s(event_id) + s(kind) + s(initiator)
    out += struct.pack(">q", occurred)
    out += struct.pack(">I", len(participants)) + b"".join(s(p) for p in participants)
    out += struct.pack(">I", len(messages))
    for seq, snd, rcv, payload in messages:
        out += struct.pack(">Q", seq) + s(snd) + s(rcv) + hashlib.sha256(payload).digest()
    out += s(resource) + s(action) + bytes([outcome])
    tags = sorted(t.encode() for t in tags)
    out += struct.pack(">I", len(tags)) + b"".join(struct.pack(">I", len(t)) + t for t in tags)
    out += struct.pack(">q", recorded) + prev
    return out


prev = bytes(32)
rows = [
    ("alice", "evt-1", "login", "alice", 1_700_000_000_000, ["alice", "idp"],
     [(0, "alice", "idp", b"hello"), (1, "idp", "alice", b"token")],
     "incident/42", "read", 0, [], 1_700_000_000_500),
    ("alice", "evt-2", "report.submit", "alice", 1_700_000_060_000, ["alice", "svc", "zeta"],
     [(0, "alice", "svc", b"report body")],
     "report/q3", "write", 1, ["urgent", "night", "Z"], 1_700_000_060_000),
    ("alice", "evt-é", "asset.delete", "bob", -5, ["bob", "alice"],
     [],
     "asset/*", "delete", 2, ["über"], 1_700_000_061_000),
]
for i, row in enumerate(rows):
    b = record(*row, prev)
    h = hashlib.sha256(b).digest()
    print(f"{i}\t{b.hex()}\t{h.hex()}")
    prev = h
