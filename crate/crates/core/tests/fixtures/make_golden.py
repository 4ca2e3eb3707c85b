"""Writes golden_v1.foal with a writer independent of the Rust crate.

Layout: b"FOAL", u32 version, u64 sample count, u32 block count,
u32 block dim, u8 labeled flag, 3 zero bytes, then per sample a u32 label
and block-major little-endian float32 values.
"""
import struct

SAMPLES = [
    (7, [[0.5, -1.25, 3.0], [1e-3, 0.0, -0.0]]),
    (8, [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]),
    (9, [[-7.5, 0.125, 65504.0], [1.5e-8, -2.0, 0.333333343267]]),
]

with open("golden_v1.foal", "wb") as f:
    f.write(b"FOAL")
    f.write(struct.pack("<IQIIB3x", 1, len(SAMPLES), 2, 3, 1))
    for label, blocks in SAMPLES:
        f.write(struct.pack("<I", label))
        for block in blocks:
            f.write(struct.pack("<3f", *block))
