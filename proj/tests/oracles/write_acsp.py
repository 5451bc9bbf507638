#!/usr/bin/env python3
"""Writes an ACSP dump and manifest with struct.pack, independent of the C++ writer.

usage: write_acsp.py OUT COUNT
Value j of record i is ((i * 16384 + j) % 1000 - 500) / 256, exact in float32.
"""
import json
import struct
import sys


def main():
    out, count = sys.argv[1], int(sys.argv[2])
    with open(out, "wb") as f:
        f.write(b"ACSP" + struct.pack("<HIBH", 1, count, 8, 2048))
        for i in range(count):
            vals = [((i * 16384 + j) % 1000 - 500) / 256.0 for j in range(16384)]
            f.write(struct.pack("<16384f", *vals))
    manifest = {
        "prompt_ids": ["obj/For/len/%03d" % i for i in range(count)],
        "model_id": "oracle/model",
        "model_revision": "0123abcd",
        "tokenizer_id": "oracle/tokenizer",
        "seed": 5,
    }
    with open(out + ".json", "w") as f:
        json.dump(manifest, f)


if __name__ == "__main__":
    main()
