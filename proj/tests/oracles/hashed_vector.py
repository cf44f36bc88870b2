#!/usr/bin/env python3
"""Second implementation of the hashed vector, written from docs/hashed_vector.md.

Usage: hashed_vector.py <dump-binary>
The binary prints "<key>\t<C>\t<hex double> ..." lines; every value must match
this implementation bit for bit.
"""
import math
import subprocess
import sys

MASK = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & MASK
    return h


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next() >> 11) * 2.0**-53


def hashed_vector(key: bytes, channels: int) -> list:
    rng = SplitMix64(fnv1a64(key))
    scale = math.sqrt(3.0)
    x = []
    for _ in range(channels):
        s = rng.uniform()
        s += rng.uniform()
        s += rng.uniform()
        s += rng.uniform()
        x.append((s - 2.0) * scale)
    acc = 0.0
    for v in x:
        acc += v * v
    n = math.sqrt(acc)
    return [v / n for v in x]


def main() -> int:
    out = subprocess.run([sys.argv[1]], check=True, capture_output=True, text=True).stdout
    checked = 0
    for line in out.splitlines():
        key, channels, *values = line.split("\t")
        want = hashed_vector(key.encode(), int(channels))
        got = [float.fromhex(v) for v in values]
        if got != want:
            print(f"mismatch for key {key!r} C={channels}")
            return 1
        checked += 1
    if checked == 0:
        print("no vectors in dump")
        return 1
    print(f"{checked} vectors match bit for bit")
    return 0


if __name__ == "__main__":
    sys.exit(main())
