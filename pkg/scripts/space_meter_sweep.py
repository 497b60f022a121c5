"""Peak auxiliary bits of one compute-or-compress round against tree size on chain machines."""

import argparse

import numpy as np

from catalytic.coc import SpaceMeter, VirtualTape, block_count, compute_or_compress, make_view
from catalytic.corpus import chain_machine


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--S", type=int, nargs="+", default=[64, 4096])
    ap.add_argument("--B", type=int, default=30)
    ap.add_argument("--pad-to", type=int, default=1100, help="state count, keeps W fixed")
    ap.add_argument("--max-length", type=int, default=1023)
    ap.add_argument("--counter", type=int, default=5)
    args = ap.parse_args()

    lengths = sorted({1, 2, 3} | {2**i for i in range(args.max_length.bit_length())} | {args.max_length})
    for S in args.S:
        rows = []
        for length in lengths:
            view = make_view(chain_machine(length, c=4, pad_to=args.pad_to), "0", B=args.B, S=S)
            k = block_count(view)
            tape = VirtualTape.create(4, 0, args.B, k, [args.counter] * k)
            meter = SpaceMeter()
            res = compute_or_compress(view, tape, tape.payload, tape.block(0), meter)
            rows.append((length + 1, meter.peak, type(res).__name__))
            print(f"S={S:6d} vertices={length + 1:5d} branch={type(res).__name__:10s} peak={meter.peak}")
        for branch in sorted({r[2] for r in rows}):
            pts = [(v, p) for v, p, b in rows if b == branch]
            if len(pts) > 1:
                slope = np.polyfit(*zip(*pts), 1)[0]
                print(f"S={S} {branch}: slope {slope:.2e} bits/vertex over {len(pts)} sizes")


if __name__ == "__main__":
    main()
