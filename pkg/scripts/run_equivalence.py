"""Driver vs brute-force verdicts over the corpus, with randomised counter blocks."""

import argparse
import random
import time

from catalytic.corpus import CORPUS
from catalytic.verify import equivalence_sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c", type=int, nargs="+", default=[3, 4, 6])
    ap.add_argument("--machines", nargs="*", default=None, help="corpus names (default: all valid)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--set-S", dest="S", type=int, default=None)
    ap.add_argument("--unsafe-small-s", action="store_true")
    args = ap.parse_args()

    names = args.machines or [n for n, e in CORPUS.items() if e.valid]
    failed = 0
    for name in names:
        entry = CORPUS[name]
        for c in args.c:
            rng = random.Random(f"{args.seed}:{name}:{c}")
            start = time.perf_counter()
            rep = equivalence_sweep(entry.build(c), entry.inputs,
                                    counters=lambda x, tau, k, B: [rng.getrandbits(B) for _ in range(k)],
                                    S=args.S, unsafe_small_s=args.unsafe_small_s)
            failed += not rep.passed
            print(f"{name:14s} c={c} runs={rep.checked:4d} agree={rep.details['agree']:4d} "
                  f"restored={rep.details['restored']:4d} {time.perf_counter() - start:6.2f}s"
                  + ("" if rep.passed else f" FAIL {rep.witness}"))
    raise SystemExit(1 if failed else 0)


if __name__ == "__main__":
    main()
