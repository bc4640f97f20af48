"""Last-digit transition frequencies of consecutive primes above 5.

    python scripts/transitions.py --primes 1000000 [--primes 100000000 ...]
"""
import argparse
import os
import time

from dcf.primes import DIGITS, transition_matrix


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--primes", type=int, action="append", default=None)
    args = ap.parse_args()
    for n in args.primes or [10**4, 10**5, 10**6, 10**7]:
        # 10^8 primes need a sieve bound past the default ceiling
        os.environ.setdefault("DCF_MAX_LIMIT", str(3 * 10**9))
        t0 = time.perf_counter()
        m = transition_matrix(n)
        f = m.frequencies()
        print(f"{n} primes (last {m.last_prime}), {time.perf_counter() - t0:.1f}s")
        print("      " + "".join(f"{d:>8}" for d in DIGITS))
        for i, src in enumerate(DIGITS):
            print(f"  {src} ->" + "".join(f"{x:8.4f}" for x in f[i]))


if __name__ == "__main__":
    main()
