#!/usr/bin/env python3
"""
eBCH Code Lister
Utility script to list the extended BCH codes that can be built for each length
"""

import json
import os
import sys
from typing import Dict, List

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "src"))

from core.codes import bch_generator_polynomials, default_primitive_poly  # noqa: E402


def achievable_codes(m: int) -> List[Dict]:
    """
    All narrow-sense eBCH codes of length 2^m, one per distinct dimension
    """
    best: Dict[int, int] = {}
    for t, (_, dim) in bch_generator_polynomials(m).items():
        best[dim] = max(best.get(dim, 0), t)
    n = 1 << m
    return [
        {"n": n, "k": k, "t": t, "d_min": 2 * t + 2, "rate": round(k / n, 4)}
        for k, t in sorted(best.items(), reverse=True)
    ]


def display_codes(m: int, codes: List[Dict]):
    poly = default_primitive_poly(m)
    print(f"m = {m}: primitive polynomial {bin(poly)} (0x{poly:x})")
    print("-" * 50)
    for code in codes:
        print(f"  eBCH({code['n']:5d},{code['k']:5d})  t={code['t']:3d}  d_min={code['d_min']:4d}  "
              f"rate={code['rate']:.4f}")
    print()


def save_codes_to_file(table: Dict[int, List[Dict]], filename: str = "ebch_codes.json"):
    try:
        with open(filename, "w") as f:
            json.dump(table, f, indent=2)
        print(f"Code table saved to {filename}")
    except OSError as e:
        print(f"Failed to save to file: {e}")


def main():
    degrees = [int(arg) for arg in sys.argv[1:]] or [3, 4, 5, 6, 7]
    if any(not 2 <= m <= 12 for m in degrees):
        print("Usage: python list_ebch_codes.py [m ...]   (2 <= m <= 12)")
        sys.exit(1)

    table = {}
    for m in degrees:
        table[1 << m] = achievable_codes(m)
        display_codes(m, table[1 << m])

    save_codes_to_file(table)


if __name__ == "__main__":
    main()
