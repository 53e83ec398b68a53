"""Freeze high-precision minimizers of nu e^{-2p} + sinh^2 p (1 + sinh 2p).

Run once with mpmath available; writes ../data/p_opt_frozen.json.  The test
suite only reads the JSON, so mpmath is not a test dependency.
"""
import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 50
NUS = ["0.25", "1", "10", "49", "100", "1000", "10000", "1000000"]


def slope(p, nu):
    return mp.diff(lambda q: nu * mp.e ** (-2 * q) + mp.sinh(q) ** 2 * (1 + mp.sinh(2 * q)), p)


def minimizer(nu):
    hi = mp.asinh(mp.sqrt(nu))
    return mp.findroot(lambda p: slope(p, nu), (mp.mpf("1e-30"), hi), solver="anderson")


if __name__ == "__main__":
    out = {nu: mp.nstr(minimizer(mp.mpf(nu)), 30) for nu in NUS}
    path = Path(__file__).resolve().parent.parent / "data" / "p_opt_frozen.json"
    path.write_text(json.dumps(out, indent=2) + "\n")
    print(json.dumps(out, indent=2))
