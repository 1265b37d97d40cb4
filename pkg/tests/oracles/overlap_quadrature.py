"""Independent quadrature oracle for the 1-D Gaussian overlap integrals.

Integrates phi_n(x) phi_m(x) exp(-x^2 sigma^2 / 2w^2) directly (x in units of
the oscillator length sigma) with adaptive Gauss-Legendre quadrature in
extended precision. phi_n comes from the normalized Hermite-function
recurrence, not from the hypergeometric closed form under test.

Run as a script to regenerate ``tests/data/overlap_oracle.json``.
"""

import json
import math
import sys
from pathlib import Path

import mpmath as mp

N_MAX = 40
RATIOS = (0.1, 1.0, 10.0)
# Extra digits beyond the magnitude of the result.
GUARD_DIGITS = 22
OUTPUT = Path(__file__).resolve().parent.parent / "data" / "overlap_oracle.json"


def quadrature_overlap(n, m, ratio, dps):
    """I_{n,m} for sigma / w = ``ratio``, with sigma = 1."""
    with mp.workdps(dps):
        s2 = mp.mpf(ratio) ** 2 / 2
        top = max(n, m)
        c = mp.pi ** mp.mpf(-0.25)
        up = [mp.sqrt(mp.mpf(2) / k) if k else 0 for k in range(top + 1)]
        down = [mp.sqrt(mp.mpf(k - 1) / k) if k else 0 for k in range(top + 1)]

        def integrand(x):
            p0 = c * mp.exp(-x * x / 2)
            p1 = mp.sqrt(2) * x * p0
            vals = {0: p0, 1: p1}
            for k in range(2, top + 1):
                p0, p1 = p1, up[k] * x * p1 - down[k] * p0
                vals[k] = p1
            return vals[n] * vals[m] * mp.exp(-s2 * x * x)

        edge = math.sqrt(2 * top + 1) + 8
        # Integrand is even when n + m is even.
        return 2 * mp.quad(integrand, mp.linspace(0, edge, 5), method="gauss-legendre")


def oracle_value(n, m, ratio):
    """Raise the working precision until two successive results agree.

    Small results come from heavy cancellation under the integral, so the
    precision needed grows with -log10 of the answer.
    """
    dps = 30
    previous = quadrature_overlap(n, m, ratio, dps)
    while True:
        magnitude = max(0, -int(mp.floor(mp.log10(abs(previous))))) if previous != 0 else dps
        dps = max(dps + 10, magnitude + GUARD_DIGITS)
        current = quadrature_overlap(n, m, ratio, dps)
        if current != 0 and abs(current - previous) <= mp.mpf(10) ** (-(GUARD_DIGITS - 4)) * abs(current):
            return float(current)
        previous = current


def generate(path=OUTPUT):
    entries = []
    for ratio in RATIOS:
        for n in range(N_MAX + 1):
            for m in range(n, N_MAX + 1, 2):
                entries.append([ratio, n, m, oracle_value(n, m, ratio)])
            print(f"ratio {ratio}: row {n} done", file=sys.stderr, flush=True)
    payload = {"n_max": N_MAX, "ratios": list(RATIOS), "entries": entries}
    path.write_text(json.dumps(payload) + "\n")


if __name__ == "__main__":
    generate()
