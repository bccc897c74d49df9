#!/usr/bin/env python3
"""Print guessing-attack odds over press counts and tolerances next to the passkey bound."""
from switchpair.adversary import GuessingParams, guessing_space, passkey_baseline

print(f"passkey baseline: {passkey_baseline():.3e}")
print("tau_ms  " + "  ".join(f"n={n:<9d}" for n in range(3, 9)))
for tau in (50, 80, 120, 160, 200):
    probs = [1 / guessing_space(GuessingParams(8.0, tau, n)) for n in range(3, 9)]
    print(f"{tau:6d}  " + "  ".join(f"{p:.3e}" for p in probs))
