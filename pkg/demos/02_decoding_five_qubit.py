"""
Lookup, MAP and small-set-flip on [[5,1]]
=========================================

Compare the three classical decoders exactly (by enumerating all 4^5
errors) and by Monte Carlo, on a symmetric and a strongly biased channel.
"""

from __future__ import annotations

import numpy as np

from mlqec.codes import five_qubit_code, syndromes
from mlqec.decoders import SmallSetFlip, build_lookup_table, build_map_table, exact_failure_rate
from mlqec.nn_decoder import evaluate_decoder
from mlqec.pauli import ChannelParams, all_paulis, error_probabilities

five = five_qubit_code()
lookup = build_lookup_table(five)

# %%
# The lookup table: minimum-weight error per syndrome.
for s, e in lookup.items():
    print(s, e)

# %%
# Symmetric channel.  For the lookup table the failure probability has a
# closed form, 1 - [(1-3q)^5 + 15 q (1-3q)^4].
q = 0.0157895
params = ChannelParams.symmetric(q)
print("exact  ", exact_failure_rate(lookup, five, params))
print("closed ", 1 - ((1 - 3 * q) ** 5 + 15 * q * (1 - 3 * q) ** 4))
print("sampled", evaluate_decoder(lookup, five, params, 25000, np.random.default_rng(1)))

# %%
# A biased channel: X errors dominate.  The MAP table now prefers some
# weight-2 X-only corrections over weight-1 Y or Z corrections.
biased = ChannelParams(0.3, 0.015, 0.015)
map_table = build_map_table(five, biased)
for (s, a), (_, b) in zip(lookup.items(), map_table.items()):
    if a != b:
        print(s, "lookup", a, " map", b)

# %%
# Small-set-flip is deterministic per syndrome, so its exact failure rate can
# be computed the same way, by decoding every syndrome once.
ssf = SmallSetFlip(five)
x, z = all_paulis(5)


def ssf_exact(p):
    cx, cz = ssf.decode_batch(syndromes(five, x, z))
    ok = np.all(cx == x, axis=1) & np.all(cz == z, axis=1)
    return 1 - error_probabilities(x, z, p)[ok].sum()


for p in (params, biased):
    print(p)
    print("  lookup", round(exact_failure_rate(lookup, five, p), 5))
    print("  map   ", round(exact_failure_rate(build_map_table(five, p), five, p), 5))
    print("  ssf   ", round(ssf_exact(p), 5))
