"""
A neural decoder for the five-qubit code
========================================

Train the 5 x 100 ReLU network (batch 100, 1000 epochs, learning rate 0.01,
5000 samples) on MAP-labelled syndromes of a biased channel and check what it
learned.  Takes about a minute.
"""

from __future__ import annotations

import numpy as np

from mlqec.codes import five_qubit_code
from mlqec.decoders import build_lookup_table, build_map_table
from mlqec.nn import TrainConfig
from mlqec.nn_decoder import evaluate_decoder, fit_decoder
from mlqec.pauli import ChannelParams

five = five_qubit_code()
params = ChannelParams(0.3, 0.015, 0.015)

fit = fit_decoder(five, params, TrainConfig(seed=0))
print("loss: first epoch", round(fit.history[0], 4), " last epoch", round(fit.history[-1], 5))

# %%
# Per syndrome, compare the network's correction with the exact MAP table.
table = build_map_table(five, params)
agree = 0
for s, e in table.items():
    bits = np.array([int(c) for c in s], np.uint8)
    got = fit.decoder(bits)
    agree += got == e
    print(s, e, got, "" if got == e else "<- differs")
print(agree, "/ 16 syndromes match MAP")

# %%
# Monte Carlo failure rates on the same error stream.
for name, dec in (("nn", fit.decoder), ("lookup", build_lookup_table(five)), ("map", table)):
    print(name, evaluate_decoder(dec, five, params, 25000, np.random.default_rng(7)))
