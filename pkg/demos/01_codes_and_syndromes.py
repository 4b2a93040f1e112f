"""
Stabilizer codes and syndromes
==============================

Build the two codes used throughout: the perfect [[5,1]] code and the
hypergraph product of the Hamming [7,4] parity-check matrix, then look at
what a syndrome is.
"""

from __future__ import annotations

import numpy as np

from mlqec import gf2
from mlqec.codes import five_qubit_code, hypergraph_product, hypergraph_product_code, syndrome
from mlqec.pauli import PauliString, symplectic_product

# %%
# The classical starting point: a 3 x 7 parity-check matrix whose column j
# is the binary expansion of j + 1.
h = gf2.hamming_parity_check(3)
print(h)
print("rank", gf2.rank(h))

# %%
# The hypergraph product turns H into two orthogonal check matrices.
hx, hz = hypergraph_product(h)
print("H_X", hx.shape, "H_Z", hz.shape)
print("H_X H_Z^T is zero:", gf2.mat_mul(hx, gf2.transpose(hz)).is_zero())

code = hypergraph_product_code(h)
print(f"[[{code.n},{code.k}]] with {code.n_generators} generators")

# %%
# The five-qubit code, generator by generator.
five = five_qubit_code()
for g in five.generators():
    print(g)

# generators commute pairwise
print(all(symplectic_product(a, b) == 0 for a in five.generators() for b in five.generators()))

# %%
# A syndrome records which generators anticommute with the error.
for text in ("IIIII", "XIIII", "IZIII", "YIIII", "XXIII"):
    e = PauliString.from_string(text)
    print(text, syndrome(five, e))

# %%
# Every one of the 15 single-qubit errors has its own nonzero syndrome;
# together with the identity they use all 16 syndromes, which is what makes
# the code perfect.
seen = {syndrome(five, PauliString.single(5, q, L)).tobytes() for q in range(5) for L in "XYZ"}
print(len(seen), "distinct syndromes from 15 weight-1 errors")

# %%
# On the 58-qubit code a random error gives a 42-bit syndrome.
rng = np.random.default_rng(0)
e = PauliString(rng.random(58) < 0.05, rng.random(58) < 0.05)
print(e, e.weight)
print("".join(map(str, syndrome(code, e))))
