"""A walking tour of the external memory: addressing, sharpening,
interpolation, reading, and gated writing.

Run:  python3 demos/01_external_memory_basics.py
"""
import numpy as np

from memtag.memory import (AddressingParams, ExternalMemory, address,
                           interpolate_weight, read, reset, write)
from memtag.tensor_ops import sigmoid

rng = np.random.default_rng(0)
p, m, n = 6, 4, 5  # hidden size, slot width, slot count

params = AddressingParams(
    W_k=rng.normal(scale=0.5, size=(m, p)), b_k=np.zeros(m),
    W_beta=rng.normal(scale=0.5, size=(1, p)), b_beta=np.zeros(1),
    W_g=rng.normal(scale=0.5, size=(1, p)), b_g=np.zeros(1),
    W_v=rng.normal(scale=0.5, size=(m, p)), b_v=np.zeros(m),
    W_he=rng.normal(scale=0.5, size=(n, p)), b_he=np.zeros(n))

# A fresh memory has identical slots, so addressing is uniform.
mem = ExternalMemory(slot_dim=m, slot_count=n)
h = rng.normal(size=p)
w_hat, beta, key = address(mem, params, h)
print("fresh memory, addressing weights:", np.round(w_hat, 4))
print("sharpening beta:", round(beta, 4))

# Write something; the read weight decides which slots change.
w = interpolate_weight(mem.w_prev, w_hat, g=0.9)
mem = write(mem, params, h, w)
print("\nafter one write, slot norms:", np.round(np.linalg.norm(mem.M, axis=0), 4))

# Now the slots differ, so a new key prefers the similar ones.
h2 = rng.normal(size=p)
w_hat2, beta2, _ = address(mem, params, h2)
print("second addressing, weights:", np.round(w_hat2, 4))

# Reading blends slots by the carried weight.
content = read(mem)
print("\nread content:", np.round(content, 4))

# The forget gate couples erasure to reading: unread slots never change.
w_onehot = np.zeros(n)
w_onehot[2] = 1.0
before = mem.M.copy()
mem2 = write(mem, params, h2, w_onehot)
changed = np.abs(mem2.M - before).max(axis=0)
print("\none-hot write at slot 2, per-slot |change|:", np.round(changed, 4))

print("\nreset restores the constant memory:", reset(mem2).M[0, :])
