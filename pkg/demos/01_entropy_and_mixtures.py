# %% [markdown]
# # Entropy and probability-weighted embeddings
#
# A next-token distribution can be fed back two ways: as the row of the
# sampled token, or as the expectation of all rows under the distribution.
# This script shows both on a tiny table, and how the visual anchor blends in.

# %%
import numpy as np

from lead import EmbeddingTable, SpecialTokenSet, entropy, expected_embedding, inject_anchor, lookup, softmax

rng = np.random.default_rng(0)
table = EmbeddingTable(rng.standard_normal((8, 4)), SpecialTokenSet.reserved(8))

# %% Confident versus uncertain steps
confident = softmax([6.0, 0, 0, 0, 0, 0, 0, 0])
uncertain = softmax([1.0, 0.9, 0.8, 0, 0, 0, 0, 0])
print(f"confident step: H = {entropy(confident):.3f} nats")
print(f"uncertain step: H = {entropy(uncertain):.3f} nats (max ln 8 = {np.log(8):.3f})")

# %% Discrete feedback keeps one row; latent feedback keeps the mixture
print("discrete :", lookup(table, int(np.argmax(uncertain))).round(3))
print("latent   :", expected_embedding(table, uncertain).round(3))

# %% Visual anchor: mean of the three vision special rows, mixed in with lambda
anchor = table.visual_anchor()
for lam in (0.0, 0.2, 0.4, 0.6):
    e = inject_anchor(expected_embedding(table, uncertain), anchor, lam)
    print(f"lambda={lam:.1f}: distance to anchor {np.linalg.norm(e - anchor):.3f}")
