"""Contrastive training walkthrough: from labeled tokens to a retrieval space.

Run:  python3 demos/02_train_embeddings.py
"""

import numpy as np

from trendguard import SynthConfig, TrainConfig, embed_dataset, gen_synthetic, scl_loss, train
from trendguard.scl import ntxent_labels

# A synthetic corpus: each trend is a latent direction, members are noisy
# copies of it (per modality), negatives are isotropic.
dataset = gen_synthetic(SynthConfig(n_trends=6, size_range=(80, 120), neg_per_pos=1.0, seed=3))
members = dataset.positives
print(f"corpus: {len(members)} trend members across {len(dataset.trends)} trends, "
      f"{len(dataset.negatives)} negatives")

# The supervised contrastive loss treats every same-label sample in the
# 2N-view batch as a positive. With all-identical embeddings the inner
# softmax is uniform, so the loss hits its symmetric value exactly:
z = np.tile([1.0, 0.0], (8, 1))
print("symmetric batch loss:", scl_loss(z, np.tile(np.arange(4), 2), 0.1),
      "= 8*ln(7) =", 8 * np.log(7))

# Twin-only labels turn the same machinery into the self-supervised variant.
print("twin-only labels for N=4:", ntxent_labels(4))

config = TrainConfig(epochs=12, batch_n=32, learning_rate=3e-3, tau=0.1, out_dim=32, seed=0)
params, history = train(members, config, "single")
print(f"\nsingle-modal training: epoch loss {history[0]:.1f} -> {history[-1]:.1f}")

multi_params, multi_history = train(members, config, "multimodal")
print(f"cross-attention training: epoch loss {multi_history[0]:.1f} -> {multi_history[-1]:.1f}")

# A good retrieval space pulls same-trend members together. Measure the
# gap between intra-trend and inter-trend cosine after training.
store = embed_dataset(members, params, "single")
matrix = store.snapshot().matrix.astype(np.float64)
labels = np.array([r.label for r in members])
gram = matrix @ matrix.T
same = labels[:, None] == labels[None, :]
np.fill_diagonal(same, False)
off_diag = ~np.eye(len(labels), dtype=bool)
print(f"\nintra-trend cosine: {gram[same].mean():.3f}")
print(f"inter-trend cosine: {gram[~same & off_diag].mean():.3f}")
print("separation gap:", round(gram[same].mean() - gram[~same & off_diag].mean(), 3))
