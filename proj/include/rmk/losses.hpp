#pragma once

#include "rmk/tensor.hpp"
#include "rmk/types.hpp"

namespace rmk {

// Loss surfaces and their exact gradients. Scalars are means over the batch;
// log arguments are floored at 1e-7 (gradient zero where the floor is active).

// Mean over the batch of the summed squared message error.
double decoder_loss(const MessageBatch& m, const DecodedBatch& v);
// Plain sum over all items (the severity search maximizes this per sub-batch).
double decoder_loss_sum(const MessageBatch& m, const DecodedBatch& v);
// d(decoder_loss)/d(values) = (2/b) (v - m). `inv_batch` lets the caller use a
// different normalizer than the sub-batch size (1/b of the full batch when
// subsets are decoded separately).
Tensor decoder_loss_grad(const MessageBatch& m, const DecodedBatch& v, double inv_batch);

// Mean over the batch of the per-pixel mean squared error.
double image_loss(const Tensor& x, const Tensor& x_wm);
// d(image_loss)/d(x_wm), scaled by `weight`.
Tensor image_loss_grad(const Tensor& x, const Tensor& x_wm, double weight);

// Mean over the batch of log(1 - C(x_wm)).
double adversarial_loss(const Tensor& wm_scores);
// d(adversarial_loss)/d(scores), scaled by `weight`.
Tensor adversarial_loss_grad(const Tensor& wm_scores, double weight);

// Mean over the batch of log(1 - C(x)) + log(C(x_wm)); the critic update
// minimizes this.
double discriminator_loss(const Tensor& cover_scores, const Tensor& wm_scores);
Tensor discriminator_loss_grad_cover(const Tensor& cover_scores);
Tensor discriminator_loss_grad_wm(const Tensor& wm_scores);

inline constexpr double kLogFloor = 1e-7;

} // namespace rmk
