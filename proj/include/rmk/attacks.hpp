#pragma once

#include "rmk/config.hpp"
#include "rmk/rng.hpp"
#include "rmk/tensor.hpp"
#include "rmk/types.hpp"

#include <vector>

namespace rmk {

// Per-batch-item uniforms drawn once and reused across every severity in a
// search, so the argmax compares severities under identical randomness.
// Which fields are filled depends on the attack kind; blur/jpeg/identity
// consume nothing.
struct AttackDraw {
    std::vector<double> off_y, off_x;  // placement uniforms in [0,1), size b
    Tensor pixel_u;                    // (b, h, w) uniforms for dropout masks
};

AttackDraw sample_attack_draw(AttackKind kind, int b, int h, int w, RngState& rng);

// Everything the backward pass needs. Forward fills the fields its kind uses.
struct AttackCache {
    AttackKind kind = AttackKind::identity;
    double severity = 0.0;
    int in_h = 0, in_w = 0;
    std::vector<int> oy, ox;  // crop offsets per item
    int side_h = 0, side_w = 0;
    Tensor mask;      // (b, h, w) binary keep-mask (cropout/dropout)
    Tensor kernel;    // (k, k) blur weights
    Tensor preclamp;  // pre-clamp values (jpeg)
};

// Differentiable forward at a fixed (severity, draw). Output spatial size can
// shrink (crop); values stay in [0,1]. Throws SeverityDomainError outside the
// legal domain, ContractError on shape misuse.
Tensor attack_forward(AttackKind kind, const Tensor& x_wm, const Tensor& x_cover, double severity,
                      const AttackDraw& draw, AttackCache& cache);

// d(loss)/d(x_wm) for the cached application; gout has the output's shape,
// gin is overwritten with x_wm's shape. Cover images never need gradients.
void attack_backward(const AttackCache& cache, const Tensor& gout, Tensor& gin);

// Spec-level dispatch: samples a fresh draw from rng and applies the attack.
ImageBatch apply(const AttackSpec& spec, const ImageBatch& x_wm, const ImageBatch& x_cover,
                 double severity, RngState& rng);

// Blur kernel size for a given sigma: 2*ceil(2*sigma)+1.
int blur_kernel_size(double sigma);
// Zigzag coefficients kept at quality q: ceil(64*q/100).
int jpeg_coeffs_kept(double q);

// Tie-break direction for equal search losses: true when `a` is the more
// severe of two equal-loss severities (smaller keep-ratio / larger sigma /
// lower quality).
bool more_severe(AttackKind kind, double a, double b);

} // namespace rmk
