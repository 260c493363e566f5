#include "rmk/losses.hpp"

#include "rmk/errors.hpp"

#include <cmath>

namespace rmk {

namespace {

void require_same(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b))
        throw ContractError(std::string(what) + ": shape mismatch " + shape_string(a) + " vs " +
                            shape_string(b));
}

} // namespace

double decoder_loss_sum(const MessageBatch& m, const DecodedBatch& v) {
    require_same(m.bits, v.values, "decoder_loss");
    double sum = 0.0;
    for (std::size_t i = 0; i < m.bits.size(); ++i) {
        const double d = v.values[i] - m.bits[i];
        sum += d * d;
    }
    return sum;
}

double decoder_loss(const MessageBatch& m, const DecodedBatch& v) {
    return decoder_loss_sum(m, v) / static_cast<double>(m.batch());
}

Tensor decoder_loss_grad(const MessageBatch& m, const DecodedBatch& v, double inv_batch) {
    require_same(m.bits, v.values, "decoder_loss");
    Tensor g = Tensor::zeros(v.values.shape());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = 2.0 * inv_batch * (v.values[i] - m.bits[i]);
    return g;
}

double image_loss(const Tensor& x, const Tensor& x_wm) {
    require_same(x, x_wm, "image_loss");
    const std::size_t b = x.dim(0);
    const double per_item = static_cast<double>(x.size() / b);
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - x_wm[i];
        sum += d * d;
    }
    return sum / (static_cast<double>(b) * per_item);
}

Tensor image_loss_grad(const Tensor& x, const Tensor& x_wm, double weight) {
    require_same(x, x_wm, "image_loss");
    const std::size_t b = x.dim(0);
    const double scale = 2.0 * weight / (static_cast<double>(b) * static_cast<double>(x.size() / b));
    Tensor g = Tensor::zeros(x.shape());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = scale * (x_wm[i] - x[i]);
    return g;
}

double adversarial_loss(const Tensor& wm_scores) {
    double sum = 0.0;
    for (std::size_t i = 0; i < wm_scores.size(); ++i)
        sum += std::log(std::max(1.0 - wm_scores[i], kLogFloor));
    return sum / static_cast<double>(wm_scores.size());
}

Tensor adversarial_loss_grad(const Tensor& wm_scores, double weight) {
    const double inv = weight / static_cast<double>(wm_scores.size());
    Tensor g = Tensor::zeros(wm_scores.shape());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double a = 1.0 - wm_scores[i];
        g[i] = a > kLogFloor ? -inv / a : 0.0;
    }
    return g;
}

double discriminator_loss(const Tensor& cover_scores, const Tensor& wm_scores) {
    require_same(cover_scores, wm_scores, "discriminator_loss");
    double sum = 0.0;
    for (std::size_t i = 0; i < cover_scores.size(); ++i)
        sum += std::log(std::max(1.0 - cover_scores[i], kLogFloor)) +
               std::log(std::max(wm_scores[i], kLogFloor));
    return sum / static_cast<double>(cover_scores.size());
}

Tensor discriminator_loss_grad_cover(const Tensor& cover_scores) {
    const double inv = 1.0 / static_cast<double>(cover_scores.size());
    Tensor g = Tensor::zeros(cover_scores.shape());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double a = 1.0 - cover_scores[i];
        g[i] = a > kLogFloor ? -inv / a : 0.0;
    }
    return g;
}

Tensor discriminator_loss_grad_wm(const Tensor& wm_scores) {
    const double inv = 1.0 / static_cast<double>(wm_scores.size());
    Tensor g = Tensor::zeros(wm_scores.shape());
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = wm_scores[i] > kLogFloor ? inv / wm_scores[i] : 0.0;
    return g;
}

} // namespace rmk
