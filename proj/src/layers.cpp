#include "rmk/layers.hpp"

#include "rmk/errors.hpp"
#include "rmk/kernels.hpp"

#include <cmath>

namespace rmk {

namespace {

void fan_in_uniform(Tensor& t, double bound, RngState& rng) {
    for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = (rng.uniform01() * 2.0 - 1.0) * bound;
}

} // namespace

// ---------------------------------------------------------------------------
// Conv2d

void Conv2d::build(int cin_, int cout_, int k_, int pad_) {
    cin = cin_;
    cout = cout_;
    k = k_;
    pad = pad_;
    const auto shape = std::vector<std::size_t>{static_cast<std::size_t>(cout),
                                                static_cast<std::size_t>(cin),
                                                static_cast<std::size_t>(k), static_cast<std::size_t>(k)};
    w = Tensor::zeros(shape);
    gw = Tensor::zeros(shape);
    b = Tensor::zeros({static_cast<std::size_t>(cout)});
    gb = Tensor::zeros({static_cast<std::size_t>(cout)});
}

void Conv2d::init(RngState& rng, double scale) {
    const double bound = scale / std::sqrt(static_cast<double>(cin) * k * k);
    fan_in_uniform(w, bound, rng);
    b.zero();
}

Tensor Conv2d::forward(const Tensor& x, Cache* cache) const {
    if (x.rank() != 4 || x.dim(1) != static_cast<std::size_t>(cin))
        throw ContractError("conv: input shape " + shape_string(x.shape()) + " does not match cin=" +
                            std::to_string(cin));
    const int nb = static_cast<int>(x.dim(0));
    const int h = static_cast<int>(x.dim(2)), wd = static_cast<int>(x.dim(3));
    const int ho = h + 2 * pad - k + 1, wo = wd + 2 * pad - k + 1;
    if (ho < 1 || wo < 1) throw ContractError("conv: input smaller than kernel");
    Tensor out = Tensor::zeros({x.dim(0), static_cast<std::size_t>(cout), static_cast<std::size_t>(ho),
                                static_cast<std::size_t>(wo)});
    kernels::conv2d_forward(x.data(), nb, cin, h, wd, w.data(), b.data(), cout, k, pad, out.data());
    if (cache) cache->x = x;
    return out;
}

Tensor Conv2d::backward(const Cache& cache, const Tensor& gout, bool need_gin) {
    const Tensor& x = cache.x;
    const int nb = static_cast<int>(x.dim(0));
    const int h = static_cast<int>(x.dim(2)), wd = static_cast<int>(x.dim(3));
    kernels::conv2d_backward_params(gout.data(), x.data(), nb, cin, h, wd, cout, k, pad, gw.data(),
                                    gb.data());
    if (!need_gin) return {};
    Tensor gin = Tensor::zeros(x.shape());
    kernels::conv2d_backward_input(gout.data(), nb, cin, h, wd, w.data(), cout, k, pad, gin.data());
    return gin;
}

// ---------------------------------------------------------------------------
// BatchNorm2d — biased (1/N) batch variance throughout, including the running
// averages, so train/eval agree on the estimator.

void BatchNorm2d::build(int c_, double momentum_, double eps_) {
    c = c_;
    momentum = momentum_;
    eps = eps_;
    gamma = Tensor::full({static_cast<std::size_t>(c)}, 1.0);
    beta = Tensor::zeros({static_cast<std::size_t>(c)});
    running_mean = Tensor::zeros({static_cast<std::size_t>(c)});
    running_var = Tensor::full({static_cast<std::size_t>(c)}, 1.0);
    ggamma = Tensor::zeros({static_cast<std::size_t>(c)});
    gbeta = Tensor::zeros({static_cast<std::size_t>(c)});
}

Tensor BatchNorm2d::forward(const Tensor& x, ModeFlags mode, Cache* cache) {
    if (x.rank() != 4 || x.dim(1) != static_cast<std::size_t>(c))
        throw ContractError("batchnorm: input shape " + shape_string(x.shape()) +
                            " does not match channels=" + std::to_string(c));
    const int nb = static_cast<int>(x.dim(0));
    const int h = static_cast<int>(x.dim(2)), wd = static_cast<int>(x.dim(3));
    const std::size_t plane = static_cast<std::size_t>(h) * wd;
    const double n = static_cast<double>(nb) * static_cast<double>(plane);
    Tensor out = Tensor::zeros(x.shape());
    Tensor xhat = Tensor::zeros(x.shape());
    std::vector<double> invstd(static_cast<std::size_t>(c));
#pragma omp parallel for schedule(static)
    for (int ic = 0; ic < c; ++ic) {
        double mean, var;
        if (mode.batch_stats) {
            double sum = 0.0;
            for (int ib = 0; ib < nb; ++ib) {
                const double* p = x.data() + (static_cast<std::size_t>(ib) * c + ic) * plane;
                for (std::size_t i = 0; i < plane; ++i) sum += p[i];
            }
            mean = sum / n;
            double sq = 0.0;
            for (int ib = 0; ib < nb; ++ib) {
                const double* p = x.data() + (static_cast<std::size_t>(ib) * c + ic) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    const double d = p[i] - mean;
                    sq += d * d;
                }
            }
            var = sq / n;
            if (mode.update_running) {
                running_mean[static_cast<std::size_t>(ic)] =
                    (1.0 - momentum) * running_mean[static_cast<std::size_t>(ic)] + momentum * mean;
                running_var[static_cast<std::size_t>(ic)] =
                    (1.0 - momentum) * running_var[static_cast<std::size_t>(ic)] + momentum * var;
            }
        } else {
            mean = running_mean[static_cast<std::size_t>(ic)];
            var = running_var[static_cast<std::size_t>(ic)];
        }
        const double is = 1.0 / std::sqrt(var + eps);
        invstd[static_cast<std::size_t>(ic)] = is;
        const double g = gamma[static_cast<std::size_t>(ic)], bt = beta[static_cast<std::size_t>(ic)];
        for (int ib = 0; ib < nb; ++ib) {
            const double* p = x.data() + (static_cast<std::size_t>(ib) * c + ic) * plane;
            double* xh = xhat.data() + (static_cast<std::size_t>(ib) * c + ic) * plane;
            double* o = out.data() + (static_cast<std::size_t>(ib) * c + ic) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                xh[i] = (p[i] - mean) * is;
                o[i] = g * xh[i] + bt;
            }
        }
    }
    if (cache) {
        cache->xhat = std::move(xhat);
        cache->invstd = std::move(invstd);
        cache->batch_stats = mode.batch_stats;
    }
    return out;
}

Tensor BatchNorm2d::backward(const Cache& cache, const Tensor& gout) {
    const Tensor& xhat = cache.xhat;
    const int nb = static_cast<int>(xhat.dim(0));
    const std::size_t plane = xhat.dim(2) * xhat.dim(3);
    const double n = static_cast<double>(nb) * static_cast<double>(plane);
    Tensor gin = Tensor::zeros(xhat.shape());
#pragma omp parallel for schedule(static)
    for (int ic = 0; ic < c; ++ic) {
        double gsum = 0.0, gxsum = 0.0;
        for (int ib = 0; ib < nb; ++ib) {
            const double* go = gout.data() + (static_cast<std::size_t>(ib) * c + ic) * plane;
            const double* xh = xhat.data() + (static_cast<std::size_t>(ib) * c + ic) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                gsum += go[i];
                gxsum += go[i] * xh[i];
            }
        }
        ggamma[static_cast<std::size_t>(ic)] += gxsum;
        gbeta[static_cast<std::size_t>(ic)] += gsum;
        const double g = gamma[static_cast<std::size_t>(ic)];
        const double is = cache.invstd[static_cast<std::size_t>(ic)];
        if (cache.batch_stats) {
            const double mg = gsum / n, mgx = gxsum / n;
            for (int ib = 0; ib < nb; ++ib) {
                const double* go = gout.data() + (static_cast<std::size_t>(ib) * c + ic) * plane;
                const double* xh = xhat.data() + (static_cast<std::size_t>(ib) * c + ic) * plane;
                double* gi = gin.data() + (static_cast<std::size_t>(ib) * c + ic) * plane;
                for (std::size_t i = 0; i < plane; ++i) gi[i] = g * is * (go[i] - mg - xh[i] * mgx);
            }
        } else {
            for (int ib = 0; ib < nb; ++ib) {
                const double* go = gout.data() + (static_cast<std::size_t>(ib) * c + ic) * plane;
                double* gi = gin.data() + (static_cast<std::size_t>(ib) * c + ic) * plane;
                for (std::size_t i = 0; i < plane; ++i) gi[i] = g * is * go[i];
            }
        }
    }
    return gin;
}

// ---------------------------------------------------------------------------
// Linear

void Linear::build(int cin_, int cout_) {
    cin = cin_;
    cout = cout_;
    w = Tensor::zeros({static_cast<std::size_t>(cout), static_cast<std::size_t>(cin)});
    gw = Tensor::zeros(w.shape());
    b = Tensor::zeros({static_cast<std::size_t>(cout)});
    gb = Tensor::zeros({static_cast<std::size_t>(cout)});
}

void Linear::init(RngState& rng, double scale) {
    const double bound = scale / std::sqrt(static_cast<double>(cin));
    fan_in_uniform(w, bound, rng);
    b.zero();
}

Tensor Linear::forward(const Tensor& x, Cache* cache) const {
    if (x.rank() != 2 || x.dim(1) != static_cast<std::size_t>(cin))
        throw ContractError("linear: input shape " + shape_string(x.shape()) + " does not match cin=" +
                            std::to_string(cin));
    Tensor out = Tensor::zeros({x.dim(0), static_cast<std::size_t>(cout)});
    kernels::linear_forward(x.data(), static_cast<int>(x.dim(0)), cin, w.data(), b.data(), cout,
                            out.data());
    if (cache) cache->x = x;
    return out;
}

Tensor Linear::backward(const Cache& cache, const Tensor& gout, bool need_gin) {
    const int nb = static_cast<int>(cache.x.dim(0));
    kernels::linear_backward_params(gout.data(), cache.x.data(), nb, cin, cout, gw.data(), gb.data());
    if (!need_gin) return {};
    Tensor gin = Tensor::zeros(cache.x.shape());
    kernels::linear_backward_input(gout.data(), nb, cin, w.data(), cout, gin.data());
    return gin;
}

// ---------------------------------------------------------------------------
// ConvBlock

void ConvBlock::build(int cin, int cout, double momentum, double eps) {
    conv.build(cin, cout, 3, 1);
    bn.build(cout, momentum, eps);
}

void ConvBlock::init(RngState& rng) { conv.init(rng); }

Tensor ConvBlock::forward(const Tensor& x, ModeFlags mode, Cache* cache) {
    Tensor z = conv.forward(x, cache ? &cache->conv : nullptr);
    Tensor pre = bn.forward(z, mode, cache ? &cache->bn : nullptr);
    Tensor out = Tensor::zeros(pre.shape());
    kernels::relu_forward(pre.data(), pre.size(), out.data());
    if (cache) cache->preact = std::move(pre);
    return out;
}

Tensor ConvBlock::backward(const Cache& cache, const Tensor& gout, bool need_gin) {
    Tensor gpre = Tensor::zeros(gout.shape());
    kernels::relu_backward(cache.preact.data(), gout.data(), gout.size(), gpre.data());
    Tensor gz = bn.backward(cache.bn, gpre);
    return conv.backward(cache.conv, gz, need_gin);
}

} // namespace rmk
