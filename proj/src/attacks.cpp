#include "rmk/attacks.hpp"

#include "rmk/errors.hpp"
#include "rmk/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rmk {

namespace {

void require_rank4(const Tensor& t, const char* what) {
    if (t.rank() != 4)
        throw ContractError(std::string(what) + ": expected rank-4 tensor, got " + shape_string(t.shape()));
}

// Offset from a frozen uniform: u in [0,1) maps onto {0..range} uniformly.
int place(double u, int range) {
    const int off = static_cast<int>(u * (range + 1));
    return std::min(off, range);
}

int crop_side(double p, int dim) { return static_cast<int>(std::floor(std::sqrt(p) * dim)); }

} // namespace

int blur_kernel_size(double sigma) { return 2 * static_cast<int>(std::ceil(2.0 * sigma)) + 1; }

int jpeg_coeffs_kept(double q) {
    const int qi = static_cast<int>(std::llround(q));
    return (64 * qi + 99) / 100;  // ceil(64 q / 100)
}

bool more_severe(AttackKind kind, double a, double b) {
    switch (kind) {
        case AttackKind::crop:
        case AttackKind::cropout:
        case AttackKind::dropout:
        case AttackKind::jpeg_approx: return a < b;
        case AttackKind::gaussian_blur: return a > b;
        case AttackKind::identity: return false;
    }
    return false;
}

AttackDraw sample_attack_draw(AttackKind kind, int b, int h, int w, RngState& rng) {
    AttackDraw d;
    switch (kind) {
        case AttackKind::crop:
        case AttackKind::cropout:
            d.off_y.resize(static_cast<std::size_t>(b));
            d.off_x.resize(static_cast<std::size_t>(b));
            for (int i = 0; i < b; ++i) {
                d.off_y[static_cast<std::size_t>(i)] = rng.uniform01();
                d.off_x[static_cast<std::size_t>(i)] = rng.uniform01();
            }
            break;
        case AttackKind::dropout: {
            d.pixel_u = Tensor::zeros({static_cast<std::size_t>(b), static_cast<std::size_t>(h),
                                       static_cast<std::size_t>(w)});
            for (std::size_t i = 0; i < d.pixel_u.size(); ++i) d.pixel_u.data()[i] = rng.uniform01();
            break;
        }
        default: break;  // blur/jpeg/identity draw nothing
    }
    return d;
}

Tensor attack_forward(AttackKind kind, const Tensor& x_wm, const Tensor& x_cover, double severity,
                      const AttackDraw& draw, AttackCache& cache) {
    require_rank4(x_wm, "attack input");
    const int b = static_cast<int>(x_wm.dim(0)), c = static_cast<int>(x_wm.dim(1));
    const int h = static_cast<int>(x_wm.dim(2)), w = static_cast<int>(x_wm.dim(3));
    cache = AttackCache{};
    cache.kind = kind;
    cache.severity = severity;
    cache.in_h = h;
    cache.in_w = w;

    switch (kind) {
        case AttackKind::identity:
            return x_wm;

        case AttackKind::crop: {
            if (severity <= 0.0 || severity > 1.0)
                throw SeverityDomainError("crop: area ratio " + std::to_string(severity) +
                                          " outside (0, 1]");
            const int sh = crop_side(severity, h), sw = crop_side(severity, w);
            if (sh < 8 || sw < 8)
                throw SeverityDomainError("crop: retained side " + std::to_string(sh) + "x" +
                                          std::to_string(sw) + " below the 8-pixel minimum");
            if (draw.off_y.size() < static_cast<std::size_t>(b) ||
                draw.off_x.size() < static_cast<std::size_t>(b))
                throw ContractError("crop: draw missing placement uniforms");
            cache.side_h = sh;
            cache.side_w = sw;
            cache.oy.resize(static_cast<std::size_t>(b));
            cache.ox.resize(static_cast<std::size_t>(b));
            Tensor out = Tensor::zeros({static_cast<std::size_t>(b), static_cast<std::size_t>(c),
                                        static_cast<std::size_t>(sh), static_cast<std::size_t>(sw)});
            for (int i = 0; i < b; ++i) {
                const int oy = place(draw.off_y[static_cast<std::size_t>(i)], h - sh);
                const int ox = place(draw.off_x[static_cast<std::size_t>(i)], w - sw);
                cache.oy[static_cast<std::size_t>(i)] = oy;
                cache.ox[static_cast<std::size_t>(i)] = ox;
                for (int ic = 0; ic < c; ++ic)
                    for (int y = 0; y < sh; ++y)
                        for (int x = 0; x < sw; ++x)
                            out.at4(static_cast<std::size_t>(i), static_cast<std::size_t>(ic),
                                    static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
                                x_wm.at4(static_cast<std::size_t>(i), static_cast<std::size_t>(ic),
                                         static_cast<std::size_t>(oy + y),
                                         static_cast<std::size_t>(ox + x));
            }
            return out;
        }

        case AttackKind::cropout: {
            if (severity <= 0.0 || severity > 1.0)
                throw SeverityDomainError("cropout: area ratio " + std::to_string(severity) +
                                          " outside (0, 1]");
            if (!x_cover.same_shape(x_wm))
                throw ContractError("cropout: cover shape " + shape_string(x_cover.shape()) +
                                    " != watermarked shape " + shape_string(x_wm.shape()));
            if (draw.off_y.size() < static_cast<std::size_t>(b) ||
                draw.off_x.size() < static_cast<std::size_t>(b))
                throw ContractError("cropout: draw missing placement uniforms");
            const int sh = crop_side(severity, h), sw = crop_side(severity, w);
            cache.side_h = sh;
            cache.side_w = sw;
            cache.mask = Tensor::zeros({static_cast<std::size_t>(b), static_cast<std::size_t>(h),
                                        static_cast<std::size_t>(w)});
            for (int i = 0; i < b; ++i) {
                const int oy = place(draw.off_y[static_cast<std::size_t>(i)], h - sh);
                const int ox = place(draw.off_x[static_cast<std::size_t>(i)], w - sw);
                for (int y = 0; y < sh; ++y)
                    for (int x = 0; x < sw; ++x)
                        cache.mask.at3(static_cast<std::size_t>(i), static_cast<std::size_t>(oy + y),
                                       static_cast<std::size_t>(ox + x)) = 1.0;
            }
            break;  // blend below
        }

        case AttackKind::dropout: {
            if (severity < 0.0 || severity > 1.0)
                throw SeverityDomainError("dropout: keep probability " + std::to_string(severity) +
                                          " outside [0, 1]");
            if (!x_cover.same_shape(x_wm))
                throw ContractError("dropout: cover shape " + shape_string(x_cover.shape()) +
                                    " != watermarked shape " + shape_string(x_wm.shape()));
            if (draw.pixel_u.rank() != 3 || draw.pixel_u.dim(0) < static_cast<std::size_t>(b) ||
                draw.pixel_u.dim(1) != static_cast<std::size_t>(h) ||
                draw.pixel_u.dim(2) != static_cast<std::size_t>(w))
                throw ContractError("dropout: draw missing per-pixel uniforms");
            cache.mask = Tensor::zeros({static_cast<std::size_t>(b), static_cast<std::size_t>(h),
                                        static_cast<std::size_t>(w)});
            for (int i = 0; i < b; ++i)
                for (int y = 0; y < h; ++y)
                    for (int x = 0; x < w; ++x)
                        cache.mask.at3(static_cast<std::size_t>(i), static_cast<std::size_t>(y),
                                       static_cast<std::size_t>(x)) =
                            draw.pixel_u.at3(static_cast<std::size_t>(i), static_cast<std::size_t>(y),
                                             static_cast<std::size_t>(x)) < severity
                                ? 1.0
                                : 0.0;
            break;  // blend below
        }

        case AttackKind::gaussian_blur: {
            if (severity <= 0.0)
                throw SeverityDomainError("gaussian_blur: sigma " + std::to_string(severity) +
                                          " must be > 0");
            const int k = blur_kernel_size(severity);
            cache.kernel = Tensor::zeros({static_cast<std::size_t>(k), static_cast<std::size_t>(k)});
            const int r = k / 2;
            double sum = 0.0;
            for (int dy = 0; dy < k; ++dy)
                for (int dx = 0; dx < k; ++dx) {
                    const double yy = dy - r, xx = dx - r;
                    const double v = std::exp(-(yy * yy + xx * xx) / (2.0 * severity * severity));
                    cache.kernel.at2(static_cast<std::size_t>(dy), static_cast<std::size_t>(dx)) = v;
                    sum += v;
                }
            for (std::size_t i = 0; i < cache.kernel.size(); ++i) cache.kernel.data()[i] /= sum;
            Tensor out = Tensor::zeros(x_wm.shape());
            kernels::blur_reflect_forward(x_wm.data(), b, c, h, w, cache.kernel.data(), k, out.data());
            return out;
        }

        case AttackKind::jpeg_approx: {
            if (severity < 1.0 || severity > 100.0)
                throw SeverityDomainError("jpeg_approx: quality " + std::to_string(severity) +
                                          " outside [1, 100]");
            if (h % 8 != 0 || w % 8 != 0)
                throw ContractError("jpeg_approx: dims " + std::to_string(h) + "x" + std::to_string(w) +
                                    " not multiples of 8");
            const int kept = jpeg_coeffs_kept(severity);
            cache.preclamp = Tensor::zeros(x_wm.shape());
            kernels::dct8_zigzag_mask(x_wm.data(), b, c, h, w, kept, cache.preclamp.data());
            Tensor out = Tensor::zeros(x_wm.shape());
            for (std::size_t i = 0; i < out.size(); ++i)
                out.data()[i] = std::clamp(cache.preclamp.data()[i], 0.0, 1.0);
            return out;
        }
    }

    // Masked blend shared by cropout/dropout: out = mask*wm + (1-mask)*cover.
    Tensor out = Tensor::zeros(x_wm.shape());
    for (int i = 0; i < b; ++i)
        for (int ic = 0; ic < c; ++ic)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const double mv = cache.mask.at3(static_cast<std::size_t>(i),
                                                     static_cast<std::size_t>(y),
                                                     static_cast<std::size_t>(x));
                    out.at4(static_cast<std::size_t>(i), static_cast<std::size_t>(ic),
                            static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
                        mv * x_wm.at4(static_cast<std::size_t>(i), static_cast<std::size_t>(ic),
                                      static_cast<std::size_t>(y), static_cast<std::size_t>(x)) +
                        (1.0 - mv) * x_cover.at4(static_cast<std::size_t>(i),
                                                 static_cast<std::size_t>(ic),
                                                 static_cast<std::size_t>(y),
                                                 static_cast<std::size_t>(x));
                }
    return out;
}

void attack_backward(const AttackCache& cache, const Tensor& gout, Tensor& gin) {
    require_rank4(gout, "attack gradient");
    const int b = static_cast<int>(gout.dim(0)), c = static_cast<int>(gout.dim(1));
    const std::vector<std::size_t> in_shape = {gout.dim(0), gout.dim(1),
                                               static_cast<std::size_t>(cache.in_h),
                                               static_cast<std::size_t>(cache.in_w)};
    switch (cache.kind) {
        case AttackKind::identity:
            gin = gout;
            return;

        case AttackKind::crop: {
            gin = Tensor::zeros(in_shape);
            for (int i = 0; i < b; ++i) {
                const int oy = cache.oy[static_cast<std::size_t>(i)];
                const int ox = cache.ox[static_cast<std::size_t>(i)];
                for (int ic = 0; ic < c; ++ic)
                    for (int y = 0; y < cache.side_h; ++y)
                        for (int x = 0; x < cache.side_w; ++x)
                            gin.at4(static_cast<std::size_t>(i), static_cast<std::size_t>(ic),
                                    static_cast<std::size_t>(oy + y), static_cast<std::size_t>(ox + x)) =
                                gout.at4(static_cast<std::size_t>(i), static_cast<std::size_t>(ic),
                                         static_cast<std::size_t>(y), static_cast<std::size_t>(x));
            }
            return;
        }

        case AttackKind::cropout:
        case AttackKind::dropout: {
            gin = Tensor::zeros(in_shape);
            for (int i = 0; i < b; ++i)
                for (int ic = 0; ic < c; ++ic)
                    for (int y = 0; y < cache.in_h; ++y)
                        for (int x = 0; x < cache.in_w; ++x)
                            gin.at4(static_cast<std::size_t>(i), static_cast<std::size_t>(ic),
                                    static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
                                cache.mask.at3(static_cast<std::size_t>(i), static_cast<std::size_t>(y),
                                               static_cast<std::size_t>(x)) *
                                gout.at4(static_cast<std::size_t>(i), static_cast<std::size_t>(ic),
                                         static_cast<std::size_t>(y), static_cast<std::size_t>(x));
            return;
        }

        case AttackKind::gaussian_blur: {
            gin = Tensor::zeros(in_shape);
            kernels::blur_reflect_backward(gout.data(), b, c, cache.in_h, cache.in_w,
                                           cache.kernel.data(), static_cast<int>(cache.kernel.dim(0)),
                                           gin.data());
            return;
        }

        case AttackKind::jpeg_approx: {
            // clamp passes gradient only where it was inactive; the masked DCT
            // projection is symmetric, so it is its own adjoint
            Tensor masked = Tensor::zeros(gout.shape());
            for (std::size_t i = 0; i < gout.size(); ++i) {
                const double v = cache.preclamp.data()[i];
                masked.data()[i] = (v > 0.0 && v < 1.0) ? gout.data()[i] : 0.0;
            }
            gin = Tensor::zeros(in_shape);
            kernels::dct8_zigzag_mask(masked.data(), b, c, cache.in_h, cache.in_w,
                                      jpeg_coeffs_kept(cache.severity), gin.data());
            return;
        }
    }
    throw ContractError("attack_backward: unknown attack kind");
}

ImageBatch apply(const AttackSpec& spec, const ImageBatch& x_wm, const ImageBatch& x_cover,
                 double severity, RngState& rng) {
    AttackDraw draw = sample_attack_draw(spec.kind, static_cast<int>(x_wm.batch()),
                                         static_cast<int>(x_wm.height()),
                                         static_cast<int>(x_wm.width()), rng);
    AttackCache cache;
    Tensor out = attack_forward(spec.kind, x_wm.data, x_cover.data, severity, draw, cache);
    return ImageBatch{std::move(out), ImageRole::attacked};
}

} // namespace rmk
