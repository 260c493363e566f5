#include "rmk/models.hpp"

#include "rmk/errors.hpp"
#include "rmk/kernels.hpp"

#include <algorithm>

namespace rmk {

// ---------------------------------------------------------------------------
// Encoder

Tensor Encoder::forward(const Tensor& cover, const Tensor& message, ModeFlags mode, Cache* cache) {
    if (cover.rank() != 4 || message.rank() != 2 || cover.dim(0) != message.dim(0))
        throw ContractError("encoder: cover " + shape_string(cover.shape()) + " / message " +
                            shape_string(message.shape()) + " mismatch");
    const std::size_t b = cover.dim(0), h = cover.dim(2), w = cover.dim(3);
    const std::size_t L = message.dim(1);
    if (cache) {
        cache->pre.resize(pre.size());
        cache->post.resize(post.size());
    }
    Tensor f = cover;
    for (std::size_t i = 0; i < pre.size(); ++i)
        f = pre[i].forward(f, mode, cache ? &cache->pre[i] : nullptr);

    // concat: feature channels, then the message replicated over every pixel
    const std::size_t fc = f.dim(1);
    Tensor cat = Tensor::zeros({b, fc + L, h, w});
    const std::size_t plane = h * w;
    for (std::size_t ib = 0; ib < b; ++ib) {
        std::copy(f.data() + ib * fc * plane, f.data() + (ib + 1) * fc * plane,
                  cat.data() + ib * (fc + L) * plane);
        for (std::size_t l = 0; l < L; ++l) {
            double* p = cat.data() + (ib * (fc + L) + fc + l) * plane;
            const double bit = message[ib * L + l];
            for (std::size_t i = 0; i < plane; ++i) p[i] = bit;
        }
    }

    Tensor t = std::move(cat);
    for (std::size_t i = 0; i < post.size(); ++i)
        t = post[i].forward(t, mode, cache ? &cache->post[i] : nullptr);
    Tensor delta = head.forward(t, cache ? &cache->head : nullptr);

    Tensor preclamp = Tensor::zeros(cover.shape());
    for (std::size_t i = 0; i < preclamp.size(); ++i) preclamp.data()[i] = cover.data()[i] + delta.data()[i];
    Tensor out = Tensor::zeros(cover.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::clamp(preclamp.data()[i], 0.0, 1.0);
    if (cache) cache->preclamp = std::move(preclamp);
    return out;
}

void Encoder::backward(const Cache& cache, const Tensor& g_xwm) {
    Tensor g = Tensor::zeros(g_xwm.shape());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double v = cache.preclamp.data()[i];
        g.data()[i] = (v > 0.0 && v < 1.0) ? g_xwm.data()[i] : 0.0;
    }
    g = head.backward(cache.head, g, true);
    for (std::size_t i = post.size(); i-- > 0;) g = post[i].backward(cache.post[i], g, true);

    // drop the replicated-message channels; only the feature slice flows on
    const std::size_t b = g.dim(0), cat_c = g.dim(1), plane = g.dim(2) * g.dim(3);
    const std::size_t fc = pre.back().bn.gamma.dim(0);
    Tensor gf = Tensor::zeros({b, fc, g.dim(2), g.dim(3)});
    for (std::size_t ib = 0; ib < b; ++ib)
        std::copy(g.data() + ib * cat_c * plane, g.data() + (ib * cat_c + fc) * plane,
                  gf.data() + ib * fc * plane);

    Tensor gb = std::move(gf);
    for (std::size_t i = pre.size(); i-- > 0;) gb = pre[i].backward(cache.pre[i], gb, i > 0);
}

// ---------------------------------------------------------------------------
// Decoder

Tensor Decoder::forward(const Tensor& x, ModeFlags mode, Cache* cache) {
    if (x.rank() != 4) throw ContractError("decoder: expected rank-4 input, got " + shape_string(x.shape()));
    if (static_cast<int>(x.dim(2)) < min_input_size || static_cast<int>(x.dim(3)) < min_input_size)
        throw ContractError("decoder: input " + shape_string(x.shape()) + " below minimum size " +
                            std::to_string(min_input_size));
    if (cache) cache->blocks.resize(blocks.size());
    Tensor f = x;
    for (std::size_t i = 0; i < blocks.size(); ++i)
        f = blocks[i].forward(f, mode, cache ? &cache->blocks[i] : nullptr);
    const int b = static_cast<int>(f.dim(0)), c = static_cast<int>(f.dim(1));
    const int h = static_cast<int>(f.dim(2)), w = static_cast<int>(f.dim(3));
    Tensor pooled = Tensor::zeros({f.dim(0), f.dim(1)});
    kernels::global_avg_pool_forward(f.data(), b, c, h, w, pooled.data());
    if (cache) {
        cache->h = h;
        cache->w = w;
    }
    return fc.forward(pooled, cache ? &cache->fc : nullptr);
}

Tensor Decoder::backward(const Cache& cache, const Tensor& g_values, bool need_gin) {
    Tensor gp = fc.backward(cache.fc, g_values, true);
    const int b = static_cast<int>(gp.dim(0)), c = static_cast<int>(gp.dim(1));
    Tensor gf = Tensor::zeros({gp.dim(0), gp.dim(1), static_cast<std::size_t>(cache.h),
                               static_cast<std::size_t>(cache.w)});
    kernels::global_avg_pool_backward(gp.data(), b, c, cache.h, cache.w, gf.data());
    Tensor g = std::move(gf);
    for (std::size_t i = blocks.size(); i-- > 0;)
        g = blocks[i].backward(cache.blocks[i], g, need_gin || i > 0);
    return g;
}

// ---------------------------------------------------------------------------
// Discriminator

Tensor Discriminator::forward(const Tensor& x, ModeFlags mode, Cache* cache) {
    if (x.rank() != 4)
        throw ContractError("discriminator: expected rank-4 input, got " + shape_string(x.shape()));
    if (cache) cache->blocks.resize(blocks.size());
    Tensor f = x;
    for (std::size_t i = 0; i < blocks.size(); ++i)
        f = blocks[i].forward(f, mode, cache ? &cache->blocks[i] : nullptr);
    const int b = static_cast<int>(f.dim(0)), c = static_cast<int>(f.dim(1));
    const int h = static_cast<int>(f.dim(2)), w = static_cast<int>(f.dim(3));
    Tensor pooled = Tensor::zeros({f.dim(0), f.dim(1)});
    kernels::global_avg_pool_forward(f.data(), b, c, h, w, pooled.data());
    Tensor logit = fc.forward(pooled, cache ? &cache->fc : nullptr);
    Tensor scores = Tensor::zeros({f.dim(0)});
    for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = 1.0 / (1.0 + std::exp(-logit[i]));
    if (cache) {
        cache->h = h;
        cache->w = w;
        cache->scores = scores;
    }
    return scores;
}

Tensor Discriminator::backward(const Cache& cache, const Tensor& g_scores, bool need_gin) {
    Tensor glogit = Tensor::zeros({g_scores.dim(0), 1});
    for (std::size_t i = 0; i < g_scores.size(); ++i) {
        const double s = cache.scores[i];
        glogit[i] = g_scores[i] * s * (1.0 - s);
    }
    Tensor gp = fc.backward(cache.fc, glogit, true);
    const int b = static_cast<int>(gp.dim(0)), c = static_cast<int>(gp.dim(1));
    Tensor gf = Tensor::zeros({gp.dim(0), gp.dim(1), static_cast<std::size_t>(cache.h),
                               static_cast<std::size_t>(cache.w)});
    kernels::global_avg_pool_backward(gp.data(), b, c, cache.h, cache.w, gf.data());
    Tensor g = std::move(gf);
    for (std::size_t i = blocks.size(); i-- > 0;)
        g = blocks[i].backward(cache.blocks[i], g, need_gin || i > 0);
    return g;
}

// ---------------------------------------------------------------------------
// bundle construction

ModelBundle make_bundle(const ArchConfig& arch) {
    ModelBundle m;
    m.arch = arch;
    const int ch = arch.channels;
    m.encoder.pre.resize(static_cast<std::size_t>(arch.encoder_pre_blocks));
    for (int i = 0; i < arch.encoder_pre_blocks; ++i)
        m.encoder.pre[static_cast<std::size_t>(i)].build(i == 0 ? 3 : ch, ch, arch.bn_momentum,
                                                         arch.bn_eps);
    m.encoder.post.resize(static_cast<std::size_t>(arch.encoder_post_blocks));
    for (int i = 0; i < arch.encoder_post_blocks; ++i)
        m.encoder.post[static_cast<std::size_t>(i)].build(i == 0 ? ch + arch.message_length : ch, ch,
                                                          arch.bn_momentum, arch.bn_eps);
    m.encoder.head.build(ch, 3, 1, 0);
    m.decoder.blocks.resize(static_cast<std::size_t>(arch.decoder_blocks));
    for (int i = 0; i < arch.decoder_blocks; ++i)
        m.decoder.blocks[static_cast<std::size_t>(i)].build(i == 0 ? 3 : ch, ch, arch.bn_momentum,
                                                            arch.bn_eps);
    m.decoder.fc.build(ch, arch.message_length);
    m.decoder.min_input_size = arch.min_input_size;
    m.discriminator.blocks.resize(static_cast<std::size_t>(arch.discriminator_blocks));
    for (int i = 0; i < arch.discriminator_blocks; ++i)
        m.discriminator.blocks[static_cast<std::size_t>(i)].build(i == 0 ? 3 : ch, ch, arch.bn_momentum,
                                                                  arch.bn_eps);
    m.discriminator.fc.build(ch, 1);
    return m;
}

ModelBundle init_models(const ArchConfig& arch, RngState& rng) {
    ModelBundle m = make_bundle(arch);
    for (auto& blk : m.encoder.pre) blk.init(rng);
    for (auto& blk : m.encoder.post) blk.init(rng);
    m.encoder.head.init(rng, arch.head_init_scale);
    for (auto& blk : m.decoder.blocks) blk.init(rng);
    m.decoder.fc.init(rng);
    for (auto& blk : m.discriminator.blocks) blk.init(rng);
    m.discriminator.fc.init(rng);
    m.init_seed = rng.key();
    return m;
}

// ---------------------------------------------------------------------------
// visitation

namespace {

void visit_block(ConvBlock& blk, const std::string& prefix, const ParamVisitor& fn) {
    fn(prefix + ".conv.w", blk.conv.w, blk.conv.gw);
    fn(prefix + ".conv.b", blk.conv.b, blk.conv.gb);
    fn(prefix + ".bn.gamma", blk.bn.gamma, blk.bn.ggamma);
    fn(prefix + ".bn.beta", blk.bn.beta, blk.bn.gbeta);
}

} // namespace

void visit_encoder_params(Encoder& e, ParamVisitor fn) {
    for (std::size_t i = 0; i < e.pre.size(); ++i) visit_block(e.pre[i], "encoder.pre" + std::to_string(i), fn);
    for (std::size_t i = 0; i < e.post.size(); ++i)
        visit_block(e.post[i], "encoder.post" + std::to_string(i), fn);
    fn("encoder.head.w", e.head.w, e.head.gw);
    fn("encoder.head.b", e.head.b, e.head.gb);
}

void visit_decoder_params(Decoder& d, ParamVisitor fn) {
    for (std::size_t i = 0; i < d.blocks.size(); ++i)
        visit_block(d.blocks[i], "decoder.block" + std::to_string(i), fn);
    fn("decoder.fc.w", d.fc.w, d.fc.gw);
    fn("decoder.fc.b", d.fc.b, d.fc.gb);
}

void visit_discriminator_params(Discriminator& c, ParamVisitor fn) {
    for (std::size_t i = 0; i < c.blocks.size(); ++i)
        visit_block(c.blocks[i], "disc.block" + std::to_string(i), fn);
    fn("disc.fc.w", c.fc.w, c.fc.gw);
    fn("disc.fc.b", c.fc.b, c.fc.gb);
}

void visit_params(ModelBundle& m, ParamVisitor fn) {
    visit_encoder_params(m.encoder, fn);
    visit_decoder_params(m.decoder, fn);
    visit_discriminator_params(m.discriminator, fn);
}

void visit_buffers(ModelBundle& m, BufferVisitor fn) {
    auto bn_buffers = [&fn](ConvBlock& blk, const std::string& prefix) {
        fn(prefix + ".bn.running_mean", blk.bn.running_mean);
        fn(prefix + ".bn.running_var", blk.bn.running_var);
    };
    for (std::size_t i = 0; i < m.encoder.pre.size(); ++i)
        bn_buffers(m.encoder.pre[i], "encoder.pre" + std::to_string(i));
    for (std::size_t i = 0; i < m.encoder.post.size(); ++i)
        bn_buffers(m.encoder.post[i], "encoder.post" + std::to_string(i));
    for (std::size_t i = 0; i < m.decoder.blocks.size(); ++i)
        bn_buffers(m.decoder.blocks[i], "decoder.block" + std::to_string(i));
    for (std::size_t i = 0; i < m.discriminator.blocks.size(); ++i)
        bn_buffers(m.discriminator.blocks[i], "disc.block" + std::to_string(i));
}

std::size_t param_count(ModelBundle& m) {
    std::size_t n = 0;
    visit_params(m, [&n](const std::string&, Tensor& v, Tensor&) { n += v.size(); });
    return n;
}

namespace {

void zero_blocks(std::vector<ConvBlock>& blocks) {
    for (auto& blk : blocks) {
        blk.conv.gw.zero();
        blk.conv.gb.zero();
        blk.bn.ggamma.zero();
        blk.bn.gbeta.zero();
    }
}

} // namespace

void zero_encoder_grads(Encoder& e) {
    zero_blocks(e.pre);
    zero_blocks(e.post);
    e.head.gw.zero();
    e.head.gb.zero();
}

void zero_decoder_grads(Decoder& d) {
    zero_blocks(d.blocks);
    d.fc.gw.zero();
    d.fc.gb.zero();
}

void zero_discriminator_grads(Discriminator& c) {
    zero_blocks(c.blocks);
    c.fc.gw.zero();
    c.fc.gb.zero();
}

// ---------------------------------------------------------------------------
// wrappers

ImageBatch encode(ModelBundle& m, const ImageBatch& cover, const MessageBatch& msg, ModeFlags mode,
                  Encoder::Cache* cache) {
    Tensor out = m.encoder.forward(cover.data, msg.bits, mode, cache);
    return ImageBatch{std::move(out), ImageRole::watermarked};
}

DecodedBatch decode(ModelBundle& m, const Tensor& image, ModeFlags mode, Decoder::Cache* cache) {
    return DecodedBatch{m.decoder.forward(image, mode, cache)};
}

Tensor discriminate(ModelBundle& m, const Tensor& image, ModeFlags mode, Discriminator::Cache* cache) {
    return m.discriminator.forward(image, mode, cache);
}

} // namespace rmk
