#include "rmk/trainer.hpp"

#include "rmk/errors.hpp"
#include "rmk/losses.hpp"

#include <chrono>
#include <cmath>
#include <utility>

namespace rmk {

using nlohmann::json;

SeveritySearchResult worst_case_severity(const AttackSpec& spec, const Tensor& x_wm,
                                         const Tensor& cover, const Tensor& messages,
                                         const DecodeFn& decode, RngState& rng) {
    const std::vector<double> grid = spec.grid.values();
    if (grid.empty())
        throw ContractError(std::string("worst_case_severity: empty grid for ") + to_string(spec.kind));

    const int b = static_cast<int>(x_wm.dim(0));
    const int h = static_cast<int>(x_wm.dim(2));
    const int w = static_cast<int>(x_wm.dim(3));
    const AttackDraw draw = sample_attack_draw(spec.kind, b, h, w, rng);

    SeveritySearchResult res;
    res.grid_losses.reserve(grid.size());
    bool have = false;
    for (double sev : grid) {
        AttackCache cache;
        Tensor attacked = attack_forward(spec.kind, x_wm, cover, sev, draw, cache);
        DecodedBatch decoded{decode(attacked)};
        const double loss = decoder_loss_sum(MessageBatch{messages}, decoded);
        res.grid_losses.push_back(loss);
        if (!have || loss > res.loss_sum ||
            (loss == res.loss_sum && more_severe(spec.kind, sev, res.severity))) {
            res.severity = sev;
            res.loss_sum = loss;
            have = true;
        }
    }
    return res;
}

InnerMaxResult build_attacked_batch(ModelBundle& m, const Tensor& cover, const Tensor& messages,
                                    const TrainConfig& cfg, RngState& rng_step,
                                    Encoder::Cache& enc_cache, Tensor& x_wm_out) {
    x_wm_out = m.encoder.forward(cover, messages, kTrainMode, &enc_cache);

    // Contiguous per-attack spans in config order; per-image search splits each
    // span into single-image groups so crop geometry can differ within a span.
    InnerMaxResult out;
    {
        const std::vector<int> sizes = cfg.effective_subset_sizes();
        std::size_t start = 0;
        for (std::size_t ai = 0; ai < cfg.attacks.size(); ++ai) {
            const auto count = static_cast<std::size_t>(sizes[ai]);
            if (cfg.per_image_search && cfg.mode == TrainMode::worst_case) {
                for (std::size_t i = 0; i < count; ++i) {
                    AttackGroup g;
                    g.start = start + i;
                    g.count = 1;
                    g.attack_index = ai;
                    out.groups.push_back(std::move(g));
                }
            } else {
                AttackGroup g;
                g.start = start;
                g.count = count;
                g.attack_index = ai;
                out.groups.push_back(std::move(g));
            }
            start += count;
        }
    }

    // Independent streams per purpose and group: the apply draw never depends
    // on whether a search ran, so a one-point grid reproduces fixed mode
    // exactly.
    const RngState rng_search = rng_step.fork("search");
    const RngState rng_apply = rng_step.fork("apply");

    for (std::size_t g = 0; g < out.groups.size(); ++g) {
        AttackGroup& grp = out.groups[g];
        const AttackSpec& spec = cfg.attacks[grp.attack_index];
        const Tensor sub_wm = slice_batch(x_wm_out, grp.start, grp.count);
        const Tensor sub_cover = slice_batch(cover, grp.start, grp.count);
        const int sh = static_cast<int>(sub_wm.dim(2));
        const int sw = static_cast<int>(sub_wm.dim(3));

        if (spec.kind != AttackKind::identity) {
            if (cfg.mode == TrainMode::worst_case) {
                const Tensor sub_msg = slice_batch(messages, grp.start, grp.count);
                RngState rs = rng_search.fork(g);
                const DecodeFn probe = [&m](const Tensor& att) {
                    // training statistics without touching the running averages
                    return m.decoder.forward(att, kSearchMode, nullptr);
                };
                SeveritySearchResult sr =
                    worst_case_severity(spec, sub_wm, sub_cover, sub_msg, probe, rs);
                grp.severity = sr.severity;
                grp.search_loss_sum = sr.loss_sum;
                grp.searched = true;
            } else {
                grp.severity = *spec.fixed;  // validate() guarantees presence
            }
        }

        RngState ra = rng_apply.fork(g);
        AttackDraw draw;
        if (grp.searched && cfg.reuse_search_draws) {
            // replay the exact draw the argmax saw
            RngState rs = rng_search.fork(g);
            draw = sample_attack_draw(spec.kind, static_cast<int>(grp.count), sh, sw, rs);
        } else {
            draw = sample_attack_draw(spec.kind, static_cast<int>(grp.count), sh, sw, ra);
        }
        grp.attacked = attack_forward(spec.kind, sub_wm, sub_cover, grp.severity, draw, grp.cache);
    }
    return out;
}

// ---- optimizer ----------------------------------------------------------------

Optimizer::Optimizer(OptimizerKind kind, double lr, std::vector<ParamRef> params)
    : kind_(kind), lr_(lr), params_(std::move(params)) {
    for (const ParamRef& p : params_)
        if (!p.value || !p.grad || !p.value->same_shape(*p.grad))
            throw ContractError("Optimizer: parameter/gradient mismatch");
    if (kind_ == OptimizerKind::adam) {
        m_.reserve(params_.size());
        v_.reserve(params_.size());
        for (const ParamRef& p : params_) {
            m_.push_back(Tensor::zeros(p.value->shape()));
            v_.push_back(Tensor::zeros(p.value->shape()));
        }
    }
}

void Optimizer::step() {
    if (lr_ == 0.0) return;
    if (kind_ == OptimizerKind::sgd) {
        for (ParamRef& p : params_) {
            double* pv = p.value->data();
            const double* g = p.grad->data();
            const std::size_t n = p.value->size();
            for (std::size_t i = 0; i < n; ++i) pv[i] -= lr_ * g[i];
        }
        return;
    }
    // adam
    ++t_;
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        double* pv = params_[k].value->data();
        const double* g = params_[k].grad->data();
        double* mm = m_[k].data();
        double* vv = v_[k].data();
        const std::size_t n = params_[k].value->size();
        for (std::size_t i = 0; i < n; ++i) {
            mm[i] = b1 * mm[i] + (1.0 - b1) * g[i];
            vv[i] = b2 * vv[i] + (1.0 - b2) * g[i] * g[i];
            pv[i] -= lr_ * (mm[i] / c1) / (std::sqrt(vv[i] / c2) + eps);
        }
    }
}

// ---- trainer ------------------------------------------------------------------

Trainer::Trainer(TrainConfig cfg, ModelBundle* model) : cfg_(std::move(cfg)), model_(model) {
    if (!model_) throw ContractError("Trainer: null model");
    cfg_.validate();
    std::vector<ParamRef> pe, pd, pc;
    visit_encoder_params(model_->encoder,
                         [&](const std::string&, Tensor& v, Tensor& g) { pe.push_back({&v, &g}); });
    visit_decoder_params(model_->decoder,
                         [&](const std::string&, Tensor& v, Tensor& g) { pd.push_back({&v, &g}); });
    visit_discriminator_params(model_->discriminator,
                               [&](const std::string&, Tensor& v, Tensor& g) { pc.push_back({&v, &g}); });
    opt_encoder_ = Optimizer(cfg_.optimizer, cfg_.lr_encoder, std::move(pe));
    opt_decoder_ = Optimizer(cfg_.optimizer, cfg_.lr_decoder, std::move(pd));
    opt_discriminator_ = Optimizer(cfg_.optimizer, cfg_.lr_discriminator, std::move(pc));
}

void Trainer::set_lr_factor(double factor) {
    opt_encoder_.set_lr(cfg_.lr_encoder * factor);
    opt_decoder_.set_lr(cfg_.lr_decoder * factor);
    opt_discriminator_.set_lr(cfg_.lr_discriminator * factor);
}

StepReport Trainer::train_step(const Tensor& cover, const Tensor& messages, RngState& rng_step,
                               std::int64_t step, std::int64_t epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    ModelBundle& m = *model_;
    const auto b = static_cast<double>(cover.dim(0));
    const double inv_b = 1.0 / b;

    StepReport rep;
    rep.step = step;
    rep.epoch = epoch;

    // Inner maximization: embed, pick each span's harshest severity, attack.
    Encoder::Cache enc_cache;
    Tensor x_wm;
    InnerMaxResult inner = build_attacked_batch(m, cover, messages, cfg_, rng_step, enc_cache, x_wm);
    for (const AttackGroup& grp : inner.groups) {
        rep.group_attacks.emplace_back(to_string(cfg_.attacks[grp.attack_index].kind));
        rep.group_severities.push_back(grp.severity);
        rep.group_searched.push_back(grp.searched);
    }

    // Critic update on (cover, watermarked); no gradient flows to the encoder here.
    zero_discriminator_grads(m.discriminator);
    Discriminator::Cache dc_cover, dc_wm;
    const Tensor s_cover = m.discriminator.forward(cover, kTrainMode, &dc_cover);
    const Tensor s_wm = m.discriminator.forward(x_wm, kTrainMode, &dc_wm);
    rep.loss_discriminator = discriminator_loss(s_cover, s_wm);
    m.discriminator.backward(dc_cover, discriminator_loss_grad_cover(s_cover), false);
    m.discriminator.backward(dc_wm, discriminator_loss_grad_wm(s_wm), false);
    opt_discriminator_.step();

    // Joint embedder+extractor update against the attacked batch.
    zero_encoder_grads(m.encoder);
    zero_decoder_grads(m.decoder);
    Tensor g_xwm = Tensor::zeros(x_wm.shape());
    const std::size_t row = x_wm.size() / x_wm.dim(0);

    double loss_msg = 0.0;
    std::size_t bits_total = 0, bits_right = 0;
    for (const AttackGroup& grp : inner.groups) {
        const MessageBatch sub_msg{slice_batch(messages, grp.start, grp.count)};
        Decoder::Cache dec_cache;
        const DecodedBatch decoded{m.decoder.forward(grp.attacked, kTrainMode, &dec_cache)};
        loss_msg += decoder_loss_sum(sub_msg, decoded) * inv_b;

        const Tensor g_att =
            m.decoder.backward(dec_cache, decoder_loss_grad(sub_msg, decoded, inv_b), true);
        Tensor g_sub;
        attack_backward(grp.cache, g_att, g_sub);
        double* dst = g_xwm.data() + grp.start * row;
        const double* src = g_sub.data();
        for (std::size_t i = 0; i < g_sub.size(); ++i) dst[i] += src[i];

        const double* mv = sub_msg.bits.data();
        const double* vv = decoded.values.data();
        for (std::size_t i = 0; i < sub_msg.bits.size(); ++i)
            bits_right += ((vv[i] >= 0.5) == (mv[i] >= 0.5)) ? 1u : 0u;
        bits_total += sub_msg.bits.size();
    }
    rep.loss_message = loss_msg;
    rep.bit_accuracy = bits_total ? static_cast<double>(bits_right) / static_cast<double>(bits_total) : 0.0;

    rep.loss_image = cfg_.weights.lambda_image * image_loss(cover, x_wm);
    {
        const Tensor g_img = image_loss_grad(cover, x_wm, cfg_.weights.lambda_image);
        axpy(1.0, g_img, g_xwm);
    }

    // Realism term through the just-updated critic; its stale parameter grads
    // are zeroed again before the next critic pass.
    {
        Discriminator::Cache dc_adv;
        const Tensor s_adv = m.discriminator.forward(x_wm, kSearchMode, &dc_adv);
        rep.loss_adversarial = cfg_.weights.lambda_adversarial * adversarial_loss(s_adv);
        const Tensor g_adv = m.discriminator.backward(
            dc_adv, adversarial_loss_grad(s_adv, cfg_.weights.lambda_adversarial), true);
        axpy(1.0, g_adv, g_xwm);
    }

    m.encoder.backward(enc_cache, g_xwm);
    opt_decoder_.step();
    opt_encoder_.step();
    m.step = step + 1;

    rep.loss_joint = rep.loss_message + rep.loss_image + rep.loss_adversarial;
    if (!std::isfinite(rep.loss_joint) || !std::isfinite(rep.loss_discriminator))
        throw TrainingError("non-finite loss at step " + std::to_string(step) +
                            " (joint=" + std::to_string(rep.loss_joint) +
                            ", critic=" + std::to_string(rep.loss_discriminator) + ")");

    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

json step_report_to_json(const StepReport& r, bool include_timing) {
    json j;
    j["step"] = r.step;
    j["epoch"] = r.epoch;
    j["loss_message"] = r.loss_message;
    j["loss_image"] = r.loss_image;
    j["loss_adversarial"] = r.loss_adversarial;
    j["loss_joint"] = r.loss_joint;
    j["loss_discriminator"] = r.loss_discriminator;
    j["bit_accuracy"] = r.bit_accuracy;
    json groups = json::array();
    for (std::size_t g = 0; g < r.group_attacks.size(); ++g) {
        json e;
        e["attack"] = r.group_attacks[g];
        e["severity"] = r.group_severities[g];
        e["searched"] = static_cast<bool>(r.group_searched[g]);
        groups.push_back(std::move(e));
    }
    j["groups"] = std::move(groups);
    if (include_timing) j["wall_seconds"] = r.wall_seconds;
    return j;
}

TrainOutput train(const ImageDataset& ds, const TrainConfig& cfg, const StepCallback& on_step,
                  const EpochCallback& on_epoch) {
    cfg.validate();
    const RngState root = make_rng(cfg.seed);
    TrainOutput out;
    {
        RngState rng_init = root.fork("init");
        out.model = init_models(cfg.arch, rng_init);
    }
    Trainer trainer(cfg, &out.model);

    const int L = cfg.arch.message_length;
    std::int64_t gstep = 0;
    bool stop = false;
    for (int epoch = 0; epoch < cfg.epochs && !stop; ++epoch) {
        if (cfg.lr_decay != 1.0)
            trainer.set_lr_factor(std::pow(cfg.lr_decay, std::max(0, epoch - cfg.lr_decay_after)));
        MinibatchStream stream(ds, cfg.batch_size, root.fork("shuffle").fork(static_cast<std::uint64_t>(epoch)));
        if (stream.batches_per_epoch() == 0)
            throw TrainingError("dataset has " + std::to_string(ds.size()) +
                                " images, fewer than one batch of " + std::to_string(cfg.batch_size));
        ImageBatch batch;
        while (!stop && stream.next(batch)) {
            RngState rng_msg = root.fork("messages").fork(static_cast<std::uint64_t>(gstep));
            const MessageBatch msg = sample_messages(rng_msg, cfg.batch_size, L);
            RngState rng_step = root.fork("step").fork(static_cast<std::uint64_t>(gstep));
            StepReport rep = trainer.train_step(batch.data, msg.bits, rng_step, gstep, epoch);
            out.history.push_back(rep);
            if (on_step) on_step(rep, out.model);
            ++gstep;

            const auto w = static_cast<std::size_t>(cfg.early_stop_window);
            if (cfg.early_stop && out.history.size() >= 2 * w) {
                const auto mean_of = [&](std::size_t lo, std::size_t hi) {
                    double s = 0.0;
                    for (std::size_t i = lo; i < hi; ++i) s += out.history[i].loss_joint;
                    return s / static_cast<double>(hi - lo);
                };
                const std::size_t n = out.history.size();
                const double recent = mean_of(n - w, n);
                const double prior = mean_of(n - 2 * w, n - w);
                if (std::fabs(recent - prior) <
                    cfg.early_stop_rel_tol * std::max(std::fabs(prior), 1e-12)) {
                    out.early_stopped = true;
                    stop = true;
                }
            }
        }
        out.epochs_run = epoch + 1;
        if (!stop && on_epoch) on_epoch(epoch, out.model);
    }
    return out;
}

} // namespace rmk
