#pragma once

#include "rmk/config.hpp"
#include "rmk/layers.hpp"
#include "rmk/types.hpp"

#include <cstdint>
#include <functional>
#include <string>

namespace rmk {

// Residual embedding network: feature blocks over the cover, spatially
// replicated message channels concatenated in, more blocks, then a 1x1 head
// whose output is added onto the cover and clamped to [0,1]. The clamp
// backward passes gradients only where the clamp was inactive.
struct Encoder {
    std::vector<ConvBlock> pre;   // 3 -> ch -> ... -> ch
    std::vector<ConvBlock> post;  // ch+L -> ch -> ... -> ch
    Conv2d head;                  // 1x1, ch -> 3

    struct Cache {
        std::vector<ConvBlock::Cache> pre, post;
        Conv2d::Cache head;
        Tensor preclamp;  // cover + head output, before clamping
    };

    Tensor forward(const Tensor& cover, const Tensor& message, ModeFlags mode, Cache* cache);
    // g_xwm: gradient at the watermarked image. Parameter grads accumulate;
    // the cover and message are data, so no input gradient is produced.
    void backward(const Cache& cache, const Tensor& g_xwm);
};

// Message recovery network: conv blocks, global average pool, linear to L.
// Accepts any spatial size >= min_input_size (crop outputs shrink).
struct Decoder {
    std::vector<ConvBlock> blocks;  // 3 -> ch -> ... -> ch
    Linear fc;                      // ch -> L
    int min_input_size = 16;

    struct Cache {
        std::vector<ConvBlock::Cache> blocks;
        int h = 0, w = 0;  // spatial dims entering the pool
        Linear::Cache fc;
    };

    Tensor forward(const Tensor& x, ModeFlags mode, Cache* cache);
    // Returns d(loss)/d(input) when need_gin (the path through the attack).
    Tensor backward(const Cache& cache, const Tensor& g_values, bool need_gin);
};

// Cover-vs-watermarked critic: conv blocks, global pool, linear to a single
// sigmoid score per image.
struct Discriminator {
    std::vector<ConvBlock> blocks;
    Linear fc;  // ch -> 1

    struct Cache {
        std::vector<ConvBlock::Cache> blocks;
        int h = 0, w = 0;
        Linear::Cache fc;
        Tensor scores;  // sigmoid outputs, needed for the backward
    };

    Tensor forward(const Tensor& x, ModeFlags mode, Cache* cache);  // (b) scores in (0,1)
    Tensor backward(const Cache& cache, const Tensor& g_scores, bool need_gin);
};

struct ModelBundle {
    ArchConfig arch;
    Encoder encoder;
    Decoder decoder;
    Discriminator discriminator;
    std::int64_t step = 0;
    std::uint64_t init_seed = 0;
};

ModelBundle make_bundle(const ArchConfig& arch);            // allocated, zero weights
ModelBundle init_models(const ArchConfig& arch, RngState& rng);

using ParamVisitor = std::function<void(const std::string&, Tensor&, Tensor&)>;  // name, value, grad
using BufferVisitor = std::function<void(const std::string&, Tensor&)>;

// Stable, documented visitation order (encoder -> decoder -> discriminator;
// within a net: block order, conv.w/conv.b/bn.gamma/bn.beta, then head/fc).
void visit_encoder_params(Encoder& e, ParamVisitor fn);
void visit_decoder_params(Decoder& d, ParamVisitor fn);
void visit_discriminator_params(Discriminator& c, ParamVisitor fn);
void visit_params(ModelBundle& m, ParamVisitor fn);
void visit_buffers(ModelBundle& m, BufferVisitor fn);  // batchnorm running stats
std::size_t param_count(ModelBundle& m);

void zero_encoder_grads(Encoder& e);
void zero_decoder_grads(Decoder& d);
void zero_discriminator_grads(Discriminator& c);

// Convenience wrappers over the raw tensors.
ImageBatch encode(ModelBundle& m, const ImageBatch& cover, const MessageBatch& msg, ModeFlags mode,
                  Encoder::Cache* cache = nullptr);
DecodedBatch decode(ModelBundle& m, const Tensor& image, ModeFlags mode,
                    Decoder::Cache* cache = nullptr);
Tensor discriminate(ModelBundle& m, const Tensor& image, ModeFlags mode,
                    Discriminator::Cache* cache = nullptr);

} // namespace rmk
