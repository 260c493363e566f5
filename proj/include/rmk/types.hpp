#pragma once

#include <cstdint>
#include <string>

#include "rmk/tensor.hpp"

namespace rmk {

enum class ImageRole { cover, watermarked, attacked };

// Rank-4 image tensor (batch, channels=3, height, width), values in [0, 1].
struct ImageBatch {
    Tensor data; // (b, 3, h, w)
    ImageRole role = ImageRole::cover;

    std::size_t batch() const { return data.dim(0); }
    std::size_t channels() const { return data.dim(1); }
    std::size_t height() const { return data.dim(2); }
    std::size_t width() const { return data.dim(3); }
};

// Batch of binary watermark messages, entries exactly 0 or 1.
struct MessageBatch {
    Tensor bits; // (b, L)

    std::size_t batch() const { return bits.dim(0); }
    std::size_t length() const { return bits.dim(1); }
};

// Raw decoder outputs, same shape as the embedded messages, unconstrained reals.
struct DecodedBatch {
    Tensor values; // (b, L)

    std::size_t batch() const { return values.dim(0); }
    std::size_t length() const { return values.dim(1); }
};

// Checks the image-batch invariants. Block alignment (multiple-of-8 sides,
// needed by the 8x8 DCT) is required at ingestion but not for attack outputs,
// whose spatial size may be arbitrary after cropping.
void check_image_batch(const ImageBatch& ib, bool require_block_align, const std::string& where);

void check_message_batch(const MessageBatch& mb, const std::string& where);

} // namespace rmk
