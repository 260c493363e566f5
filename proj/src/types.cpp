#include "rmk/types.hpp"

#include "rmk/errors.hpp"

#include <string>

namespace rmk {

void check_image_batch(const ImageBatch& ib, bool require_block_align, const std::string& where) {
    const std::string& ctx = where;
    if (ib.data.rank() != 4)
        throw ValidationError(ctx + ": expected rank-4 (b, c, h, w) tensor, got " + shape_string(ib.data.shape()));
    if (ib.batch() < 1) throw ValidationError(ctx + ": batch size must be >= 1");
    if (ib.channels() != 3)
        throw ValidationError(ctx + ": expected 3 channels, got " + std::to_string(ib.channels()));
    if (ib.height() < 1 || ib.width() < 1) throw ValidationError(ctx + ": empty spatial dims");
    if (require_block_align && (ib.height() % 8 != 0 || ib.width() % 8 != 0))
        throw ValidationError(ctx + ": height and width must be multiples of 8, got " +
                              std::to_string(ib.height()) + "x" + std::to_string(ib.width()));
    if (!ib.data.all_finite()) throw ValidationError(ctx + ": non-finite pixel values");
    for (std::size_t i = 0; i < ib.data.size(); ++i) {
        const double v = ib.data.data()[i];
        if (v < 0.0 || v > 1.0)
            throw ValidationError(ctx + ": pixel value " + std::to_string(v) + " outside [0, 1]");
    }
}

void check_message_batch(const MessageBatch& mb, const std::string& where) {
    const std::string& ctx = where;
    if (mb.bits.rank() != 2)
        throw ValidationError(ctx + ": expected rank-2 (b, L) tensor, got " + shape_string(mb.bits.shape()));
    if (mb.batch() < 1) throw ValidationError(ctx + ": batch size must be >= 1");
    if (mb.length() < 1) throw ValidationError(ctx + ": message length must be >= 1");
    for (std::size_t i = 0; i < mb.bits.size(); ++i) {
        const double v = mb.bits.data()[i];
        if (v != 0.0 && v != 1.0)
            throw ValidationError(ctx + ": message entries must be exactly 0 or 1, got " + std::to_string(v));
    }
}

} // namespace rmk
