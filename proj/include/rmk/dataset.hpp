#pragma once

#include "rmk/rng.hpp"
#include "rmk/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rmk {

enum class Split { train, test };

struct ImageRecord {
    std::string path;
    Tensor image;  // (3, h, w), RGB, [0,1]
};

struct ImageDataset {
    std::vector<ImageRecord> items;
    Split split = Split::train;
    int height = 0, width = 0;

    std::size_t size() const { return items.size(); }
};

// `source` is either a flat directory of raster images (taken in sorted
// filename order) or a manifest text file, one image path per line (relative
// paths resolve against the manifest's directory). Each file is center-square-
// cropped, bilinearly resized to (h, w) and scaled to [0,1]. Corrupt files are
// skipped with a warning on stderr; an empty yield raises IngestError. `limit`
// keeps the first N decodable files.
ImageDataset load_image_dataset(const std::string& source, Split split, int h, int w,
                                std::optional<std::int64_t> limit = std::nullopt);

// Loads and preprocesses a single image file (same pipeline, batch of one).
ImageBatch load_single_image(const std::string& path, int h, int w);

// Writes a (1, 3, h, w) [0,1] tensor as an 8-bit image; format from the
// extension. Values round to the nearest of the 256 levels.
void save_image(const std::string& path, const Tensor& image);

// (n, L) i.i.d. uniform bits.
MessageBatch sample_messages(RngState& rng, int n, int L);

// Copies the given items into one (count, 3, h, w) cover batch.
ImageBatch gather_batch(const ImageDataset& ds, const std::size_t* idx, int count);

// One epoch: a fresh permutation of the dataset cut into floor(n/b) full
// batches, trailing remainder dropped.
class MinibatchStream {
public:
    MinibatchStream(const ImageDataset& ds, int batch_size, RngState rng);

    std::size_t batches_per_epoch() const { return perm_.size() / static_cast<std::size_t>(b_); }
    // Fills `out` (and the source indices, when asked) or returns false at
    // epoch end.
    bool next(ImageBatch& out, std::vector<std::size_t>* indices = nullptr);

private:
    const ImageDataset* ds_;
    int b_;
    std::vector<std::size_t> perm_;
    std::size_t cursor_ = 0;
};

} // namespace rmk
