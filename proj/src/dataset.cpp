#include "rmk/dataset.hpp"

#include "rmk/errors.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace rmk {

namespace fs = std::filesystem;

namespace {

bool has_raster_extension(const fs::path& p) {
    static const char* exts[] = {".png", ".jpg", ".jpeg", ".bmp", ".ppm",
                                 ".pgm", ".tif", ".tiff", ".webp"};
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
    for (const char* x : exts)
        if (e == x) return true;
    return false;
}

std::vector<std::string> list_sources(const std::string& source) {
    const fs::path p(source);
    std::error_code ec;
    if (fs::is_directory(p, ec)) {
        std::vector<std::string> files;
        for (const auto& entry : fs::directory_iterator(p, ec)) {
            if (entry.is_regular_file() && has_raster_extension(entry.path()))
                files.push_back(entry.path().string());
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) throw IngestError("no image files in directory: " + source);
        return files;
    }
    if (fs::is_regular_file(p, ec)) {
        // manifest: one path per line, relative to the manifest's directory
        std::ifstream in(p);
        if (!in) throw IngestError("cannot open manifest: " + source);
        std::vector<std::string> files;
        std::string line;
        while (std::getline(in, line)) {
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            fs::path entry(line);
            if (entry.is_relative()) entry = p.parent_path() / entry;
            files.push_back(entry.string());
        }
        if (files.empty()) throw IngestError("manifest lists no files: " + source);
        return files;
    }
    throw IngestError("data source is neither a directory nor a file: " + source);
}

// center square crop + bilinear resize + BGR->RGB planes in [0,1]
bool decode_to_tensor(const std::string& path, int h, int w, Tensor& out) {
    cv::Mat img = cv::imread(path, cv::IMREAD_COLOR);
    if (img.empty() || img.rows < 1 || img.cols < 1) return false;
    const int side = std::min(img.rows, img.cols);
    const cv::Rect roi((img.cols - side) / 2, (img.rows - side) / 2, side, side);
    cv::Mat resized;
    cv::resize(img(roi), resized, cv::Size(w, h), 0, 0, cv::INTER_LINEAR);
    out = Tensor::zeros({3, static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
    for (int y = 0; y < h; ++y) {
        const cv::Vec3b* row = resized.ptr<cv::Vec3b>(y);
        for (int x = 0; x < w; ++x) {
            // OpenCV stores BGR
            out.at3(0, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = row[x][2] / 255.0;
            out.at3(1, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = row[x][1] / 255.0;
            out.at3(2, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = row[x][0] / 255.0;
        }
    }
    return true;
}

} // namespace

ImageDataset load_image_dataset(const std::string& source, Split split, int h, int w,
                                std::optional<std::int64_t> limit) {
    if (h < 1 || w < 1) throw ContractError("load_image_dataset: non-positive target size");
    ImageDataset ds;
    ds.split = split;
    ds.height = h;
    ds.width = w;
    const std::vector<std::string> files = list_sources(source);
    for (const std::string& f : files) {
        if (limit && static_cast<std::int64_t>(ds.items.size()) >= *limit) break;
        Tensor t;
        if (!decode_to_tensor(f, h, w, t)) {
            std::cerr << "warning: skipping undecodable image: " << f << "\n";
            continue;
        }
        ds.items.push_back(ImageRecord{f, std::move(t)});
    }
    if (ds.items.empty()) throw IngestError("no decodable images in: " + source);
    return ds;
}

ImageBatch load_single_image(const std::string& path, int h, int w) {
    Tensor t;
    if (!decode_to_tensor(path, h, w, t)) throw IngestError("cannot decode image: " + path);
    ImageBatch b{Tensor::zeros({1, 3, static_cast<std::size_t>(h), static_cast<std::size_t>(w)}),
                 ImageRole::cover};
    std::copy(t.data(), t.data() + t.size(), b.data.data());
    return b;
}

void save_image(const std::string& path, const Tensor& image) {
    if (image.rank() != 4 || image.dim(0) != 1 || image.dim(1) != 3)
        throw ContractError("save_image: need a (1, 3, h, w) tensor, got " + shape_string(image));
    const int h = static_cast<int>(image.dim(2));
    const int w = static_cast<int>(image.dim(3));
    cv::Mat bgr(h, w, CV_8UC3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            auto& px = bgr.at<cv::Vec3b>(y, x);
            for (int c = 0; c < 3; ++c) {
                const double v = image.at4(0, static_cast<std::size_t>(c),
                                           static_cast<std::size_t>(y), static_cast<std::size_t>(x));
                px[2 - c] = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
            }
        }
    if (!cv::imwrite(path, bgr)) throw ValidationError("cannot write image: " + path);
}

MessageBatch sample_messages(RngState& rng, int n, int L) {
    if (n < 1 || L < 1) throw ContractError("sample_messages: n and L must be >= 1");
    MessageBatch mb{Tensor::zeros({static_cast<std::size_t>(n), static_cast<std::size_t>(L)})};
    for (std::size_t i = 0; i < mb.bits.size(); ++i) mb.bits[i] = static_cast<double>(rng.bit());
    return mb;
}

ImageBatch gather_batch(const ImageDataset& ds, const std::size_t* idx, int count) {
    if (count < 1) throw ContractError("gather_batch: empty batch");
    ImageBatch out{Tensor::zeros({static_cast<std::size_t>(count), 3,
                                  static_cast<std::size_t>(ds.height),
                                  static_cast<std::size_t>(ds.width)}),
                   ImageRole::cover};
    const std::size_t item = out.data.size() / static_cast<std::size_t>(count);
    for (int i = 0; i < count; ++i) {
        const Tensor& src = ds.items[idx[i]].image;
        std::copy(src.data(), src.data() + item, out.data.data() + static_cast<std::size_t>(i) * item);
    }
    return out;
}

MinibatchStream::MinibatchStream(const ImageDataset& ds, int batch_size, RngState rng)
    : ds_(&ds), b_(batch_size) {
    if (batch_size < 1) throw ConfigError("minibatches: batch size must be >= 1");
    if (static_cast<std::size_t>(batch_size) > ds.size())
        throw ConfigError("minibatches: batch size " + std::to_string(batch_size) +
                          " exceeds dataset size " + std::to_string(ds.size()));
    perm_.resize(ds.size());
    for (std::size_t i = 0; i < perm_.size(); ++i) perm_[i] = i;
    for (std::size_t i = perm_.size(); i-- > 1;) {
        const std::size_t j = rng.below(i + 1);
        std::swap(perm_[i], perm_[j]);
    }
}

bool MinibatchStream::next(ImageBatch& out, std::vector<std::size_t>* indices) {
    if (cursor_ + static_cast<std::size_t>(b_) > perm_.size()) return false;
    if (indices) indices->assign(perm_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                 perm_.begin() + static_cast<std::ptrdiff_t>(cursor_ + b_));
    out = gather_batch(*ds_, perm_.data() + cursor_, b_);
    cursor_ += static_cast<std::size_t>(b_);
    return true;
}

} // namespace rmk
