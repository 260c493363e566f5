#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rmk/checkpoint.hpp"
#include "rmk/config.hpp"
#include "rmk/dataset.hpp"
#include "rmk/errors.hpp"
#include "rmk/models.hpp"
#include "rmk/rng.hpp"

#include "testutil.hpp"

#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <string>
#include <vector>

using namespace rmk;

namespace {

void write_flat_png(const std::string& path, int size, unsigned char r, unsigned char g,
                    unsigned char b) {
    cv::Mat img(size, size, CV_8UC3, cv::Scalar(b, g, r));  // BGR order on disk
    REQUIRE(cv::imwrite(path, img));
}

std::vector<double> flatten_params(ModelBundle& m) {
    std::vector<double> v;
    visit_params(m, [&](const std::string&, Tensor& val, Tensor&) {
        for (std::size_t i = 0; i < val.size(); ++i) v.push_back(val[i]);
    });
    visit_buffers(m, [&](const std::string&, Tensor& val) {
        for (std::size_t i = 0; i < val.size(); ++i) v.push_back(val[i]);
    });
    return v;
}

} // namespace

TEST_CASE("directory ingest: shapes, sorted order, limit") {
    testutil::TempDir dir("ingest");
    RngState rng = make_rng(1);
    // write out of order to prove sorting is by name, not creation time
    for (const char* name : {"c.png", "a.png", "b.png", "d.png"})
        testutil::write_texture_png(dir.file(name), 24, rng);

    ImageDataset ds = load_image_dataset(dir.str(), Split::train, 16, 16);
    REQUIRE(ds.size() == 4);
    CHECK(ds.height == 16);
    CHECK(ds.width == 16);
    CHECK(ds.items[0].path.ends_with("a.png"));
    CHECK(ds.items[1].path.ends_with("b.png"));
    CHECK(ds.items[2].path.ends_with("c.png"));
    CHECK(ds.items[3].path.ends_with("d.png"));
    for (const auto& it : ds.items) {
        CHECK(it.image.shape() == std::vector<std::size_t>{3, 16, 16});
        for (std::size_t i = 0; i < it.image.size(); ++i) {
            CHECK(it.image[i] >= 0.0);
            CHECK(it.image[i] <= 1.0);
        }
    }

    ImageDataset limited = load_image_dataset(dir.str(), Split::train, 16, 16, 2);
    REQUIRE(limited.size() == 2);
    CHECK(limited.items[0].path.ends_with("a.png"));
    CHECK(limited.items[1].path.ends_with("b.png"));
}

TEST_CASE("solid-color images survive resize exactly") {
    testutil::TempDir dir("gray");
    write_flat_png(dir.file("gray.png"), 40, 128, 128, 128);
    write_flat_png(dir.file("rgb.png"), 40, 255, 0, 64);

    ImageDataset ds = load_image_dataset(dir.str(), Split::train, 16, 16);
    REQUIRE(ds.size() == 2);
    // sorted: gray.png then rgb.png
    const Tensor& gray = ds.items[0].image;
    for (std::size_t i = 0; i < gray.size(); ++i)
        CHECK(gray[i] == doctest::Approx(128.0 / 255.0).epsilon(1e-9));

    const Tensor& rgb = ds.items[1].image;
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            CHECK(rgb.at3(0, y, x) == doctest::Approx(1.0).epsilon(1e-9));
            CHECK(rgb.at3(1, y, x) == doctest::Approx(0.0).epsilon(1e-9));
            CHECK(rgb.at3(2, y, x) == doctest::Approx(64.0 / 255.0).epsilon(1e-9));
        }
}

TEST_CASE("non-square covers center-crop before resizing") {
    testutil::TempDir dir("crop");
    // left half black, right half white, 64x32: the center 32x32 square
    // straddles the boundary equally
    cv::Mat img(32, 64, CV_8UC3, cv::Scalar(0, 0, 0));
    img(cv::Rect(32, 0, 32, 32)) = cv::Scalar(255, 255, 255);
    REQUIRE(cv::imwrite(dir.file("wide.png"), img));

    ImageDataset ds = load_image_dataset(dir.str(), Split::train, 16, 16);
    REQUIRE(ds.size() == 1);
    const Tensor& t = ds.items[0].image;
    // columns from the left half of the crop stay black, right half white
    CHECK(t.at3(0, 8, 1) == doctest::Approx(0.0));
    CHECK(t.at3(0, 8, 14) == doctest::Approx(1.0));
}

TEST_CASE("manifest files list images and resolve relative paths") {
    testutil::TempDir dir("manifest");
    RngState rng = make_rng(2);
    testutil::write_texture_png(dir.file("one.png"), 24, rng);
    testutil::write_texture_png(dir.file("two.png"), 24, rng);
    {
        std::ofstream f(dir.file("list.txt"));
        f << "two.png\n\none.png\n";  // blank line skipped, order preserved
    }
    ImageDataset ds = load_image_dataset(dir.file("list.txt"), Split::test, 16, 16);
    REQUIRE(ds.size() == 2);
    CHECK(ds.items[0].path.ends_with("two.png"));
    CHECK(ds.items[1].path.ends_with("one.png"));
    CHECK(ds.split == Split::test);
}

TEST_CASE("corrupt files are skipped; an empty yield is an ingest error") {
    testutil::TempDir dir("corrupt");
    RngState rng = make_rng(3);
    testutil::write_texture_png(dir.file("ok.png"), 24, rng);
    {
        std::ofstream f(dir.file("broken.png"));
        f << "this is not an image";
    }
    ImageDataset ds = load_image_dataset(dir.str(), Split::train, 16, 16);
    REQUIRE(ds.size() == 1);
    CHECK(ds.items[0].path.ends_with("ok.png"));

    testutil::TempDir empty("empty");
    {
        std::ofstream f(empty.file("junk.png"));
        f << "nope";
    }
    CHECK_THROWS_AS(load_image_dataset(empty.str(), Split::train, 16, 16), IngestError);
    CHECK_THROWS_AS(load_image_dataset(empty.file("missing_dir"), Split::train, 16, 16),
                    IngestError);
}

TEST_CASE("message sampling is uniform bits with a deterministic stream") {
    RngState r1 = make_rng(4), r2 = make_rng(4);
    MessageBatch a = sample_messages(r1, 64, 16);
    MessageBatch b = sample_messages(r2, 64, 16);
    REQUIRE(a.bits.shape() == std::vector<std::size_t>{64, 16});
    CHECK(a.bits == b.bits);

    double ones = 0.0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        CHECK((a.bits[i] == 0.0 || a.bits[i] == 1.0));
        ones += a.bits[i];
    }
    const double frac = ones / static_cast<double>(a.bits.size());
    CHECK(frac > 0.45);
    CHECK(frac < 0.55);
}

TEST_CASE("minibatch stream permutes once per epoch and drops the remainder") {
    testutil::TempDir dir("stream");
    RngState rng = make_rng(5);
    for (int i = 0; i < 10; ++i)
        testutil::write_texture_png(dir.file("t" + std::to_string(i) + ".png"), 24, rng);
    ImageDataset ds = load_image_dataset(dir.str(), Split::train, 16, 16);
    REQUIRE(ds.size() == 10);

    MinibatchStream stream(ds, 4, make_rng(6));
    CHECK(stream.batches_per_epoch() == 2);  // 10/4 -> 2 full batches

    ImageBatch batch;
    std::vector<std::size_t> idx, seen;
    int batches = 0;
    while (stream.next(batch, &idx)) {
        ++batches;
        REQUIRE(batch.data.shape() == std::vector<std::size_t>{4, 3, 16, 16});
        REQUIRE(idx.size() == 4);
        // the batch really is the gathered items, in permutation order
        for (int i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < ds.items[idx[i]].image.size(); ++j)
                REQUIRE(batch.data[i * ds.items[idx[i]].image.size() + j] ==
                        ds.items[idx[i]].image[j]);
        seen.insert(seen.end(), idx.begin(), idx.end());
    }
    CHECK(batches == 2);
    CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == 8);  // no repeats

    // a different rng fork shuffles differently; the same fork replays
    std::vector<std::size_t> first_epoch = seen;
    MinibatchStream replay(ds, 4, make_rng(6));
    seen.clear();
    while (replay.next(batch, &idx)) seen.insert(seen.end(), idx.begin(), idx.end());
    CHECK(seen == first_epoch);

    MinibatchStream other(ds, 4, make_rng(7));
    seen.clear();
    while (other.next(batch, &idx)) seen.insert(seen.end(), idx.begin(), idx.end());
    CHECK(seen != first_epoch);

    CHECK_THROWS_AS(MinibatchStream(ds, 11, make_rng(8)), ConfigError);
    CHECK_THROWS_AS(MinibatchStream(ds, 0, make_rng(8)), ConfigError);
}

TEST_CASE("images round-trip through save_image at 8-bit precision") {
    testutil::TempDir dir("roundtrip");
    RngState rng = make_rng(9);
    Tensor img({1, 3, 24, 24});
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = rng.uniform01();

    save_image(dir.file("out.png"), img);
    ImageBatch back = load_single_image(dir.file("out.png"), 24, 24);
    REQUIRE(back.data.shape() == img.shape());
    for (std::size_t i = 0; i < img.size(); ++i)
        CHECK(std::fabs(back.data[i] - img[i]) <= 0.5 / 255.0 + 1e-12);

    // quantization is exact on the 256 representable levels
    Tensor exact({1, 3, 8, 8});
    for (std::size_t i = 0; i < exact.size(); ++i)
        exact[i] = static_cast<double>((i * 7) % 256) / 255.0;
    save_image(dir.file("exact.png"), exact);
    ImageBatch back2 = load_single_image(dir.file("exact.png"), 8, 8);
    for (std::size_t i = 0; i < exact.size(); ++i)
        CHECK(back2.data[i] == doctest::Approx(exact[i]).epsilon(1e-12));

    Tensor bad({3, 8, 8});
    CHECK_THROWS_AS(save_image(dir.file("bad.png"), bad), ContractError);
    CHECK_THROWS_AS(save_image("/nonexistent_dir_zz/x.png", img), ValidationError);
}

TEST_CASE("checkpoints rebuild the exact model and reject corruption") {
    testutil::TempDir dir("ckpt");
    ArchConfig a;
    a.channels = 4;
    a.encoder_pre_blocks = 1;
    a.encoder_post_blocks = 1;
    a.decoder_blocks = 1;
    a.discriminator_blocks = 1;
    a.message_length = 4;
    a.image_h = 16;
    a.image_w = 16;
    a.min_input_size = 8;

    RngState rng = make_rng(10);
    ModelBundle m = init_models(a, rng);
    m.step = 42;
    m.init_seed = 99;
    // make buffers non-trivial so the round-trip covers them
    Tensor x({2, 3, 16, 16});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform01();
    m.decoder.forward(x, kTrainMode, nullptr);

    TrainConfig cfg;
    cfg.arch = a;
    cfg.attacks = {AttackSpec{}};
    cfg.batch_size = 2;
    cfg.seed = 123;

    const std::string path = dir.file("model.ckpt");
    save_checkpoint(m, &cfg, path);

    std::optional<TrainConfig> snap;
    ModelBundle back = load_checkpoint(path, &snap);
    CHECK(back.step == 42);
    CHECK(back.init_seed == 99);
    CHECK(back.arch == a);
    CHECK(flatten_params(back) == flatten_params(m));
    REQUIRE(snap.has_value());
    CHECK(*snap == cfg);

    nlohmann::json meta = inspect_checkpoint(path);
    CHECK(meta.at("step").get<std::int64_t>() == 42);
    CHECK(meta.at("arrays").is_array());
    CHECK(!meta.at("arrays").empty());

    // magic corruption
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XX", 2);
    }
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);

    // truncation
    save_checkpoint(m, nullptr, path);
    {
        std::ifstream in(path, std::ios::binary);
        std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(all.data(), static_cast<std::streamsize>(all.size() / 2));
    }
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);

    CHECK_THROWS_AS(load_checkpoint(dir.file("missing.ckpt")), FormatError);

    // a snapshot-free checkpoint loads with an empty config slot
    save_checkpoint(m, nullptr, path);
    std::optional<TrainConfig> no_snap;
    ModelBundle again = load_checkpoint(path, &no_snap);
    CHECK(!no_snap.has_value());
    CHECK(flatten_params(again) == flatten_params(m));
}
