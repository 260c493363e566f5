#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rmk/config.hpp"
#include "rmk/errors.hpp"
#include "rmk/rng.hpp"
#include "rmk/tensor.hpp"
#include "testutil.hpp"

#include <cmath>
#include <fstream>
#include <set>

using namespace rmk;
using namespace testutil;

TEST_CASE("tensor shape bookkeeping and accessors") {
    Tensor t({2, 3, 4, 5});
    CHECK(t.rank() == 4);
    CHECK(t.size() == 120);
    CHECK(t.dim(3) == 5);
    t.at4(1, 2, 3, 4) = 7.0;
    CHECK(t[119] == 7.0);
    CHECK(t.all_finite());
    t[0] = std::nan("");
    CHECK(!t.all_finite());

    Tensor z = Tensor::zeros({3});
    CHECK(z.size() == 3);
    CHECK(z[2] == 0.0);
    Tensor f = Tensor::full({2, 2}, 1.5);
    CHECK(f[3] == 1.5);
    CHECK_THROWS_AS(Tensor(std::vector<std::size_t>{}), ContractError);
    CHECK_THROWS_AS(Tensor({1, 2, 3, 4, 5}), ContractError);
}

TEST_CASE("slice_batch copies whole leading rows") {
    Tensor t({4, 2, 3, 3});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
    Tensor s = slice_batch(t, 1, 2);
    CHECK(s.shape() == std::vector<std::size_t>{2, 2, 3, 3});
    const std::size_t row = 2 * 3 * 3;
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == static_cast<double>(i + row));
    CHECK_THROWS_AS(slice_batch(t, 3, 2), ContractError);
}

TEST_CASE("rng streams are deterministic and fork-stable") {
    RngState a = make_rng(1234);
    RngState b = make_rng(1234);
    for (int i = 0; i < 32; ++i) CHECK(a.u64() == b.u64());
    CHECK(make_rng(1).u64() != make_rng(2).u64());

    // a fork depends on the parent's identity, not on how much it has drawn
    RngState p = make_rng(77);
    RngState f1 = p.fork("attacks");
    p.u64();
    p.u64();
    RngState f2 = p.fork("attacks");
    for (int i = 0; i < 8; ++i) CHECK(f1.u64() == f2.u64());

    CHECK(p.fork("x").u64() != p.fork("y").u64());
    CHECK(p.fork(std::uint64_t{3}).u64() != p.fork(std::uint64_t{4}).u64());
    CHECK(p.fork("x").fork("y").u64() != p.fork("y").fork("x").u64());
}

TEST_CASE("rng draws stay in range with sane first moments") {
    RngState rng = make_rng(99);
    double acc = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        acc += u;
    }
    CHECK(acc / 20000 == doctest::Approx(0.5).epsilon(0.02));

    int ones = 0;
    for (int i = 0; i < 20000; ++i) ones += static_cast<int>(rng.bit());
    CHECK(std::fabs(ones / 20000.0 - 0.5) < 0.02);

    int buckets[6] = {};
    for (int i = 0; i < 30000; ++i) {
        const std::uint64_t v = rng.below(6);
        REQUIRE(v < 6);
        ++buckets[v];
    }
    for (int k = 0; k < 6; ++k) CHECK(std::fabs(buckets[k] - 5000.0) < 350.0);  // ~5 sigma
}

TEST_CASE("severity grids materialize without drift") {
    const SeverityGrid crop{0.1, 0.8, 0.1};
    const auto v = crop.values();
    REQUIRE(v.size() == 8);
    CHECK(v.front() == 0.1);
    CHECK(v.back() == 0.8);
    for (std::size_t i = 1; i < v.size(); ++i)
        CHECK(v[i] - v[i - 1] == doctest::Approx(0.1).epsilon(1e-12));

    CHECK(SeverityGrid{50, 100, 10}.values() == std::vector<double>{50, 60, 70, 80, 90, 100});
    CHECK(SeverityGrid{1, 5, 1}.values() == std::vector<double>{1, 2, 3, 4, 5});
    CHECK(SeverityGrid{0.3, 0.3, 0.1}.values() == std::vector<double>{0.3});
    CHECK_THROWS_AS(SeverityGrid({0.1, 0.5, 0.0}).values(), ConfigError);
    CHECK_THROWS_AS(SeverityGrid({0.5, 0.1, 0.1}).values(), ConfigError);
}

TEST_CASE("default attack set follows the training mode") {
    const auto wc = default_attacks_for_mode(TrainMode::worst_case);
    REQUIRE(wc.size() == 5);
    CHECK(wc[0].kind == AttackKind::crop);
    CHECK(wc[4].kind == AttackKind::jpeg_approx);
    CHECK(!wc[4].fixed.has_value());  // compression has no published fixed strength
    CHECK(*wc[0].fixed == 0.3);
    CHECK(*wc[3].fixed == 2.0);

    const auto fs = default_attacks_for_mode(TrainMode::fixed_severity);
    REQUIRE(fs.size() == 4);
    for (const auto& a : fs) CHECK(a.kind != AttackKind::jpeg_approx);
}

TEST_CASE("batch splitting sends the remainder to the earliest groups") {
    TrainConfig cfg;
    cfg.batch_size = 12;
    CHECK(cfg.effective_subset_sizes() == std::vector<int>{3, 3, 2, 2, 2});
    cfg.batch_size = 8;
    cfg.attacks = {AttackSpec{AttackKind::crop, {0.1, 0.8, 0.1}, 0.3},
                   AttackSpec{AttackKind::dropout, {0.3, 0.9, 0.1}, 0.3},
                   AttackSpec{AttackKind::gaussian_blur, {1, 5, 1}, 2.0}};
    CHECK(cfg.effective_subset_sizes() == std::vector<int>{3, 3, 2});
    cfg.subset_sizes = {4, 2, 2};
    CHECK(cfg.effective_subset_sizes() == std::vector<int>{4, 2, 2});
}

TEST_CASE("config json round-trips exactly") {
    TrainConfig cfg;
    cfg.data.train_dir = "/tmp/train";
    cfg.data.eval_dir = "/tmp/eval";
    cfg.data.limit = 200;
    cfg.batch_size = 8;
    cfg.subset_sizes = {4, 2, 1, 1};
    cfg.attacks = {AttackSpec{AttackKind::crop, {0.2, 0.6, 0.2}, 0.3},
                   AttackSpec{AttackKind::dropout, {0.3, 0.9, 0.3}, std::nullopt},
                   AttackSpec{AttackKind::gaussian_blur, {1, 3, 1}, 2.0},
                   AttackSpec{AttackKind::identity, {0, 0, 1}, std::nullopt}};
    cfg.mode = TrainMode::worst_case;
    cfg.optimizer = OptimizerKind::adam;
    cfg.arch.channels = 16;
    cfg.arch.message_length = 8;
    cfg.arch.image_h = cfg.arch.image_w = 64;
    cfg.epochs = 3;
    cfg.seed = 42;
    cfg.eval.true_jpeg = true;

    const TrainConfig back = config_from_json(emit_config(cfg));
    CHECK(back == cfg);

    // null vs absent fixed severities survive the trip
    CHECK(!back.attacks[1].fixed.has_value());
    CHECK(*back.attacks[2].fixed == 2.0);
}

TEST_CASE("config parsing rejects unknown keys with their path") {
    nlohmann::json j;
    j["training"]["batch_sizes"] = 4;  // typo
    try {
        config_from_json(j);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("batch_sizes") != std::string::npos);
    }
    nlohmann::json top;
    top["trainign"] = nlohmann::json::object();
    CHECK_THROWS_AS(config_from_json(top), ConfigError);
}

TEST_CASE("config validation pins the documented invariants") {
    TrainConfig cfg;

    SUBCASE("more attacks than batch items") {
        cfg.batch_size = 3;  // 5 default attacks
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("subset sizes must cover the batch exactly") {
        cfg.batch_size = 12;
        cfg.subset_sizes = {6, 2, 2, 1, 2};  // sums to 13
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
        cfg.subset_sizes = {6, 2, 2, 1};  // wrong length
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("severity domains") {
        cfg.attacks = {AttackSpec{AttackKind::crop, {0.1, 1.5, 0.1}, std::nullopt}};
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
        cfg.attacks = {AttackSpec{AttackKind::jpeg_approx, {0, 100, 10}, std::nullopt}};
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
        cfg.attacks = {AttackSpec{AttackKind::gaussian_blur, {1, 5, 1}, -2.0}};
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("fixed mode needs a fixed value per non-identity attack") {
        cfg.mode = TrainMode::fixed_severity;  // default attacks include jpeg without fixed
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
        cfg.attacks = default_attacks_for_mode(TrainMode::fixed_severity);
        CHECK_NOTHROW(cfg.validate());
    }
    SUBCASE("loss weights and rates must be nonnegative") {
        cfg.weights.lambda_image = -0.1;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
        cfg.weights.lambda_image = 0.7;
        cfg.lr_encoder = -1.0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("image sides keep the 8x8 block alignment") {
        cfg.arch.image_h = 100;  // not a multiple of 8
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("epochs zero is allowed, negative is not") {
        cfg.epochs = 0;
        CHECK_NOTHROW(cfg.validate());
        cfg.epochs = -1;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
}

TEST_CASE("attack list grammar") {
    const auto specs = parse_attack_list("crop=0.1:0.8:0.1, dropout=fixed:0.3,gaussian_blur");
    REQUIRE(specs.size() == 3);
    CHECK(specs[0].kind == AttackKind::crop);
    CHECK(specs[0].grid.values().size() == 8);
    CHECK(specs[1].kind == AttackKind::dropout);
    CHECK(*specs[1].fixed == 0.3);
    CHECK(specs[1].grid.values() == std::vector<double>{0.3});
    CHECK(specs[2].kind == AttackKind::gaussian_blur);
    CHECK(specs[2].grid.values() == std::vector<double>{1, 2, 3, 4, 5});

    CHECK_THROWS_AS(parse_attack_list("sharpen"), ConfigError);
    CHECK_THROWS_AS(parse_attack_list("crop=0.1:0.8"), ConfigError);
    CHECK_THROWS_AS(parse_attack_list("crop=a:b:c"), ConfigError);
    CHECK_THROWS_AS(parse_attack_list(""), ConfigError);
}

TEST_CASE("config files load and save through disk") {
    TempDir tmp("config");
    TrainConfig cfg;
    cfg.seed = 7;
    cfg.arch.message_length = 12;
    save_config(cfg, tmp.file("c.json"));
    const TrainConfig back = load_config(tmp.file("c.json"));
    CHECK(back == cfg);

    CHECK_THROWS_AS(load_config(tmp.file("missing.json")), ConfigError);
    {
        std::ofstream bad(tmp.file("bad.json"));
        bad << "{ not json";
    }
    CHECK_THROWS_AS(load_config(tmp.file("bad.json")), ConfigError);
}
