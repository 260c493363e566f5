#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rmk/attacks.hpp"
#include "rmk/errors.hpp"
#include "rmk/rng.hpp"
#include "rmk/types.hpp"

#include "testutil.hpp"

#include <cmath>
#include <cstring>
#include <vector>

using namespace rmk;
using testutil::check_gradient;
using testutil::uniform_tensor;

namespace {

double weighted_sum(const Tensor& out, const Tensor& w) {
    REQUIRE(out.size() == w.size());
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * w[i];
    return s;
}

// FD check of d(sum(out .* W))/d(x_wm) through one attack at a frozen draw.
void fd_check_attack(AttackKind kind, double severity, double lo, double hi) {
    RngState rng = make_rng(0x41D5u ^ static_cast<unsigned>(kind));
    const int b = 2, h = 16, w = 16;
    Tensor x = uniform_tensor({2, 3, 16, 16}, rng, lo, hi);
    Tensor cover = uniform_tensor({2, 3, 16, 16}, rng, lo, hi);
    RngState draw_rng = rng.fork("draw");
    AttackDraw draw = sample_attack_draw(kind, b, h, w, draw_rng);

    AttackCache cache;
    Tensor out = attack_forward(kind, x, cover, severity, draw, cache);
    if (kind == AttackKind::jpeg_approx) {
        // the clamp must be inactive everywhere or FD straddles its kink
        for (std::size_t i = 0; i < cache.preclamp.size(); ++i) {
            REQUIRE(cache.preclamp[i] > 0.05);
            REQUIRE(cache.preclamp[i] < 0.95);
        }
    }
    Tensor w_out = uniform_tensor(out.shape(), rng, -1.0, 1.0);
    Tensor gin;
    attack_backward(cache, w_out, gin);
    REQUIRE(gin.shape() == x.shape());

    auto f = [&](const Tensor& xp) {
        AttackCache c2;
        return weighted_sum(attack_forward(kind, xp, cover, severity, draw, c2), w_out);
    };
    // every attack is linear in x away from the clamp, so FD error is pure round-off
    auto r = check_gradient(f, x, gin, 1e-3, 1e-6);
    CHECK(r.checked == x.size());
    CHECK(r.max_rel_err < 1e-5);
}

} // namespace

TEST_CASE("geometry oracles: crop side, blur kernel size, jpeg kept count") {
    // side = floor(sqrt(p) * dim)
    CHECK(static_cast<int>(std::floor(std::sqrt(0.25) * 128)) == 64);
    CHECK(static_cast<int>(std::floor(std::sqrt(0.1) * 128)) == 40);

    RngState rng = make_rng(11);
    Tensor x = uniform_tensor({1, 3, 128, 128}, rng);
    RngState dr = rng.fork("d");
    AttackDraw draw = sample_attack_draw(AttackKind::crop, 1, 128, 128, dr);
    AttackCache cache;
    Tensor out = attack_forward(AttackKind::crop, x, x, 0.25, draw, cache);
    CHECK(out.shape() == std::vector<std::size_t>{1, 3, 64, 64});
    out = attack_forward(AttackKind::crop, x, x, 0.1, draw, cache);
    CHECK(out.shape() == std::vector<std::size_t>{1, 3, 40, 40});

    CHECK(blur_kernel_size(1.0) == 5);
    CHECK(blur_kernel_size(2.0) == 9);
    CHECK(blur_kernel_size(5.0) == 21);
    CHECK(blur_kernel_size(0.5) == 3);

    CHECK(jpeg_coeffs_kept(50.0) == 32);
    CHECK(jpeg_coeffs_kept(100.0) == 64);
    CHECK(jpeg_coeffs_kept(1.0) == 1);
    CHECK(jpeg_coeffs_kept(10.0) == 7);
    CHECK(jpeg_coeffs_kept(90.0) == 58);
}

TEST_CASE("identity passes tensors and gradients through untouched") {
    RngState rng = make_rng(21);
    Tensor x = uniform_tensor({2, 3, 16, 16}, rng);
    AttackDraw draw;
    AttackCache cache;
    Tensor out = attack_forward(AttackKind::identity, x, x, 0.0, draw, cache);
    CHECK(std::memcmp(out.data(), x.data(), x.size() * sizeof(double)) == 0);

    Tensor gout = uniform_tensor(x.shape(), rng, -1.0, 1.0);
    Tensor gin;
    attack_backward(cache, gout, gin);
    CHECK(std::memcmp(gin.data(), gout.data(), gout.size() * sizeof(double)) == 0);
}

TEST_CASE("crop copies the placed window and stays in bounds") {
    RngState rng = make_rng(31);
    const int h = 32, w = 32;
    Tensor x = uniform_tensor({3, 3, 32, 32}, rng);
    RngState dr = rng.fork("d");
    AttackDraw draw = sample_attack_draw(AttackKind::crop, 3, h, w, dr);
    AttackCache cache;
    Tensor out = attack_forward(AttackKind::crop, x, x, 0.4, draw, cache);
    const int side = static_cast<int>(std::floor(std::sqrt(0.4) * 32));
    CHECK(side == 20);
    REQUIRE(out.dim(2) == static_cast<std::size_t>(side));
    REQUIRE(cache.oy.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(cache.oy[i] >= 0);
        CHECK(cache.oy[i] + side <= h);
        CHECK(cache.ox[i] + side <= w);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < side; ++y)
                for (int xx = 0; xx < side; ++xx)
                    CHECK(out.at4(i, c, y, xx) ==
                          x.at4(i, c, cache.oy[i] + y, cache.ox[i] + xx));
    }
}

TEST_CASE("cropout keeps a square of watermarked pixels on a cover background") {
    RngState rng = make_rng(41);
    Tensor wm = Tensor::full({2, 3, 32, 32}, 1.0);
    Tensor cover = Tensor::zeros({2, 3, 32, 32});
    RngState dr = rng.fork("d");
    AttackDraw draw = sample_attack_draw(AttackKind::cropout, 2, 32, 32, dr);
    AttackCache cache;
    const double p = 0.5;
    Tensor out = attack_forward(AttackKind::cropout, wm, cover, p, draw, cache);
    CHECK(out.shape() == wm.shape());

    const int side = static_cast<int>(std::floor(std::sqrt(p) * 32));
    double total = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK((out[i] == 0.0 || out[i] == 1.0));
        total += out[i];
    }
    // ones count = batch * channels * side^2 exactly; kept fraction ~ p
    CHECK(total == doctest::Approx(2.0 * 3.0 * side * side));
    const double kept_frac = static_cast<double>(side * side) / (32.0 * 32.0);
    CHECK(kept_frac == doctest::Approx(p).epsilon(0.15));

    // kept region is one solid rectangle: per row, ones are contiguous
    for (int y = 0; y < 32; ++y) {
        int first = -1, last = -1, count = 0;
        for (int xx = 0; xx < 32; ++xx)
            if (cache.mask.at3(0, y, xx) == 1.0) {
                if (first < 0) first = xx;
                last = xx;
                ++count;
            }
        if (count > 0) CHECK(last - first + 1 == count);
    }
}

TEST_CASE("dropout mixes per-pixel with one mask shared across channels") {
    RngState rng = make_rng(51);
    Tensor wm = Tensor::full({2, 3, 64, 64}, 1.0);
    Tensor cover = Tensor::zeros({2, 3, 64, 64});
    RngState dr = rng.fork("d");
    AttackDraw draw = sample_attack_draw(AttackKind::dropout, 2, 64, 64, dr);
    AttackCache cache;
    const double p = 0.3;
    Tensor out = attack_forward(AttackKind::dropout, wm, cover, p, draw, cache);

    double mask_mean = 0.0;
    for (std::size_t i = 0; i < cache.mask.size(); ++i) mask_mean += cache.mask[i];
    mask_mean /= static_cast<double>(cache.mask.size());
    CHECK(mask_mean == doctest::Approx(p).epsilon(0.1));

    for (int i = 0; i < 2; ++i)
        for (int y = 0; y < 64; ++y)
            for (int xx = 0; xx < 64; ++xx) {
                const double v = out.at4(i, 0, y, xx);
                CHECK(out.at4(i, 1, y, xx) == v);
                CHECK(out.at4(i, 2, y, xx) == v);
            }

    // extremes of the keep probability
    AttackCache c1;
    Tensor all_wm = attack_forward(AttackKind::dropout, wm, cover, 1.0, draw, c1);
    for (std::size_t i = 0; i < all_wm.size(); ++i) CHECK(all_wm[i] == 1.0);
    Tensor all_cover = attack_forward(AttackKind::dropout, wm, cover, 0.0, draw, c1);
    for (std::size_t i = 0; i < all_cover.size(); ++i) CHECK(all_cover[i] == 0.0);
}

TEST_CASE("blur preserves constants and averages locally") {
    RngState rng = make_rng(61);
    Tensor flat = Tensor::full({1, 3, 16, 16}, 0.37);
    AttackDraw draw;
    AttackCache cache;
    Tensor out = attack_forward(AttackKind::gaussian_blur, flat, flat, 2.0, draw, cache);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(0.37).epsilon(1e-12));
    CHECK(cache.kernel.dim(0) == 9);

    // kernel sums to one and is symmetric
    double ks = 0.0;
    for (std::size_t i = 0; i < cache.kernel.size(); ++i) ks += cache.kernel[i];
    CHECK(ks == doctest::Approx(1.0).epsilon(1e-12));
    const int k = static_cast<int>(cache.kernel.dim(0));
    for (int a = 0; a < k; ++a)
        for (int bb = 0; bb < k; ++bb)
            CHECK(cache.kernel.at2(a, bb) == doctest::Approx(cache.kernel.at2(bb, a)).epsilon(1e-15));

    // blurring shrinks the range of a random image
    Tensor x = uniform_tensor({1, 3, 16, 16}, rng);
    Tensor bx = attack_forward(AttackKind::gaussian_blur, x, x, 3.0, draw, cache);
    double lo = 1.0, hi = 0.0, blo = 1.0, bhi = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        lo = std::min(lo, x[i]);
        hi = std::max(hi, x[i]);
        blo = std::min(blo, bx[i]);
        bhi = std::max(bhi, bx[i]);
    }
    CHECK(bhi - blo < hi - lo);
}

TEST_CASE("jpeg approximation keeps constants and degrades monotonically in kept energy") {
    Tensor flat = Tensor::full({1, 3, 16, 16}, 0.6);
    AttackDraw draw;
    AttackCache cache;
    // only the DC coefficient is nonzero on a constant block, and q=1 keeps it
    Tensor out = attack_forward(AttackKind::jpeg_approx, flat, flat, 1.0, draw, cache);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(0.6).epsilon(1e-12));

    RngState rng = make_rng(71);
    Tensor x = uniform_tensor({1, 3, 16, 16}, rng);
    Tensor q100 = attack_forward(AttackKind::jpeg_approx, x, x, 100.0, draw, cache);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(q100[i] == doctest::Approx(x[i]).epsilon(1e-9));

    auto mse_at = [&](double q) {
        AttackCache c2;
        Tensor o = attack_forward(AttackKind::jpeg_approx, x, x, q, draw, c2);
        double s = 0.0;
        for (std::size_t i = 0; i < o.size(); ++i) s += (o[i] - x[i]) * (o[i] - x[i]);
        return s / static_cast<double>(o.size());
    };
    CHECK(mse_at(50.0) > mse_at(80.0));
    CHECK(mse_at(20.0) > mse_at(50.0));
}

TEST_CASE("tie-break order points toward the harsher severity") {
    CHECK(more_severe(AttackKind::crop, 0.2, 0.5));
    CHECK_FALSE(more_severe(AttackKind::crop, 0.5, 0.2));
    CHECK(more_severe(AttackKind::cropout, 0.3, 0.4));
    CHECK(more_severe(AttackKind::dropout, 0.3, 0.4));
    CHECK(more_severe(AttackKind::jpeg_approx, 50.0, 90.0));
    CHECK(more_severe(AttackKind::gaussian_blur, 4.0, 1.0));
    CHECK_FALSE(more_severe(AttackKind::gaussian_blur, 1.0, 4.0));
    CHECK_FALSE(more_severe(AttackKind::identity, 1.0, 0.0));
}

TEST_CASE("frozen draws replay identically and apply() is deterministic") {
    RngState rng = make_rng(81);
    Tensor wm = uniform_tensor({3, 3, 32, 32}, rng);
    Tensor cover = uniform_tensor({3, 3, 32, 32}, rng);

    for (AttackKind kind : {AttackKind::crop, AttackKind::cropout, AttackKind::dropout}) {
        RngState d1 = rng.fork("draw");
        AttackDraw draw = sample_attack_draw(kind, 3, 32, 32, d1);
        AttackCache ca, cb;
        Tensor a = attack_forward(kind, wm, cover, 0.4, draw, ca);
        Tensor b = attack_forward(kind, wm, cover, 0.4, draw, cb);
        CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);

        // severities share the draw: same crop center scales, dropout masks nest
        if (kind == AttackKind::dropout) {
            AttackCache c4, c6;
            attack_forward(kind, wm, cover, 0.4, draw, c4);
            attack_forward(kind, wm, cover, 0.6, draw, c6);
            for (std::size_t i = 0; i < c4.mask.size(); ++i)
                if (c4.mask[i] == 1.0) CHECK(c6.mask[i] == 1.0);
        }
    }

    // same rng key => bitwise-equal results through the spec-level entry point
    AttackSpec spec;
    spec.kind = AttackKind::cropout;
    ImageBatch bw{wm, ImageRole::watermarked};
    ImageBatch bc{cover, ImageRole::cover};
    RngState r1 = make_rng(99).fork("apply");
    RngState r2 = make_rng(99).fork("apply");
    ImageBatch o1 = apply(spec, bw, bc, 0.5, r1);
    ImageBatch o2 = apply(spec, bw, bc, 0.5, r2);
    CHECK(std::memcmp(o1.data.data(), o2.data.data(), o1.data.size() * sizeof(double)) == 0);

    RngState r3 = make_rng(100).fork("apply");
    ImageBatch o3 = apply(spec, bw, bc, 0.5, r3);
    CHECK(std::memcmp(o1.data.data(), o3.data.data(), o1.data.size() * sizeof(double)) != 0);
}

TEST_CASE("severity domain violations throw typed errors") {
    RngState rng = make_rng(91);
    Tensor x = uniform_tensor({1, 3, 16, 16}, rng);
    RngState dr = rng.fork("d");
    AttackDraw crop_draw = sample_attack_draw(AttackKind::crop, 1, 16, 16, dr);
    AttackDraw drop_draw = sample_attack_draw(AttackKind::dropout, 1, 16, 16, dr);
    AttackCache cache;

    CHECK_THROWS_AS(attack_forward(AttackKind::crop, x, x, 0.0, crop_draw, cache),
                    SeverityDomainError);
    CHECK_THROWS_AS(attack_forward(AttackKind::crop, x, x, 1.5, crop_draw, cache),
                    SeverityDomainError);
    // sqrt(0.2)*16 = 7 < 8-pixel minimum
    CHECK_THROWS_AS(attack_forward(AttackKind::crop, x, x, 0.2, crop_draw, cache),
                    SeverityDomainError);
    CHECK_THROWS_AS(attack_forward(AttackKind::dropout, x, x, -0.1, drop_draw, cache),
                    SeverityDomainError);
    CHECK_THROWS_AS(attack_forward(AttackKind::dropout, x, x, 1.1, drop_draw, cache),
                    SeverityDomainError);
    CHECK_THROWS_AS(attack_forward(AttackKind::gaussian_blur, x, x, 0.0, AttackDraw{}, cache),
                    SeverityDomainError);
    CHECK_THROWS_AS(attack_forward(AttackKind::jpeg_approx, x, x, 0.0, AttackDraw{}, cache),
                    SeverityDomainError);
    CHECK_THROWS_AS(attack_forward(AttackKind::jpeg_approx, x, x, 101.0, AttackDraw{}, cache),
                    SeverityDomainError);

    Tensor odd = uniform_tensor({1, 3, 12, 12}, rng);
    CHECK_THROWS_AS(attack_forward(AttackKind::jpeg_approx, odd, odd, 50.0, AttackDraw{}, cache),
                    ContractError);

    Tensor r3 = uniform_tensor({3, 16, 16}, rng);
    CHECK_THROWS_AS(attack_forward(AttackKind::identity, r3, r3, 0.0, AttackDraw{}, cache),
                    ContractError);
}

TEST_CASE("finite differences confirm every attack backward") {
    fd_check_attack(AttackKind::identity, 0.0, 0.0, 1.0);
    fd_check_attack(AttackKind::crop, 0.5, 0.0, 1.0);
    fd_check_attack(AttackKind::cropout, 0.5, 0.0, 1.0);
    fd_check_attack(AttackKind::dropout, 0.5, 0.0, 1.0);
    fd_check_attack(AttackKind::gaussian_blur, 1.5, 0.0, 1.0);
    // jpeg input sits well inside [0,1] so the clamp never engages
    fd_check_attack(AttackKind::jpeg_approx, 50.0, 0.35, 0.65);
}
