#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rmk/kernels.hpp"
#include "rmk/rng.hpp"
#include "rmk/tensor.hpp"
#include "testutil.hpp"

#include <cmath>
#include <cstring>
#include <vector>

using namespace rmk;
using namespace testutil;
namespace K = rmk::kernels;

namespace {

// textbook convolution, written independently of the library loops
void naive_conv(const std::vector<double>& in, int b, int cin, int h, int w,
                const std::vector<double>& wgt, const std::vector<double>& bias, int cout, int k,
                int pad, std::vector<double>& out) {
    const int ho = h + 2 * pad - k + 1, wo = w + 2 * pad - k + 1;
    out.assign(static_cast<std::size_t>(b) * cout * ho * wo, 0.0);
    for (int ib = 0; ib < b; ++ib)
        for (int co = 0; co < cout; ++co)
            for (int y = 0; y < ho; ++y)
                for (int x = 0; x < wo; ++x) {
                    double acc = bias.empty() ? 0.0 : bias[co];
                    for (int ci = 0; ci < cin; ++ci)
                        for (int dy = 0; dy < k; ++dy)
                            for (int dx = 0; dx < k; ++dx) {
                                const int iy = y + dy - pad, ix = x + dx - pad;
                                if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                                acc += wgt[((co * cin + ci) * k + dy) * k + dx] *
                                       in[((ib * cin + ci) * h + iy) * w + ix];
                            }
                    out[((ib * cout + co) * ho + y) * wo + x] = acc;
                }
}

std::vector<double> random_vec(std::size_t n, RngState& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = lo + (hi - lo) * rng.uniform01();
    return v;
}

bool bit_identical(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

} // namespace

TEST_CASE("conv2d forward matches a naive oracle") {
    RngState rng = make_rng(11);
    for (auto [b, cin, cout, h, w, k, pad] :
         {std::array<int, 7>{2, 3, 4, 9, 7, 3, 1}, std::array<int, 7>{1, 1, 1, 5, 5, 1, 0},
          std::array<int, 7>{3, 2, 5, 8, 8, 3, 0}, std::array<int, 7>{1, 4, 2, 6, 10, 5, 2}}) {
        const auto in = random_vec(static_cast<std::size_t>(b) * cin * h * w, rng);
        const auto wgt = random_vec(static_cast<std::size_t>(cout) * cin * k * k, rng);
        const auto bias = random_vec(static_cast<std::size_t>(cout), rng);
        const int ho = h + 2 * pad - k + 1, wo = w + 2 * pad - k + 1;
        std::vector<double> out(static_cast<std::size_t>(b) * cout * ho * wo), want;
        K::conv2d_forward(in.data(), b, cin, h, w, wgt.data(), bias.data(), cout, k, pad,
                          out.data());
        naive_conv(in, b, cin, h, w, wgt, bias, cout, k, pad, want);
        for (std::size_t i = 0; i < out.size(); ++i)
            CHECK(out[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("parallel and serial kernels agree bit for bit") {
    RngState rng = make_rng(22);
    const int b = 3, cin = 4, cout = 5, h = 13, w = 11, k = 3, pad = 1;
    const int ho = h + 2 * pad - k + 1, wo = w + 2 * pad - k + 1;
    const auto in = random_vec(static_cast<std::size_t>(b) * cin * h * w, rng);
    const auto wgt = random_vec(static_cast<std::size_t>(cout) * cin * k * k, rng);
    const auto bias = random_vec(static_cast<std::size_t>(cout), rng);
    const auto gout = random_vec(static_cast<std::size_t>(b) * cout * ho * wo, rng);

    SUBCASE("conv2d_forward") {
        std::vector<double> par(gout.size()), ser(gout.size());
        K::conv2d_forward(in.data(), b, cin, h, w, wgt.data(), bias.data(), cout, k, pad,
                          par.data());
        K::serial::conv2d_forward(in.data(), b, cin, h, w, wgt.data(), bias.data(), cout, k, pad,
                                  ser.data());
        CHECK(bit_identical(par, ser));
    }
    SUBCASE("conv2d_backward_input") {
        std::vector<double> par(in.size()), ser(in.size());
        K::conv2d_backward_input(gout.data(), b, cin, h, w, wgt.data(), cout, k, pad, par.data());
        K::serial::conv2d_backward_input(gout.data(), b, cin, h, w, wgt.data(), cout, k, pad,
                                         ser.data());
        CHECK(bit_identical(par, ser));
    }
    SUBCASE("conv2d_backward_params") {
        std::vector<double> pw(wgt.size(), 0.25), pb(bias.size(), -0.5);
        std::vector<double> sw = pw, sb = pb;  // same starting accumulators
        K::conv2d_backward_params(gout.data(), in.data(), b, cin, h, w, cout, k, pad, pw.data(),
                                  pb.data());
        K::serial::conv2d_backward_params(gout.data(), in.data(), b, cin, h, w, cout, k, pad,
                                          sw.data(), sb.data());
        CHECK(bit_identical(pw, sw));
        CHECK(bit_identical(pb, sb));
    }
    SUBCASE("blur_reflect forward and backward") {
        const int bk = 5;
        auto kern = random_vec(static_cast<std::size_t>(bk) * bk, rng, 0.0, 1.0);
        std::vector<double> pf(in.size()), sf(in.size()), pb2(in.size()), sb2(in.size());
        K::blur_reflect_forward(in.data(), b, cin, h, w, kern.data(), bk, pf.data());
        K::serial::blur_reflect_forward(in.data(), b, cin, h, w, kern.data(), bk, sf.data());
        CHECK(bit_identical(pf, sf));
        const auto g = random_vec(in.size(), rng);
        K::blur_reflect_backward(g.data(), b, cin, h, w, kern.data(), bk, pb2.data());
        K::serial::blur_reflect_backward(g.data(), b, cin, h, w, kern.data(), bk, sb2.data());
        CHECK(bit_identical(pb2, sb2));
    }
    SUBCASE("dct8_zigzag_mask") {
        const int dh = 16, dw = 24;
        const auto x = random_vec(static_cast<std::size_t>(b) * cin * dh * dw, rng, 0.0, 1.0);
        std::vector<double> par(x.size()), ser(x.size());
        for (int kept : {1, 10, 32, 64}) {
            K::dct8_zigzag_mask(x.data(), b, cin, dh, dw, kept, par.data());
            K::serial::dct8_zigzag_mask(x.data(), b, cin, dh, dw, kept, ser.data());
            CHECK(bit_identical(par, ser));
        }
    }
}

TEST_CASE("blur satisfies the adjoint identity <Ax, y> = <x, A^T y>") {
    RngState rng = make_rng(33);
    const int b = 2, c = 3, h = 9, w = 7, k = 5;
    const auto x = random_vec(static_cast<std::size_t>(b) * c * h * w, rng);
    const auto y = random_vec(x.size(), rng);
    const auto kern = random_vec(static_cast<std::size_t>(k) * k, rng, 0.0, 1.0);
    std::vector<double> ax(x.size()), aty(x.size());
    K::blur_reflect_forward(x.data(), b, c, h, w, kern.data(), k, ax.data());
    K::blur_reflect_backward(y.data(), b, c, h, w, kern.data(), k, aty.data());
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        lhs += ax[i] * y[i];
        rhs += x[i] * aty[i];
    }
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("keeping all 64 coefficients reproduces the block exactly") {
    RngState rng = make_rng(44);
    const int b = 1, c = 2, h = 8, w = 16;
    const auto x = random_vec(static_cast<std::size_t>(b) * c * h * w, rng, 0.0, 1.0);
    std::vector<double> out(x.size());
    K::dct8_zigzag_mask(x.data(), b, c, h, w, 64, out.data());
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(out[i] == doctest::Approx(x[i]).epsilon(1e-10));
}

TEST_CASE("coefficient masking is an orthogonal projection and self-adjoint") {
    RngState rng = make_rng(55);
    const int b = 1, c = 1, h = 8, w = 8;
    const auto x = random_vec(64, rng);
    const auto y = random_vec(64, rng);
    for (int kept : {1, 13, 32}) {
        std::vector<double> px(64), ppx(64), py(64);
        K::dct8_zigzag_mask(x.data(), b, c, h, w, kept, px.data());
        K::dct8_zigzag_mask(px.data(), b, c, h, w, kept, ppx.data());
        K::dct8_zigzag_mask(y.data(), b, c, h, w, kept, py.data());
        double lhs = 0.0, rhs = 0.0;
        for (int i = 0; i < 64; ++i) {
            CHECK(ppx[i] == doctest::Approx(px[i]).epsilon(1e-10));  // P^2 = P
            lhs += px[i] * y[i];
            rhs += x[i] * py[i];
        }
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));  // <Px,y> = <x,Py>
    }
}

TEST_CASE("zigzag walk starts along the known anti-diagonals") {
    // (u, v) pairs in zigzag order, frozen by hand from the 8x8 walk
    const int want[10][2] = {{0, 0}, {0, 1}, {1, 0}, {2, 0}, {1, 1},
                             {0, 2}, {0, 3}, {1, 2}, {2, 1}, {3, 0}};
    for (int i = 0; i < 10; ++i) CHECK(K::zigzag_index(want[i][0], want[i][1]) == i);
    // bijection over the block
    bool seen[64] = {};
    for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) {
            const int z = K::zigzag_index(u, v);
            REQUIRE(z >= 0);
            REQUIRE(z < 64);
            CHECK(!seen[z]);
            seen[z] = true;
        }
}

TEST_CASE("relu, pooling, and linear kernels compute what they claim") {
    RngState rng = make_rng(66);
    SUBCASE("relu") {
        const auto x = random_vec(100, rng);
        std::vector<double> y(100), g(100);
        K::relu_forward(x.data(), x.size(), y.data());
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == (x[i] > 0.0 ? x[i] : 0.0));
        const auto go = random_vec(100, rng);
        K::relu_backward(x.data(), go.data(), x.size(), g.data());
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(g[i] == (x[i] > 0.0 ? go[i] : 0.0));
    }
    SUBCASE("global average pool") {
        const int b = 2, c = 3, h = 4, w = 5;
        const auto x = random_vec(static_cast<std::size_t>(b) * c * h * w, rng);
        std::vector<double> y(static_cast<std::size_t>(b) * c);
        K::global_avg_pool_forward(x.data(), b, c, h, w, y.data());
        for (int ib = 0; ib < b; ++ib)
            for (int ic = 0; ic < c; ++ic) {
                double s = 0.0;
                for (int i = 0; i < h * w; ++i) s += x[(ib * c + ic) * h * w + i];
                CHECK(y[ib * c + ic] == doctest::Approx(s / (h * w)).epsilon(1e-12));
            }
        const auto go = random_vec(y.size(), rng);
        std::vector<double> gi(x.size());
        K::global_avg_pool_backward(go.data(), b, c, h, w, gi.data());
        for (int ib = 0; ib < b; ++ib)
            for (int ic = 0; ic < c; ++ic)
                for (int i = 0; i < h * w; ++i)
                    CHECK(gi[(ib * c + ic) * h * w + i] ==
                          doctest::Approx(go[ib * c + ic] / (h * w)).epsilon(1e-12));
    }
    SUBCASE("linear") {
        const int b = 3, cin = 4, cout = 2;
        const auto x = random_vec(static_cast<std::size_t>(b) * cin, rng);
        const auto wgt = random_vec(static_cast<std::size_t>(cout) * cin, rng);
        const auto bias = random_vec(cout, rng);
        std::vector<double> y(static_cast<std::size_t>(b) * cout);
        K::linear_forward(x.data(), b, cin, wgt.data(), bias.data(), cout, y.data());
        for (int ib = 0; ib < b; ++ib)
            for (int co = 0; co < cout; ++co) {
                double s = bias[co];
                for (int ci = 0; ci < cin; ++ci) s += wgt[co * cin + ci] * x[ib * cin + ci];
                CHECK(y[ib * cout + co] == doctest::Approx(s).epsilon(1e-12));
            }
        // backward_input is multiplication by W^T
        const auto go = random_vec(y.size(), rng);
        std::vector<double> gi(x.size());
        K::linear_backward_input(go.data(), b, cin, wgt.data(), cout, gi.data());
        for (int ib = 0; ib < b; ++ib)
            for (int ci = 0; ci < cin; ++ci) {
                double s = 0.0;
                for (int co = 0; co < cout; ++co) s += wgt[co * cin + ci] * go[ib * cout + co];
                CHECK(gi[ib * cin + ci] == doctest::Approx(s).epsilon(1e-12));
            }
        // params accumulate
        std::vector<double> gw(wgt.size(), 1.0), gb(bias.size(), 1.0);
        K::linear_backward_params(go.data(), x.data(), b, cin, cout, gw.data(), gb.data());
        for (int co = 0; co < cout; ++co)
            for (int ci = 0; ci < cin; ++ci) {
                double s = 1.0;
                for (int ib = 0; ib < b; ++ib) s += go[ib * cout + co] * x[ib * cin + ci];
                CHECK(gw[co * cin + ci] == doctest::Approx(s).epsilon(1e-12));
            }
    }
}
