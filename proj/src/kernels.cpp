#include "rmk/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace rmk::kernels {

namespace {

// Reflect an index into [0, n), edge pixel included: -1 -> 0, n -> n-1.
int reflect_index(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - i - 1;
    }
    return i;
}

struct Dct8Tables {
    double c[64];  // c[u*8+x] = a(u) * cos((2x+1) u pi / 16), orthonormal
    int zz[64];    // zz[u*8+v] = zigzag index of coefficient (u, v)
};

const Dct8Tables& dct8_tables() {
    static const Dct8Tables t = [] {
        Dct8Tables tt{};
        const double pi = std::acos(-1.0);
        for (int u = 0; u < 8; ++u) {
            const double a = (u == 0) ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int x = 0; x < 8; ++x)
                tt.c[u * 8 + x] = a * std::cos((2.0 * x + 1.0) * u * pi / 16.0);
        }
        // Zigzag walk over anti-diagonals: odd sums go down-left, even sums up-right.
        int idx = 0;
        for (int s = 0; s <= 14; ++s) {
            if (s % 2 == 0) {
                for (int u = std::min(s, 7); u >= std::max(0, s - 7); --u) tt.zz[u * 8 + (s - u)] = idx++;
            } else {
                for (int u = std::max(0, s - 7); u <= std::min(s, 7); ++u) tt.zz[u * 8 + (s - u)] = idx++;
            }
        }
        return tt;
    }();
    return t;
}

} // namespace

int zigzag_index(int u, int v) { return dct8_tables().zz[u * 8 + v]; }

// ---------------------------------------------------------------------------
// conv2d

void conv2d_forward(const double* in, int b, int cin, int h, int w,
                    const double* weight, const double* bias, int cout, int k, int pad,
                    double* out) {
    const int ho = h + 2 * pad - k + 1;
    const int wo = w + 2 * pad - k + 1;
    const std::size_t in_plane = static_cast<std::size_t>(h) * w;
    const std::size_t out_plane = static_cast<std::size_t>(ho) * wo;
#pragma omp parallel for collapse(2) schedule(static)
    for (int ib = 0; ib < b; ++ib) {
        for (int co = 0; co < cout; ++co) {
            double* op = out + (static_cast<std::size_t>(ib) * cout + co) * out_plane;
            const double bv = bias ? bias[co] : 0.0;
            for (std::size_t i = 0; i < out_plane; ++i) op[i] = bv;
            for (int ci = 0; ci < cin; ++ci) {
                const double* ip = in + (static_cast<std::size_t>(ib) * cin + ci) * in_plane;
                const double* wp = weight + (static_cast<std::size_t>(co) * cin + ci) * k * k;
                for (int dy = 0; dy < k; ++dy) {
                    for (int dx = 0; dx < k; ++dx) {
                        const double wv = wp[dy * k + dx];
                        const int y0 = std::max(0, pad - dy), y1 = std::min(ho, h + pad - dy);
                        const int x0 = std::max(0, pad - dx), x1 = std::min(wo, w + pad - dx);
                        for (int y = y0; y < y1; ++y) {
                            const double* irow = ip + static_cast<std::size_t>(y + dy - pad) * w + (x0 + dx - pad);
                            double* orow = op + static_cast<std::size_t>(y) * wo + x0;
                            for (int x = 0; x < x1 - x0; ++x) orow[x] += wv * irow[x];
                        }
                    }
                }
            }
        }
    }
}

void conv2d_backward_input(const double* gout, int b, int cin, int h, int w,
                           const double* weight, int cout, int k, int pad,
                           double* gin) {
    const int ho = h + 2 * pad - k + 1;
    const int wo = w + 2 * pad - k + 1;
    const std::size_t in_plane = static_cast<std::size_t>(h) * w;
    const std::size_t out_plane = static_cast<std::size_t>(ho) * wo;
#pragma omp parallel for collapse(2) schedule(static)
    for (int ib = 0; ib < b; ++ib) {
        for (int ci = 0; ci < cin; ++ci) {
            double* gp = gin + (static_cast<std::size_t>(ib) * cin + ci) * in_plane;
            for (std::size_t i = 0; i < in_plane; ++i) gp[i] = 0.0;
            for (int co = 0; co < cout; ++co) {
                const double* gop = gout + (static_cast<std::size_t>(ib) * cout + co) * out_plane;
                const double* wp = weight + (static_cast<std::size_t>(co) * cin + ci) * k * k;
                for (int dy = 0; dy < k; ++dy) {
                    for (int dx = 0; dx < k; ++dx) {
                        const double wv = wp[dy * k + dx];
                        // gin(y, x) += wv * gout(y - dy + pad, x - dx + pad)
                        const int y0 = std::max(0, dy - pad), y1 = std::min(h, ho + dy - pad);
                        const int x0 = std::max(0, dx - pad), x1 = std::min(w, wo + dx - pad);
                        for (int y = y0; y < y1; ++y) {
                            const double* grow = gop + static_cast<std::size_t>(y - dy + pad) * wo + (x0 - dx + pad);
                            double* girow = gp + static_cast<std::size_t>(y) * w + x0;
                            for (int x = 0; x < x1 - x0; ++x) girow[x] += wv * grow[x];
                        }
                    }
                }
            }
        }
    }
}

void conv2d_backward_params(const double* gout, const double* in, int b, int cin, int h, int w,
                            int cout, int k, int pad,
                            double* gweight, double* gbias) {
    const int ho = h + 2 * pad - k + 1;
    const int wo = w + 2 * pad - k + 1;
    const std::size_t in_plane = static_cast<std::size_t>(h) * w;
    const std::size_t out_plane = static_cast<std::size_t>(ho) * wo;
#pragma omp parallel for collapse(2) schedule(static)
    for (int co = 0; co < cout; ++co) {
        for (int ci = 0; ci < cin; ++ci) {
            double* gwp = gweight + (static_cast<std::size_t>(co) * cin + ci) * k * k;
            for (int dy = 0; dy < k; ++dy) {
                for (int dx = 0; dx < k; ++dx) {
                    double acc = 0.0;
                    const int y0 = std::max(0, pad - dy), y1 = std::min(ho, h + pad - dy);
                    const int x0 = std::max(0, pad - dx), x1 = std::min(wo, w + pad - dx);
                    for (int ib = 0; ib < b; ++ib) {
                        const double* gop = gout + (static_cast<std::size_t>(ib) * cout + co) * out_plane;
                        const double* ip = in + (static_cast<std::size_t>(ib) * cin + ci) * in_plane;
                        for (int y = y0; y < y1; ++y) {
                            const double* grow = gop + static_cast<std::size_t>(y) * wo + x0;
                            const double* irow = ip + static_cast<std::size_t>(y + dy - pad) * w + (x0 + dx - pad);
                            for (int x = 0; x < x1 - x0; ++x) acc += grow[x] * irow[x];
                        }
                    }
                    gwp[dy * k + dx] += acc;
                }
            }
        }
    }
    if (gbias) {
#pragma omp parallel for schedule(static)
        for (int co = 0; co < cout; ++co) {
            double acc = 0.0;
            for (int ib = 0; ib < b; ++ib) {
                const double* gop = gout + (static_cast<std::size_t>(ib) * cout + co) * out_plane;
                for (std::size_t i = 0; i < out_plane; ++i) acc += gop[i];
            }
            gbias[co] += acc;
        }
    }
}

// ---------------------------------------------------------------------------
// reflect-padded blur

void blur_reflect_forward(const double* in, int b, int c, int h, int w,
                          const double* kern, int k, double* out) {
    const int r = k / 2;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    std::vector<int> ry(static_cast<std::size_t>(h) * k), rx(static_cast<std::size_t>(w) * k);
    for (int y = 0; y < h; ++y)
        for (int d = 0; d < k; ++d) ry[static_cast<std::size_t>(y) * k + d] = reflect_index(y + d - r, h);
    for (int x = 0; x < w; ++x)
        for (int d = 0; d < k; ++d) rx[static_cast<std::size_t>(x) * k + d] = reflect_index(x + d - r, w);
#pragma omp parallel for collapse(2) schedule(static)
    for (int ib = 0; ib < b; ++ib) {
        for (int ic = 0; ic < c; ++ic) {
            const double* ip = in + (static_cast<std::size_t>(ib) * c + ic) * plane;
            double* op = out + (static_cast<std::size_t>(ib) * c + ic) * plane;
            for (int y = 0; y < h; ++y) {
                const int* ryp = &ry[static_cast<std::size_t>(y) * k];
                for (int x = 0; x < w; ++x) {
                    const int* rxp = &rx[static_cast<std::size_t>(x) * k];
                    double acc = 0.0;
                    for (int dy = 0; dy < k; ++dy) {
                        const double* irow = ip + static_cast<std::size_t>(ryp[dy]) * w;
                        const double* krow = kern + dy * k;
                        for (int dx = 0; dx < k; ++dx) acc += krow[dx] * irow[rxp[dx]];
                    }
                    op[static_cast<std::size_t>(y) * w + x] = acc;
                }
            }
        }
    }
}

void blur_reflect_backward(const double* gout, int b, int c, int h, int w,
                           const double* kern, int k, double* gin) {
    const int r = k / 2;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    std::vector<int> ry(static_cast<std::size_t>(h) * k), rx(static_cast<std::size_t>(w) * k);
    for (int y = 0; y < h; ++y)
        for (int d = 0; d < k; ++d) ry[static_cast<std::size_t>(y) * k + d] = reflect_index(y + d - r, h);
    for (int x = 0; x < w; ++x)
        for (int d = 0; d < k; ++d) rx[static_cast<std::size_t>(x) * k + d] = reflect_index(x + d - r, w);
    // Adjoint: scatter each output gradient over the taps it read. Planes are
    // independent, the scatter within one plane stays serial.
#pragma omp parallel for collapse(2) schedule(static)
    for (int ib = 0; ib < b; ++ib) {
        for (int ic = 0; ic < c; ++ic) {
            const double* gop = gout + (static_cast<std::size_t>(ib) * c + ic) * plane;
            double* gp = gin + (static_cast<std::size_t>(ib) * c + ic) * plane;
            for (std::size_t i = 0; i < plane; ++i) gp[i] = 0.0;
            for (int y = 0; y < h; ++y) {
                const int* ryp = &ry[static_cast<std::size_t>(y) * k];
                for (int x = 0; x < w; ++x) {
                    const int* rxp = &rx[static_cast<std::size_t>(x) * k];
                    const double g = gop[static_cast<std::size_t>(y) * w + x];
                    for (int dy = 0; dy < k; ++dy) {
                        double* girow = gp + static_cast<std::size_t>(ryp[dy]) * w;
                        const double* krow = kern + dy * k;
                        for (int dx = 0; dx < k; ++dx) girow[rxp[dx]] += krow[dx] * g;
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// 8x8 DCT zigzag mask

namespace {

inline void dct8_block(const Dct8Tables& t, const double* src, int stride, int kept, double* dst, int dstride) {
    double m1[64], m2[64];
    // m1 = C * B
    for (int u = 0; u < 8; ++u)
        for (int y = 0; y < 8; ++y) {
            double acc = 0.0;
            for (int x = 0; x < 8; ++x) acc += t.c[u * 8 + x] * src[x * stride + y];
            m1[u * 8 + y] = acc;
        }
    // m2 = (C * B) * C^T, masked
    for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) {
            double acc = 0.0;
            for (int y = 0; y < 8; ++y) acc += m1[u * 8 + y] * t.c[v * 8 + y];
            m2[u * 8 + v] = (t.zz[u * 8 + v] < kept) ? acc : 0.0;
        }
    // m1 = C^T * m2
    for (int x = 0; x < 8; ++x)
        for (int v = 0; v < 8; ++v) {
            double acc = 0.0;
            for (int u = 0; u < 8; ++u) acc += t.c[u * 8 + x] * m2[u * 8 + v];
            m1[x * 8 + v] = acc;
        }
    // dst = (C^T * m2) * C
    for (int x = 0; x < 8; ++x)
        for (int y = 0; y < 8; ++y) {
            double acc = 0.0;
            for (int v = 0; v < 8; ++v) acc += m1[x * 8 + v] * t.c[v * 8 + y];
            dst[x * dstride + y] = acc;
        }
}

} // namespace

void dct8_zigzag_mask(const double* in, int b, int c, int h, int w,
                      int coeffs_kept, double* out) {
    const Dct8Tables& t = dct8_tables();
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const int by = h / 8, bx = w / 8;
    const int nblocks = b * c * by * bx;
#pragma omp parallel for schedule(static)
    for (int blk = 0; blk < nblocks; ++blk) {
        const int ibx = blk % bx;
        const int iby = (blk / bx) % by;
        const int plane_idx = blk / (bx * by);
        const double* src = in + plane_idx * plane + static_cast<std::size_t>(iby * 8) * w + ibx * 8;
        double* dst = out + plane_idx * plane + static_cast<std::size_t>(iby * 8) * w + ibx * 8;
        dct8_block(t, src, w, coeffs_kept, dst, w);
    }
}

// ---------------------------------------------------------------------------
// elementwise / pooling / linear

void relu_forward(const double* in, std::size_t n, double* out) {
    const std::ptrdiff_t sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < sn; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void relu_backward(const double* in, const double* gout, std::size_t n, double* gin) {
    const std::ptrdiff_t sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < sn; ++i) gin[i] = in[i] > 0.0 ? gout[i] : 0.0;
}

void global_avg_pool_forward(const double* in, int b, int c, int h, int w, double* out) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
#pragma omp parallel for collapse(2) schedule(static)
    for (int ib = 0; ib < b; ++ib) {
        for (int ic = 0; ic < c; ++ic) {
            const double* ip = in + (static_cast<std::size_t>(ib) * c + ic) * plane;
            double acc = 0.0;
            for (std::size_t i = 0; i < plane; ++i) acc += ip[i];
            out[static_cast<std::size_t>(ib) * c + ic] = acc / static_cast<double>(plane);
        }
    }
}

void global_avg_pool_backward(const double* gout, int b, int c, int h, int w, double* gin) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const double inv = 1.0 / static_cast<double>(plane);
#pragma omp parallel for collapse(2) schedule(static)
    for (int ib = 0; ib < b; ++ib) {
        for (int ic = 0; ic < c; ++ic) {
            const double g = gout[static_cast<std::size_t>(ib) * c + ic] * inv;
            double* gp = gin + (static_cast<std::size_t>(ib) * c + ic) * plane;
            for (std::size_t i = 0; i < plane; ++i) gp[i] = g;
        }
    }
}

void linear_forward(const double* in, int b, int cin,
                    const double* weight, const double* bias, int cout, double* out) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int ib = 0; ib < b; ++ib) {
        for (int co = 0; co < cout; ++co) {
            double acc = bias ? bias[co] : 0.0;
            const double* ip = in + static_cast<std::size_t>(ib) * cin;
            const double* wp = weight + static_cast<std::size_t>(co) * cin;
            for (int ci = 0; ci < cin; ++ci) acc += wp[ci] * ip[ci];
            out[static_cast<std::size_t>(ib) * cout + co] = acc;
        }
    }
}

void linear_backward_input(const double* gout, int b, int cin,
                           const double* weight, int cout, double* gin) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int ib = 0; ib < b; ++ib) {
        for (int ci = 0; ci < cin; ++ci) {
            double acc = 0.0;
            for (int co = 0; co < cout; ++co)
                acc += weight[static_cast<std::size_t>(co) * cin + ci] * gout[static_cast<std::size_t>(ib) * cout + co];
            gin[static_cast<std::size_t>(ib) * cin + ci] = acc;
        }
    }
}

void linear_backward_params(const double* gout, const double* in, int b, int cin, int cout,
                            double* gweight, double* gbias) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int co = 0; co < cout; ++co) {
        for (int ci = 0; ci < cin; ++ci) {
            double acc = 0.0;
            for (int ib = 0; ib < b; ++ib)
                acc += gout[static_cast<std::size_t>(ib) * cout + co] * in[static_cast<std::size_t>(ib) * cin + ci];
            gweight[static_cast<std::size_t>(co) * cin + ci] += acc;
        }
    }
    if (gbias) {
#pragma omp parallel for schedule(static)
        for (int co = 0; co < cout; ++co) {
            double acc = 0.0;
            for (int ib = 0; ib < b; ++ib) acc += gout[static_cast<std::size_t>(ib) * cout + co];
            gbias[co] += acc;
        }
    }
}

// ---------------------------------------------------------------------------
// serial reference implementations

namespace serial {

void conv2d_forward(const double* in, int b, int cin, int h, int w,
                    const double* weight, const double* bias, int cout, int k, int pad,
                    double* out) {
    const int ho = h + 2 * pad - k + 1;
    const int wo = w + 2 * pad - k + 1;
    const std::size_t in_plane = static_cast<std::size_t>(h) * w;
    const std::size_t out_plane = static_cast<std::size_t>(ho) * wo;
    for (int ib = 0; ib < b; ++ib) {
        for (int co = 0; co < cout; ++co) {
            double* op = out + (static_cast<std::size_t>(ib) * cout + co) * out_plane;
            for (int y = 0; y < ho; ++y) {
                for (int x = 0; x < wo; ++x) {
                    double acc = bias ? bias[co] : 0.0;
                    for (int ci = 0; ci < cin; ++ci) {
                        const double* ip = in + (static_cast<std::size_t>(ib) * cin + ci) * in_plane;
                        const double* wp = weight + (static_cast<std::size_t>(co) * cin + ci) * k * k;
                        for (int dy = 0; dy < k; ++dy) {
                            const int iy = y + dy - pad;
                            if (iy < 0 || iy >= h) continue;
                            for (int dx = 0; dx < k; ++dx) {
                                const int ix = x + dx - pad;
                                if (ix < 0 || ix >= w) continue;
                                acc += wp[dy * k + dx] * ip[static_cast<std::size_t>(iy) * w + ix];
                            }
                        }
                    }
                    op[static_cast<std::size_t>(y) * wo + x] = acc;
                }
            }
        }
    }
}

void conv2d_backward_input(const double* gout, int b, int cin, int h, int w,
                           const double* weight, int cout, int k, int pad,
                           double* gin) {
    const int ho = h + 2 * pad - k + 1;
    const int wo = w + 2 * pad - k + 1;
    const std::size_t in_plane = static_cast<std::size_t>(h) * w;
    const std::size_t out_plane = static_cast<std::size_t>(ho) * wo;
    for (int ib = 0; ib < b; ++ib) {
        for (int ci = 0; ci < cin; ++ci) {
            double* gp = gin + (static_cast<std::size_t>(ib) * cin + ci) * in_plane;
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    double acc = 0.0;
                    for (int co = 0; co < cout; ++co) {
                        const double* gop = gout + (static_cast<std::size_t>(ib) * cout + co) * out_plane;
                        const double* wp = weight + (static_cast<std::size_t>(co) * cin + ci) * k * k;
                        for (int dy = 0; dy < k; ++dy) {
                            const int oy = y - dy + pad;
                            if (oy < 0 || oy >= ho) continue;
                            for (int dx = 0; dx < k; ++dx) {
                                const int ox = x - dx + pad;
                                if (ox < 0 || ox >= wo) continue;
                                acc += wp[dy * k + dx] * gop[static_cast<std::size_t>(oy) * wo + ox];
                            }
                        }
                    }
                    gp[static_cast<std::size_t>(y) * w + x] = acc;
                }
            }
        }
    }
}

void conv2d_backward_params(const double* gout, const double* in, int b, int cin, int h, int w,
                            int cout, int k, int pad,
                            double* gweight, double* gbias) {
    const int ho = h + 2 * pad - k + 1;
    const int wo = w + 2 * pad - k + 1;
    const std::size_t in_plane = static_cast<std::size_t>(h) * w;
    const std::size_t out_plane = static_cast<std::size_t>(ho) * wo;
    for (int co = 0; co < cout; ++co) {
        for (int ci = 0; ci < cin; ++ci) {
            double* gwp = gweight + (static_cast<std::size_t>(co) * cin + ci) * k * k;
            for (int dy = 0; dy < k; ++dy) {
                for (int dx = 0; dx < k; ++dx) {
                    double acc = 0.0;
                    const int y0 = std::max(0, pad - dy), y1 = std::min(ho, h + pad - dy);
                    const int x0 = std::max(0, pad - dx), x1 = std::min(wo, w + pad - dx);
                    for (int ib = 0; ib < b; ++ib) {
                        const double* gop = gout + (static_cast<std::size_t>(ib) * cout + co) * out_plane;
                        const double* ip = in + (static_cast<std::size_t>(ib) * cin + ci) * in_plane;
                        for (int y = y0; y < y1; ++y) {
                            const double* grow = gop + static_cast<std::size_t>(y) * wo + x0;
                            const double* irow = ip + static_cast<std::size_t>(y + dy - pad) * w + (x0 + dx - pad);
                            for (int x = 0; x < x1 - x0; ++x) acc += grow[x] * irow[x];
                        }
                    }
                    gwp[dy * k + dx] += acc;
                }
            }
        }
    }
    if (gbias) {
        for (int co = 0; co < cout; ++co) {
            double acc = 0.0;
            for (int ib = 0; ib < b; ++ib) {
                const double* gop = gout + (static_cast<std::size_t>(ib) * cout + co) * out_plane;
                for (std::size_t i = 0; i < out_plane; ++i) acc += gop[i];
            }
            gbias[co] += acc;
        }
    }
}

void blur_reflect_forward(const double* in, int b, int c, int h, int w,
                          const double* kern, int k, double* out) {
    const int r = k / 2;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int ib = 0; ib < b; ++ib) {
        for (int ic = 0; ic < c; ++ic) {
            const double* ip = in + (static_cast<std::size_t>(ib) * c + ic) * plane;
            double* op = out + (static_cast<std::size_t>(ib) * c + ic) * plane;
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    double acc = 0.0;
                    for (int dy = 0; dy < k; ++dy) {
                        const int iy = reflect_index(y + dy - r, h);
                        for (int dx = 0; dx < k; ++dx) {
                            const int ix = reflect_index(x + dx - r, w);
                            acc += kern[dy * k + dx] * ip[static_cast<std::size_t>(iy) * w + ix];
                        }
                    }
                    op[static_cast<std::size_t>(y) * w + x] = acc;
                }
            }
        }
    }
}

void blur_reflect_backward(const double* gout, int b, int c, int h, int w,
                           const double* kern, int k, double* gin) {
    const int r = k / 2;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int ib = 0; ib < b; ++ib) {
        for (int ic = 0; ic < c; ++ic) {
            const double* gop = gout + (static_cast<std::size_t>(ib) * c + ic) * plane;
            double* gp = gin + (static_cast<std::size_t>(ib) * c + ic) * plane;
            for (std::size_t i = 0; i < plane; ++i) gp[i] = 0.0;
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    const double g = gop[static_cast<std::size_t>(y) * w + x];
                    for (int dy = 0; dy < k; ++dy) {
                        const int iy = reflect_index(y + dy - r, h);
                        for (int dx = 0; dx < k; ++dx) {
                            const int ix = reflect_index(x + dx - r, w);
                            gp[static_cast<std::size_t>(iy) * w + ix] += kern[dy * k + dx] * g;
                        }
                    }
                }
            }
        }
    }
}

void dct8_zigzag_mask(const double* in, int b, int c, int h, int w,
                      int coeffs_kept, double* out) {
    const Dct8Tables& t = dct8_tables();
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const int by = h / 8, bx = w / 8;
    for (int plane_idx = 0; plane_idx < b * c; ++plane_idx) {
        for (int iby = 0; iby < by; ++iby) {
            for (int ibx = 0; ibx < bx; ++ibx) {
                const double* src = in + plane_idx * plane + static_cast<std::size_t>(iby * 8) * w + ibx * 8;
                double* dst = out + plane_idx * plane + static_cast<std::size_t>(iby * 8) * w + ibx * 8;
                dct8_block(t, src, w, coeffs_kept, dst, w);
            }
        }
    }
}

} // namespace serial

} // namespace rmk::kernels
