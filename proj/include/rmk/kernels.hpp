#pragma once

#include <cstddef>

// Data-parallel numeric kernels. Parallel variants split work across
// OpenMP threads strictly over independent output elements; every output
// element is reduced serially in the same order as in the serial reference,
// so parallel and serial results are bit-identical (the build pins
// -ffp-contract=off to keep that true across loop shapes). The serial
// reference under kernels::serial is kept for testing and benchmarking.
namespace rmk::kernels {

// 2-D convolution, stride 1, zero padding `pad`, square kernel k x k.
// in: (b, cin, h, w), weight: (cout, cin, k, k), bias: (cout) or nullptr,
// out: (b, cout, ho, wo) with ho = h + 2*pad - k + 1, wo likewise.
void conv2d_forward(const double* in, int b, int cin, int h, int w,
                    const double* weight, const double* bias, int cout, int k, int pad,
                    double* out);

// gin (b, cin, h, w) is overwritten.
void conv2d_backward_input(const double* gout, int b, int cin, int h, int w,
                           const double* weight, int cout, int k, int pad,
                           double* gin);

// gweight/gbias are accumulated into (caller zeroes once per optimization pass).
void conv2d_backward_params(const double* gout, const double* in, int b, int cin, int h, int w,
                            int cout, int k, int pad,
                            double* gweight, double* gbias);

// 2-D convolution with an odd k x k kernel and symmetric reflection at the
// borders (edge pixel included: index -1 maps to 0, index n maps to n-1).
// Output has the input's shape.
void blur_reflect_forward(const double* in, int b, int c, int h, int w,
                          const double* kern, int k, double* out);

// Exact adjoint of blur_reflect_forward. gin is overwritten.
void blur_reflect_backward(const double* gout, int b, int c, int h, int w,
                           const double* kern, int k, double* gin);

// Per-channel 8x8 block DCT, zeroing every coefficient whose zigzag index is
// >= coeffs_kept, followed by the inverse transform. Orthonormal basis, so
// the map is a projection and self-adjoint. h and w must be multiples of 8.
void dct8_zigzag_mask(const double* in, int b, int c, int h, int w,
                      int coeffs_kept, double* out);

void relu_forward(const double* in, std::size_t n, double* out);
void relu_backward(const double* in, const double* gout, std::size_t n, double* gin);

// in: (b, c, h, w) -> out: (b, c), mean over the spatial dims.
void global_avg_pool_forward(const double* in, int b, int c, int h, int w, double* out);
void global_avg_pool_backward(const double* gout, int b, int c, int h, int w, double* gin);

// in: (b, cin), weight: (cout, cin), bias: (cout) or nullptr, out: (b, cout).
void linear_forward(const double* in, int b, int cin,
                    const double* weight, const double* bias, int cout, double* out);
void linear_backward_input(const double* gout, int b, int cin,
                           const double* weight, int cout, double* gin);
// Accumulates into gweight/gbias.
void linear_backward_params(const double* gout, const double* in, int b, int cin, int cout,
                            double* gweight, double* gbias);

// Zigzag index of DCT coefficient (u, v) in an 8x8 block (0 = DC).
int zigzag_index(int u, int v);

// Serial reference implementations, kept for parity tests and benchmarks.
namespace serial {

void conv2d_forward(const double* in, int b, int cin, int h, int w,
                    const double* weight, const double* bias, int cout, int k, int pad,
                    double* out);
void conv2d_backward_input(const double* gout, int b, int cin, int h, int w,
                           const double* weight, int cout, int k, int pad,
                           double* gin);
void conv2d_backward_params(const double* gout, const double* in, int b, int cin, int h, int w,
                            int cout, int k, int pad,
                            double* gweight, double* gbias);
void blur_reflect_forward(const double* in, int b, int c, int h, int w,
                          const double* kern, int k, double* out);
void blur_reflect_backward(const double* gout, int b, int c, int h, int w,
                           const double* kern, int k, double* gin);
void dct8_zigzag_mask(const double* in, int b, int c, int h, int w,
                      int coeffs_kept, double* out);

} // namespace serial

} // namespace rmk::kernels
