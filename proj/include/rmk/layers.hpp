#pragma once

#include "rmk/rng.hpp"
#include "rmk/tensor.hpp"

#include <vector>

namespace rmk {

// Normalization behaviour per forward pass. Training uses batch statistics and
// refreshes the running averages; severity-search forwards use batch statistics
// without touching the running state; evaluation uses the running averages.
struct ModeFlags {
    bool batch_stats;
    bool update_running;
};
inline constexpr ModeFlags kTrainMode{true, true};
inline constexpr ModeFlags kSearchMode{true, false};
inline constexpr ModeFlags kEvalMode{false, false};

// Gradient contract for all layers: parameter gradients ACCUMULATE into gw/gb
// (callers zero them once per optimization pass; a pass may backprop several
// forwards), input gradients are returned fresh. Caches are per-call so
// overlapping forwards never clobber each other.

struct Conv2d {
    int cin = 0, cout = 0, k = 3, pad = 1;
    Tensor w, b, gw, gb;

    struct Cache {
        Tensor x;
    };

    void build(int cin_, int cout_, int k_, int pad_);
    void init(RngState& rng, double scale = 1.0);  // fan-in uniform, scaled
    Tensor forward(const Tensor& x, Cache* cache) const;
    Tensor backward(const Cache& cache, const Tensor& gout, bool need_gin);
};

struct BatchNorm2d {
    int c = 0;
    double momentum = 0.1, eps = 1e-5;
    Tensor gamma, beta, running_mean, running_var;  // gamma/beta learned, rest buffers
    Tensor ggamma, gbeta;

    struct Cache {
        Tensor xhat;
        std::vector<double> invstd;
        bool batch_stats = true;
    };

    void build(int c_, double momentum_, double eps_);
    Tensor forward(const Tensor& x, ModeFlags mode, Cache* cache);
    Tensor backward(const Cache& cache, const Tensor& gout);
};

struct Linear {
    int cin = 0, cout = 0;
    Tensor w, b, gw, gb;

    struct Cache {
        Tensor x;
    };

    void build(int cin_, int cout_);
    void init(RngState& rng, double scale = 1.0);
    Tensor forward(const Tensor& x, Cache* cache) const;
    Tensor backward(const Cache& cache, const Tensor& gout, bool need_gin);
};

// 3x3 conv (pad 1) -> batchnorm -> ReLU.
struct ConvBlock {
    Conv2d conv;
    BatchNorm2d bn;

    struct Cache {
        Conv2d::Cache conv;
        BatchNorm2d::Cache bn;
        Tensor preact;  // batchnorm output, pre-ReLU
    };

    void build(int cin, int cout, double momentum, double eps);
    void init(RngState& rng);
    Tensor forward(const Tensor& x, ModeFlags mode, Cache* cache);
    Tensor backward(const Cache& cache, const Tensor& gout, bool need_gin);
};

} // namespace rmk
