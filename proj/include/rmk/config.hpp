#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace rmk {

enum class AttackKind { identity, crop, cropout, dropout, gaussian_blur, jpeg_approx };

const char* to_string(AttackKind k);
// Accepts canonical names plus short aliases ("blur", "jpeg"). Throws ConfigError.
AttackKind attack_kind_from_string(std::string_view s);

// Inclusive arithmetic severity grid. Endpoints and step are read as decimal
// values; materialization works in integer micro-units so 0.1+0.1+... never
// drifts past max.
struct SeverityGrid {
    double min_value = 0.0;
    double max_value = 0.0;
    double step = 1.0;

    std::vector<double> values() const;
    bool operator==(const SeverityGrid&) const = default;
};

// Training grids: crop (0.1,0.8)/0.1, cropout (0.3,0.9)/0.1, dropout (0.3,0.9)/0.1,
// blur (1,5)/1, jpeg (50,100)/10. Identity gets the degenerate grid {0}.
SeverityGrid default_severity_grid(AttackKind k);
// Fixed-severity baseline intensities: crop/cropout/dropout 0.3, blur 2.
// jpeg has no published fixed intensity, so no default (must be given explicitly);
// identity needs none.
std::optional<double> default_fixed_severity(AttackKind k);

struct AttackSpec {
    AttackKind kind = AttackKind::identity;
    SeverityGrid grid;             // searched in worst_case mode
    std::optional<double> fixed;   // used in fixed_severity mode

    bool operator==(const AttackSpec&) const = default;
};

// Combined default: all five distortion families with their training grids.
std::vector<AttackSpec> default_attacks();

enum class TrainMode { worst_case, fixed_severity };
enum class OptimizerKind { sgd, adam };

const char* to_string(TrainMode m);
const char* to_string(OptimizerKind k);
TrainMode train_mode_from_string(std::string_view s);
OptimizerKind optimizer_from_string(std::string_view s);

// Mode-aware default: the fixed-severity baseline trains without jpeg (it has
// no published fixed intensity); worst_case uses all five families.
std::vector<AttackSpec> default_attacks_for_mode(TrainMode mode);

struct LossWeights {
    double lambda_image = 0.7;
    double lambda_adversarial = 0.001;
    bool operator==(const LossWeights&) const = default;
};

// Network shape knobs. Full-scale defaults; desk-scale runs shrink them.
struct ArchConfig {
    int channels = 64;
    int encoder_pre_blocks = 4;
    int encoder_post_blocks = 2;
    int decoder_blocks = 7;
    int discriminator_blocks = 3;
    int message_length = 30;
    int image_h = 128;
    int image_w = 128;
    double bn_momentum = 0.1;
    double bn_eps = 1e-5;
    double head_init_scale = 0.1;  // attenuates the encoder output head at init
    int min_input_size = 16;       // smallest h/w the decoder accepts

    bool operator==(const ArchConfig&) const = default;
};

struct DataConfig {
    std::string train_dir;
    std::string eval_dir;
    std::optional<std::int64_t> limit;       // keep first N decodable files
    std::optional<std::int64_t> eval_limit;
    bool operator==(const DataConfig&) const = default;
};

struct EvalConfig {
    std::uint64_t seed = 1;
    bool extend_grids = true;  // sweep one step beyond each grid end
    bool true_jpeg = false;    // extra real-codec JPEG rows in sweeps
    bool plots = false;
    bool operator==(const EvalConfig&) const = default;
};

struct TrainConfig {
    DataConfig data;
    ArchConfig arch;
    std::vector<AttackSpec> attacks = default_attacks();

    int batch_size = 12;
    std::vector<int> subset_sizes;  // empty -> equal split, remainder to earliest
    TrainMode mode = TrainMode::worst_case;
    LossWeights weights;
    double lr_encoder = 0.01;
    double lr_decoder = 0.01;
    double lr_discriminator = 0.01;
    double lr_decay = 1.0;      // per-epoch multiplicative cool-down; 1 = constant
    int lr_decay_after = 0;     // epochs at full rate before the decay starts
    OptimizerKind optimizer = OptimizerKind::sgd;
    int epochs = 1;
    std::uint64_t seed = 0;
    int checkpoint_interval = 0;  // epochs between periodic checkpoints; 0 = final only
    bool early_stop = false;
    int early_stop_window = 50;
    double early_stop_rel_tol = 1e-3;
    bool per_image_search = false;    // per-image severity argmax instead of per-subset
    bool reuse_search_draws = false;  // gradient pass reuses the search-time placements
    bool history_timing = false;      // include wall-clock ms in history records

    EvalConfig eval;

    // k_i: configured sizes, or batch_size/K with the remainder spread over the
    // earliest subsets.
    std::vector<int> effective_subset_sizes() const;
    void validate() const;  // throws ConfigError naming the offending field
    bool operator==(const TrainConfig&) const = default;
};

nlohmann::json emit_config(const TrainConfig& cfg);
TrainConfig config_from_json(const nlohmann::json& j);  // strict: unknown keys rejected
nlohmann::json arch_to_json(const ArchConfig& arch);
ArchConfig arch_from_json(const nlohmann::json& j);
TrainConfig load_config(const std::string& path);
void save_config(const TrainConfig& cfg, const std::string& path);

// CLI grammar: comma-separated "kind", "kind=min:max:step", or "kind=fixed:v".
std::vector<AttackSpec> parse_attack_list(std::string_view text);

} // namespace rmk
