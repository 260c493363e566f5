#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rmk/config.hpp"
#include "rmk/dataset.hpp"
#include "rmk/models.hpp"
#include "rmk/types.hpp"

#include <json.hpp>

namespace rmk {

// Fraction of bits recovered after thresholding decoder outputs at 0.5.
double bit_accuracy(const MessageBatch& m, const DecodedBatch& v);

// Peak signal-to-noise ratio per image pair, in dB on the 8-bit convention
// (a uniform difference of 1/255 scores 20*log10(255) ~= 48.13 dB). Identical
// images yield +infinity.
std::vector<double> psnr(const Tensor& a, const Tensor& b);
double mean_psnr(const Tensor& a, const Tensor& b);

// One severity sweep cell: accuracy statistics over the evaluation images.
struct SweepRow {
    std::string model_id;
    std::string attack;                 // family name; "jpeg_codec" rows run a real codec
    std::optional<double> severity;     // empty for the no-attack reference row
    double bit_acc_mean = 0.0;
    double bit_acc_std = 0.0;           // population standard deviation
    int n = 0;                          // images evaluated
};

struct SweepTable {
    std::string model_id;
    std::vector<SweepRow> rows;
};

// Evaluates the model image-by-image: a no-attack reference row first, then
// every attack at every grid severity in ascending order. extend_grids adds
// one grid step beyond each end when still inside the legal domain; true_jpeg
// re-runs the compression severities through a real codec as "jpeg_codec"
// rows. Each (row, image) pair gets its own seeded message and attack draw.
// Severities whose cropped output would undershoot the extractor's minimum
// input size are skipped.
SweepTable severity_sweep(ModelBundle& m, const ImageDataset& ds,
                          const std::vector<AttackSpec>& attacks, const EvalConfig& ecfg,
                          const std::string& model_id);

// Embeds a fresh seeded message into every image and scores the residual.
struct FidelityReport {
    double psnr_mean = 0.0;
    double psnr_min = 0.0;
    std::vector<double> per_image;
};
FidelityReport embedding_fidelity(ModelBundle& m, const ImageDataset& ds, std::uint64_t seed);

// ---- model comparison -----------------------------------------------------

struct CellDelta {
    std::string attack;
    std::optional<double> severity;
    double baseline = 0.0;
    double candidate = 0.0;
    double delta = 0.0;  // candidate - baseline
};

struct AttackSummary {
    std::string attack;
    double baseline_worst = 0.0;   // minimum accuracy across the attack's rows
    double candidate_worst = 0.0;
    bool candidate_wins = false;   // candidate_worst >= baseline_worst
};

struct ModelComparison {
    std::string baseline_id;
    std::string candidate_id;
    std::vector<CellDelta> cells;
    std::vector<AttackSummary> attacks;
    // mean accuracy on severities seen in training minus mean on held-out
    // severities (grid extensions, untrained families, codec rows)
    double baseline_overfit_gap = 0.0;
    double candidate_overfit_gap = 0.0;
};

// First table is the baseline; every later table is compared against it on
// the (attack, severity) cells both share.
std::vector<ModelComparison> compare_models(const std::vector<SweepTable>& tables,
                                            const std::vector<AttackSpec>& trained_attacks);

nlohmann::json comparison_to_json(const ModelComparison& c);

// ---- sweep persistence ------------------------------------------------------

// CSV with the exact header
//   model_id,attack,severity,bit_acc_mean,bit_acc_std,n
// severity prints "-" on the reference row, numbers with %.9g.
void write_sweep_csv(const std::string& path, const SweepTable& table);
SweepTable read_sweep_csv(const std::string& path);  // FormatError on malformed input

} // namespace rmk
