#include "rmk/eval.hpp"

#include "rmk/attacks.hpp"
#include "rmk/errors.hpp"

#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace rmk {

using nlohmann::json;

double bit_accuracy(const MessageBatch& m, const DecodedBatch& v) {
    if (!m.bits.same_shape(v.values))
        throw ContractError("bit_accuracy: shape mismatch " + shape_string(m.bits) + " vs " +
                            shape_string(v.values));
    const double* mb = m.bits.data();
    const double* vv = v.values.data();
    std::size_t right = 0;
    for (std::size_t i = 0; i < m.bits.size(); ++i)
        right += ((vv[i] >= 0.5) == (mb[i] >= 0.5)) ? 1u : 0u;
    return m.bits.size() ? static_cast<double>(right) / static_cast<double>(m.bits.size()) : 0.0;
}

std::vector<double> psnr(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b) || a.rank() != 4)
        throw ContractError("psnr: need equal rank-4 shapes, got " + shape_string(a) + " vs " +
                            shape_string(b));
    const std::size_t n = a.dim(0);
    const std::size_t row = a.size() / n;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* pa = a.data() + i * row;
        const double* pb = b.data() + i * row;
        double mse = 0.0;
        for (std::size_t k = 0; k < row; ++k) {
            const double d = pa[k] - pb[k];
            mse += d * d;
        }
        mse /= static_cast<double>(row);
        out[i] = mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / mse);
    }
    return out;
}

double mean_psnr(const Tensor& a, const Tensor& b) {
    const std::vector<double> per = psnr(a, b);
    double s = 0.0;
    for (double v : per) s += v;
    return per.empty() ? 0.0 : s / static_cast<double>(per.size());
}

namespace {

std::int64_t micro(double v) { return std::llround(v * 1e6); }

// Mirrors the config-level domain rules, plus the geometric floor the
// extractor imposes on cropped outputs.
bool severity_legal(AttackKind kind, double v, int h, int w, int min_side) {
    switch (kind) {
        case AttackKind::identity: return true;
        case AttackKind::crop: {
            if (v <= 0.0 || v > 1.0) return false;
            const double root = std::sqrt(v);
            const int sh = static_cast<int>(std::floor(root * h));
            const int sw = static_cast<int>(std::floor(root * w));
            return sh >= min_side && sw >= min_side;
        }
        case AttackKind::cropout: return v > 0.0 && v <= 1.0;
        case AttackKind::dropout: return v >= 0.0 && v <= 1.0;
        case AttackKind::gaussian_blur: return v > 0.0;
        case AttackKind::jpeg_approx: return v >= 1.0 && v <= 100.0;
    }
    return false;
}

std::vector<double> row_severities(const AttackSpec& spec, bool extend, int h, int w, int min_side) {
    std::vector<double> vals = spec.grid.values();
    if (extend && !vals.empty()) {
        const double step = spec.grid.step;
        vals.insert(vals.begin(), static_cast<double>(micro(vals.front() - step)) / 1e6);
        vals.push_back(static_cast<double>(micro(vals.back() + step)) / 1e6);
    }
    std::vector<double> out;
    for (double v : vals)
        if (severity_legal(spec.kind, v, h, w, min_side)) out.push_back(v);
    return out;
}

// Round-trips a single [0,1] RGB image through a real JPEG encoder.
Tensor codec_roundtrip(const Tensor& x, int quality) {
    const int h = static_cast<int>(x.dim(2));
    const int w = static_cast<int>(x.dim(3));
    cv::Mat bgr(h, w, CV_8UC3);
    for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
            auto& px = bgr.at<cv::Vec3b>(y, xx);
            for (int c = 0; c < 3; ++c) {
                const double v = x.at4(0, static_cast<std::size_t>(c), static_cast<std::size_t>(y),
                                       static_cast<std::size_t>(xx));
                px[2 - c] = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
            }
        }
    std::vector<unsigned char> buf;
    if (!cv::imencode(".jpg", bgr, buf, {cv::IMWRITE_JPEG_QUALITY, quality}))
        throw ValidationError("jpeg_codec: encoding failed at quality " + std::to_string(quality));
    cv::Mat back = cv::imdecode(buf, cv::IMREAD_COLOR);
    if (back.empty() || back.rows != h || back.cols != w)
        throw ValidationError("jpeg_codec: decode round-trip failed");
    Tensor out({1, 3, static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
    for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
            const auto& px = back.at<cv::Vec3b>(y, xx);
            for (int c = 0; c < 3; ++c)
                out.at4(0, static_cast<std::size_t>(c), static_cast<std::size_t>(y),
                        static_cast<std::size_t>(xx)) = px[2 - c] / 255.0;
        }
    return out;
}

struct RowStats {
    double mean = 0.0, stddev = 0.0;
    int n = 0;
};

RowStats accumulate(const std::vector<double>& accs) {
    RowStats s;
    s.n = static_cast<int>(accs.size());
    if (accs.empty()) return s;
    double sum = 0.0, sumsq = 0.0;
    for (double a : accs) {
        sum += a;
        sumsq += a * a;
    }
    s.mean = sum / s.n;
    const double var = std::max(0.0, sumsq / s.n - s.mean * s.mean);
    s.stddev = std::sqrt(var);
    return s;
}

} // namespace

SweepTable severity_sweep(ModelBundle& m, const ImageDataset& ds,
                          const std::vector<AttackSpec>& attacks, const EvalConfig& ecfg,
                          const std::string& model_id) {
    if (ds.size() == 0) throw ValidationError("severity_sweep: empty evaluation set");
    const RngState root = make_rng(ecfg.seed);
    const int L = m.arch.message_length;
    const int min_side = std::max(8, m.decoder.min_input_size);

    SweepTable table;
    table.model_id = model_id;

    // evaluates one (attack label, severity) row over the whole set
    const auto eval_row = [&](const std::string& label, std::optional<double> severity,
                              AttackKind kind, bool codec) {
        const RngState rr = root.fork(label).fork(
            severity ? static_cast<std::uint64_t>(micro(*severity)) : 0ull);
        std::vector<double> accs;
        accs.reserve(ds.size());
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const RngState ri = rr.fork(i);
            RngState rmsg = ri.fork("message");
            const MessageBatch msg = sample_messages(rmsg, 1, L);
            const Tensor& img = ds.items[i].image;
            Tensor cover({1, img.dim(0), img.dim(1), img.dim(2)});
            std::copy(img.data(), img.data() + img.size(), cover.data());

            const Tensor x_wm = m.encoder.forward(cover, msg.bits, kEvalMode, nullptr);
            Tensor attacked;
            if (!severity) {
                attacked = x_wm;
            } else if (codec) {
                attacked = codec_roundtrip(x_wm, static_cast<int>(std::lround(*severity)));
            } else {
                RngState rd = ri.fork("draw");
                const AttackDraw draw =
                    sample_attack_draw(kind, 1, static_cast<int>(x_wm.dim(2)),
                                       static_cast<int>(x_wm.dim(3)), rd);
                AttackCache cache;
                attacked = attack_forward(kind, x_wm, cover, *severity, draw, cache);
            }
            const DecodedBatch decoded{m.decoder.forward(attacked, kEvalMode, nullptr)};
            accs.push_back(bit_accuracy(msg, decoded));
        }
        const RowStats st = accumulate(accs);
        SweepRow row;
        row.model_id = model_id;
        row.attack = label;
        row.severity = severity;
        row.bit_acc_mean = st.mean;
        row.bit_acc_std = st.stddev;
        row.n = st.n;
        table.rows.push_back(std::move(row));
    };

    eval_row("identity", std::nullopt, AttackKind::identity, false);
    for (const AttackSpec& spec : attacks) {
        if (spec.kind == AttackKind::identity) continue;  // covered by the reference row
        const std::vector<double> sevs =
            row_severities(spec, ecfg.extend_grids, ds.height, ds.width, min_side);
        for (double v : sevs) eval_row(to_string(spec.kind), v, spec.kind, false);
        if (ecfg.true_jpeg && spec.kind == AttackKind::jpeg_approx)
            for (double v : sevs) eval_row("jpeg_codec", v, spec.kind, true);
    }
    return table;
}

FidelityReport embedding_fidelity(ModelBundle& m, const ImageDataset& ds, std::uint64_t seed) {
    if (ds.size() == 0) throw ValidationError("embedding_fidelity: empty evaluation set");
    const RngState root = make_rng(seed);
    const int L = m.arch.message_length;
    FidelityReport rep;
    rep.per_image.reserve(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        RngState ri = root.fork("fidelity").fork(i);
        const MessageBatch msg = sample_messages(ri, 1, L);
        const Tensor& img = ds.items[i].image;
        Tensor cover({1, img.dim(0), img.dim(1), img.dim(2)});
        std::copy(img.data(), img.data() + img.size(), cover.data());
        const Tensor x_wm = m.encoder.forward(cover, msg.bits, kEvalMode, nullptr);
        rep.per_image.push_back(psnr(cover, x_wm)[0]);
    }
    double s = 0.0, mn = rep.per_image[0];
    for (double v : rep.per_image) {
        s += v;
        mn = std::min(mn, v);
    }
    rep.psnr_mean = s / static_cast<double>(rep.per_image.size());
    rep.psnr_min = mn;
    return rep;
}

// ---- comparison ---------------------------------------------------------------

namespace {

using CellKey = std::pair<std::string, std::int64_t>;  // attack label, micro severity (-1 = reference)

CellKey key_of(const SweepRow& r) {
    return {r.attack, r.severity ? micro(*r.severity) : std::int64_t{-1}};
}

} // namespace

std::vector<ModelComparison> compare_models(const std::vector<SweepTable>& tables,
                                            const std::vector<AttackSpec>& trained_attacks) {
    if (tables.empty()) throw ContractError("compare_models: no sweep tables");
    const SweepTable& base = tables.front();
    std::map<CellKey, double> base_acc;
    for (const SweepRow& r : base.rows) base_acc[key_of(r)] = r.bit_acc_mean;

    // severities the models were trained against, per family
    std::map<CellKey, bool> trained;
    for (const AttackSpec& a : trained_attacks) {
        const std::string label = to_string(a.kind);
        for (double v : a.grid.values()) trained[{label, micro(v)}] = true;
        if (a.fixed) trained[{label, micro(*a.fixed)}] = true;
    }

    const auto overfit_gap = [&](const SweepTable& t) {
        double acc_in = 0.0, acc_out = 0.0;
        int n_in = 0, n_out = 0;
        for (const SweepRow& r : t.rows) {
            if (!r.severity) continue;  // reference row belongs to neither side
            if (trained.count(key_of(r))) {
                acc_in += r.bit_acc_mean;
                ++n_in;
            } else {
                acc_out += r.bit_acc_mean;
                ++n_out;
            }
        }
        if (!n_in || !n_out) return 0.0;
        return acc_in / n_in - acc_out / n_out;
    };
    const double base_gap = overfit_gap(base);

    std::vector<ModelComparison> out;
    for (std::size_t t = 1; t < tables.size(); ++t) {
        const SweepTable& cand = tables[t];
        ModelComparison cmp;
        cmp.baseline_id = base.model_id;
        cmp.candidate_id = cand.model_id;
        cmp.baseline_overfit_gap = base_gap;
        cmp.candidate_overfit_gap = overfit_gap(cand);

        std::map<std::string, std::pair<double, double>> worst;  // attack -> (base, cand) minima
        for (const SweepRow& r : cand.rows) {
            const auto it = base_acc.find(key_of(r));
            if (it == base_acc.end()) continue;
            CellDelta cell;
            cell.attack = r.attack;
            cell.severity = r.severity;
            cell.baseline = it->second;
            cell.candidate = r.bit_acc_mean;
            cell.delta = r.bit_acc_mean - it->second;
            cmp.cells.push_back(std::move(cell));

            auto [w, inserted] = worst.try_emplace(r.attack, it->second, r.bit_acc_mean);
            if (!inserted) {
                w->second.first = std::min(w->second.first, it->second);
                w->second.second = std::min(w->second.second, r.bit_acc_mean);
            }
        }
        for (const auto& [attack, mins] : worst) {
            AttackSummary s;
            s.attack = attack;
            s.baseline_worst = mins.first;
            s.candidate_worst = mins.second;
            s.candidate_wins = mins.second >= mins.first;
            cmp.attacks.push_back(std::move(s));
        }
        out.push_back(std::move(cmp));
    }
    return out;
}

json comparison_to_json(const ModelComparison& c) {
    json j;
    j["baseline"] = c.baseline_id;
    j["candidate"] = c.candidate_id;
    j["baseline_overfit_gap"] = c.baseline_overfit_gap;
    j["candidate_overfit_gap"] = c.candidate_overfit_gap;
    json cells = json::array();
    for (const CellDelta& cell : c.cells) {
        json e;
        e["attack"] = cell.attack;
        if (cell.severity)
            e["severity"] = *cell.severity;
        else
            e["severity"] = nullptr;
        e["baseline"] = cell.baseline;
        e["candidate"] = cell.candidate;
        e["delta"] = cell.delta;
        cells.push_back(std::move(e));
    }
    j["cells"] = std::move(cells);
    json attacks = json::array();
    for (const AttackSummary& s : c.attacks) {
        json e;
        e["attack"] = s.attack;
        e["baseline_worst"] = s.baseline_worst;
        e["candidate_worst"] = s.candidate_worst;
        e["candidate_wins"] = s.candidate_wins;
        attacks.push_back(std::move(e));
    }
    j["attacks"] = std::move(attacks);
    return j;
}

// ---- persistence ---------------------------------------------------------------

namespace {

constexpr const char* kSweepHeader = "model_id,attack,severity,bit_acc_mean,bit_acc_std,n";

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

} // namespace

void write_sweep_csv(const std::string& path, const SweepTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open " + path + " for writing");
    out << kSweepHeader << '\n';
    for (const SweepRow& r : table.rows) {
        out << r.model_id << ',' << r.attack << ','
            << (r.severity ? fmt_g(*r.severity) : std::string("-")) << ',' << fmt_g(r.bit_acc_mean)
            << ',' << fmt_g(r.bit_acc_std) << ',' << r.n << '\n';
    }
    if (!out) throw ValidationError("failed writing " + path);
}

SweepTable read_sweep_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open sweep file " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kSweepHeader)
        throw FormatError(path + ": unexpected header '" + line + "'");

    SweepTable table;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, ',')) cols.push_back(col);
        if (cols.size() != 6)
            throw FormatError(path + ":" + std::to_string(lineno) + ": expected 6 columns, got " +
                              std::to_string(cols.size()));
        SweepRow r;
        r.model_id = cols[0];
        r.attack = cols[1];
        try {
            if (cols[2] != "-") r.severity = std::stod(cols[2]);
            r.bit_acc_mean = std::stod(cols[3]);
            r.bit_acc_std = std::stod(cols[4]);
            r.n = std::stoi(cols[5]);
        } catch (const std::exception&) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": malformed number");
        }
        if (table.rows.empty())
            table.model_id = r.model_id;
        else if (r.model_id != table.model_id)
            throw FormatError(path + ":" + std::to_string(lineno) + ": mixed model ids '" +
                              table.model_id + "' vs '" + r.model_id + "'");
        table.rows.push_back(std::move(r));
    }
    if (table.rows.empty()) throw FormatError(path + ": no data rows");
    return table;
}

} // namespace rmk
