// romark: train, evaluate, and use robust image watermarking models.
//
// Exit codes: 0 success, 1 usage/config, 2 data, 3 training/internal,
// 4 file format. Failures print one JSON error record to stderr.

#include "rmk/attacks.hpp"
#include "rmk/checkpoint.hpp"
#include "rmk/config.hpp"
#include "rmk/dataset.hpp"
#include "rmk/errors.hpp"
#include "rmk/eval.hpp"
#include "rmk/models.hpp"
#include "rmk/plot.hpp"
#include "rmk/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <opencv2/imgcodecs.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rmk;

namespace {

void error_record(const std::string& kind, const std::string& message, int code) {
    json j;
    j["error"] = kind;
    j["message"] = message;
    j["exit"] = code;
    std::cerr << j.dump() << "\n";
}

std::uint64_t entropy_seed() {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::string default_out_root() {
    const char* env = std::getenv("ROBUSTMARK_OUT");
    return env && *env ? env : ".";
}

struct CommonOpts {
    std::string config, data, out, checkpoint, attacks, mode, message;
    std::uint64_t seed = 0;
    bool has_seed = false, true_jpeg = false;
    std::optional<std::int64_t> limit;
    std::optional<int> epochs;
};

// Loads the config file (or defaults), then layers the CLI overrides on top.
// A --mode override re-derives the default attack set when the file pinned
// neither attacks nor an explicit list on the command line.
TrainConfig resolve_config(const CommonOpts& o, bool* config_has_seed = nullptr) {
    json raw = json::object();
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in) throw ConfigError("cannot open config file: " + o.config);
        try {
            in >> raw;
        } catch (const json::parse_error& e) {
            throw ConfigError(o.config + ": " + e.what());
        }
    }
    if (config_has_seed)
        *config_has_seed = raw.contains("training") && raw["training"].is_object() &&
                           raw["training"].contains("seed") && !raw["training"]["seed"].is_null();
    TrainConfig cfg = config_from_json(raw);
    if (!o.mode.empty()) {
        cfg.mode = train_mode_from_string(o.mode);
        if (!raw.contains("attacks") && o.attacks.empty())
            cfg.attacks = default_attacks_for_mode(cfg.mode);
    }
    if (!o.attacks.empty()) cfg.attacks = parse_attack_list(o.attacks);
    if (o.has_seed) cfg.seed = o.seed;
    if (o.epochs) cfg.epochs = *o.epochs;
    if (o.limit) {
        cfg.data.limit = *o.limit;
        cfg.data.eval_limit = *o.limit;
    }
    if (!o.data.empty()) {
        cfg.data.train_dir = o.data;
        cfg.data.eval_dir = o.data;
    }
    if (o.true_jpeg) cfg.eval.true_jpeg = true;
    cfg.validate();
    return cfg;
}

ModelBundle load_model(const std::string& path, std::optional<TrainConfig>* snapshot) {
    if (path.empty()) throw UsageError("--checkpoint is required");
    return load_checkpoint(path, snapshot);
}

std::string model_id_from(const std::string& checkpoint_path) {
    return fs::path(checkpoint_path).stem().string();
}

MessageBatch resolve_message(const std::string& arg, int L, const CommonOpts& o) {
    if (arg.empty()) {
        std::uint64_t seed = o.has_seed ? o.seed : entropy_seed();
        if (!o.has_seed) std::cout << "seed: " << seed << "\n";
        RngState rng = make_rng(seed).fork("message");
        return sample_messages(rng, 1, L);
    }
    if (arg.rfind("seed:", 0) == 0) {
        std::uint64_t seed = 0;
        try {
            seed = std::stoull(arg.substr(5));
        } catch (const std::exception&) {
            throw UsageError("bad --message seed form: " + arg);
        }
        RngState rng = make_rng(seed).fork("message");
        return sample_messages(rng, 1, L);
    }
    if (static_cast<int>(arg.size()) != L)
        throw UsageError("--message must be exactly " + std::to_string(L) + " bits, got " +
                         std::to_string(arg.size()));
    MessageBatch mb{Tensor::zeros({1, static_cast<std::size_t>(L)})};
    for (int i = 0; i < L; ++i) {
        if (arg[i] != '0' && arg[i] != '1')
            throw UsageError("--message must contain only 0/1 characters");
        mb.bits[static_cast<std::size_t>(i)] = arg[i] == '1' ? 1.0 : 0.0;
    }
    return mb;
}

std::string bits_to_string(const Tensor& values) {
    std::string s;
    s.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) s += values[i] >= 0.5 ? '1' : '0';
    return s;
}

// ---- subcommands --------------------------------------------------------------

int cmd_train(const CommonOpts& o) {
    bool config_has_seed = false;
    TrainConfig cfg = resolve_config(o, &config_has_seed);
    if (!o.has_seed && !config_has_seed) cfg.seed = entropy_seed();
    std::cout << "seed: " << cfg.seed << "\n";
    const std::string out = o.out.empty() ? default_out_root() : o.out;
    fs::create_directories(out);
    save_config(cfg, out + "/config.json");

    ImageDataset ds = load_image_dataset(cfg.data.train_dir, Split::train, cfg.arch.image_h,
                                         cfg.arch.image_w, cfg.data.limit);
    std::cout << "training on " << ds.size() << " images, mode " << to_string(cfg.mode) << ", "
              << cfg.attacks.size() << " attack(s)\n";

    std::ofstream hist(out + "/history.jsonl", std::ios::binary);
    if (!hist) throw ValidationError("cannot open " + out + "/history.jsonl for writing");

    const auto on_step = [&](const StepReport& r, ModelBundle& m) {
        hist << step_report_to_json(r, cfg.history_timing).dump() << "\n";
        std::cout << "step " << r.step << " joint=" << r.loss_joint << " msg=" << r.loss_message
                  << " acc=" << r.bit_accuracy << "\n";
        if (cfg.checkpoint_interval > 0 && (r.step + 1) % cfg.checkpoint_interval == 0)
            save_checkpoint(m, &cfg, out + "/checkpoint_step" + std::to_string(r.step + 1) + ".ckpt");
    };

    TrainOutput result = train(ds, cfg, on_step);
    hist.close();
    save_checkpoint(result.model, &cfg, out + "/checkpoint_final.ckpt");

    json summary;
    summary["steps"] = result.history.size();
    summary["epochs_run"] = result.epochs_run;
    summary["early_stopped"] = result.early_stopped;
    summary["parameters"] = param_count(result.model);
    if (!result.history.empty()) {
        const StepReport& last = result.history.back();
        summary["final_loss_joint"] = last.loss_joint;
        summary["final_loss_message"] = last.loss_message;
        summary["final_bit_accuracy"] = last.bit_accuracy;
    }
    std::ofstream sf(out + "/summary.json", std::ios::binary);
    sf << summary.dump(2) << "\n";
    std::cout << "wrote " << out << "/checkpoint_final.ckpt\n";
    return 0;
}

int cmd_evaluate(const CommonOpts& o) {
    std::optional<TrainConfig> snap;
    ModelBundle m = load_model(o.checkpoint, &snap);
    std::string dir = !o.data.empty() ? o.data : (snap ? snap->data.eval_dir : "");
    if (dir.empty()) throw UsageError("--data is required (checkpoint has no eval directory)");
    std::optional<std::int64_t> limit = o.limit ? o.limit : (snap ? snap->data.eval_limit : std::nullopt);
    ImageDataset ds = load_image_dataset(dir, Split::test, m.arch.image_h, m.arch.image_w, limit);

    EvalConfig ecfg = snap ? snap->eval : EvalConfig{};
    if (o.has_seed) ecfg.seed = o.seed;

    SweepTable clean = severity_sweep(m, ds, {}, ecfg, model_id_from(o.checkpoint));
    FidelityReport fid = embedding_fidelity(m, ds, ecfg.seed);

    json j;
    j["model"] = clean.model_id;
    j["images"] = ds.size();
    j["bit_accuracy"] = clean.rows.at(0).bit_acc_mean;
    j["bit_accuracy_std"] = clean.rows.at(0).bit_acc_std;
    j["psnr_mean_db"] = fid.psnr_mean;
    j["psnr_min_db"] = fid.psnr_min;
    std::cout << j.dump(2) << "\n";
    if (!o.out.empty()) {
        fs::create_directories(o.out);
        std::ofstream f(o.out + "/evaluation.json", std::ios::binary);
        f << j.dump(2) << "\n";
    }
    return 0;
}

int cmd_sweep(const CommonOpts& o) {
    std::optional<TrainConfig> snap;
    ModelBundle m = load_model(o.checkpoint, &snap);
    std::string dir = !o.data.empty() ? o.data : (snap ? snap->data.eval_dir : "");
    if (dir.empty()) throw UsageError("--data is required (checkpoint has no eval directory)");
    std::optional<std::int64_t> limit = o.limit ? o.limit : (snap ? snap->data.eval_limit : std::nullopt);
    ImageDataset ds = load_image_dataset(dir, Split::test, m.arch.image_h, m.arch.image_w, limit);

    std::vector<AttackSpec> attacks;
    if (!o.attacks.empty())
        attacks = parse_attack_list(o.attacks);
    else if (snap)
        attacks = snap->attacks;
    else
        attacks = default_attacks();

    EvalConfig ecfg = snap ? snap->eval : EvalConfig{};
    if (o.has_seed) ecfg.seed = o.seed;
    if (o.true_jpeg) ecfg.true_jpeg = true;

    const std::string out = o.out.empty() ? default_out_root() : o.out;
    fs::create_directories(out);

    SweepTable table = severity_sweep(m, ds, attacks, ecfg, model_id_from(o.checkpoint));
    const std::string csv = out + "/sweep.csv";
    write_sweep_csv(csv, table);
    std::cout << "wrote " << csv << " (" << table.rows.size() << " rows)\n";
    if (ecfg.plots)
        for (const std::string& p : write_accuracy_plots(out, {table}))
            std::cout << "wrote " << p << "\n";
    return 0;
}

int cmd_compare(const CommonOpts& o, const std::vector<std::string>& sweep_files) {
    if (sweep_files.size() < 2) throw UsageError("compare needs at least two sweep files");
    std::vector<SweepTable> tables;
    tables.reserve(sweep_files.size());
    for (const std::string& p : sweep_files) tables.push_back(read_sweep_csv(p));

    std::vector<AttackSpec> trained;
    if (!o.attacks.empty())
        trained = parse_attack_list(o.attacks);
    else if (!o.config.empty())
        trained = load_config(o.config).attacks;
    else
        trained = default_attacks();

    json j = json::array();
    for (const ModelComparison& c : compare_models(tables, trained))
        j.push_back(comparison_to_json(c));
    std::cout << j.dump(2) << "\n";
    if (!o.out.empty()) {
        fs::create_directories(o.out);
        std::ofstream f(o.out + "/comparison.json", std::ios::binary);
        f << j.dump(2) << "\n";
        for (const std::string& p : write_accuracy_plots(o.out, tables))
            std::cout << "wrote " << p << "\n";
    }
    return 0;
}

int cmd_embed(const CommonOpts& o, const std::string& image_path) {
    std::optional<TrainConfig> snap;
    ModelBundle m = load_model(o.checkpoint, &snap);
    const MessageBatch msg = resolve_message(o.message, m.arch.message_length, o);
    ImageBatch cover = load_single_image(image_path, m.arch.image_h, m.arch.image_w);
    const Tensor x_wm = m.encoder.forward(cover.data, msg.bits, kEvalMode, nullptr);

    const std::string out = o.out.empty()
                                ? fs::path(image_path).stem().string() + "_wm.png"
                                : o.out;
    save_image(out, x_wm);

    json j;
    j["out"] = out;
    j["message"] = bits_to_string(msg.bits);
    j["psnr_db"] = psnr(cover.data, x_wm).at(0);
    std::cout << j.dump() << "\n";
    return 0;
}

int cmd_extract(const CommonOpts& o, const std::string& image_path) {
    ModelBundle m = load_model(o.checkpoint, nullptr);

    // native-size decode: the extractor pools globally, so any size above its
    // floor works and embedded files round-trip unresized
    cv::Mat probe = cv::imread(image_path, cv::IMREAD_COLOR);
    if (probe.empty()) throw IngestError("cannot decode image: " + image_path);
    const int min_side = std::max(8, m.decoder.min_input_size);
    if (probe.rows < min_side || probe.cols < min_side)
        throw ValidationError("image " + std::to_string(probe.cols) + "x" +
                              std::to_string(probe.rows) + " is smaller than the extractor minimum " +
                              std::to_string(min_side));
    ImageBatch img = load_single_image(image_path, probe.rows, probe.cols);

    const DecodedBatch decoded{m.decoder.forward(img.data, kEvalMode, nullptr)};
    json j;
    j["bits"] = bits_to_string(decoded.values);
    j["values"] = std::vector<double>(decoded.values.data(),
                                      decoded.values.data() + decoded.values.size());
    std::cout << j.dump() << "\n";
    return 0;
}

int cmd_inspect(const std::string& checkpoint) {
    if (checkpoint.empty()) throw UsageError("--checkpoint is required");
    std::cout << inspect_checkpoint(checkpoint).dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"robust image watermarking: min-max training against a grid of image distortions"};
    app.require_subcommand(1);

    CommonOpts o;
    std::vector<std::string> sweep_files;
    std::string image_path;

    const auto add_common = [&](CLI::App* sub, bool with_data) {
        sub->add_option("--seed", o.seed, "rng seed (absent: drawn from entropy or config)");
        sub->add_option("--out", o.out, "output directory or file (default: $ROBUSTMARK_OUT or .)");
        if (with_data) {
            sub->add_option("--data", o.data, "image directory or manifest file");
            sub->add_option("--limit", [&](const std::vector<std::string>& v) {
                try {
                    o.limit = std::stoll(v.at(0));
                } catch (const std::exception&) {
                    return false;
                }
                return true;
            }, "keep only the first N decodable images");
        }
    };

    CLI::App* t = app.add_subcommand("train", "run the min-max training loop");
    t->add_option("--config", o.config, "config JSON file");
    t->add_option("--attacks", o.attacks, "attack list, e.g. crop=0.1:0.8:0.1,dropout=fixed:0.3");
    t->add_option("--mode", o.mode, "worst_case or fixed_severity")
        ->check(CLI::IsMember({"worst_case", "fixed_severity"}));
    t->add_option("--epochs", [&](const std::vector<std::string>& v) {
        try {
            o.epochs = std::stoi(v.at(0));
        } catch (const std::exception&) {
            return false;
        }
        return true;
    }, "override the number of training epochs");
    add_common(t, true);

    CLI::App* e = app.add_subcommand("evaluate", "clean accuracy and embedding fidelity");
    e->add_option("--checkpoint", o.checkpoint, "model checkpoint")->required();
    add_common(e, true);

    CLI::App* s = app.add_subcommand("sweep", "bit accuracy across every attack severity");
    s->add_option("--checkpoint", o.checkpoint, "model checkpoint")->required();
    s->add_option("--attacks", o.attacks, "attack list override");
    s->add_flag("--true-jpeg", o.true_jpeg, "also sweep a real JPEG codec");
    add_common(s, true);

    CLI::App* c = app.add_subcommand("compare", "diff two or more sweep tables");
    c->add_option("files", sweep_files, "sweep CSV files; first is the baseline")->expected(-2);
    c->add_option("--config", o.config, "training config naming the trained attacks");
    c->add_option("--attacks", o.attacks, "trained attack list override");
    add_common(c, false);

    CLI::App* em = app.add_subcommand("embed", "watermark one image");
    em->add_option("image", image_path, "cover image file")->required();
    em->add_option("--checkpoint", o.checkpoint, "model checkpoint")->required();
    em->add_option("--message", o.message, "L-bit 0/1 string, or seed:N");
    add_common(em, false);

    CLI::App* ex = app.add_subcommand("extract", "recover the message from an image");
    ex->add_option("image", image_path, "image file")->required();
    ex->add_option("--checkpoint", o.checkpoint, "model checkpoint")->required();

    CLI::App* in = app.add_subcommand("inspect", "print checkpoint metadata");
    in->add_option("--checkpoint", o.checkpoint, "model checkpoint")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        if (err.get_exit_code() == 0) return app.exit(err);
        error_record("usage", err.what(), 1);
        return 1;
    }
    {
        CLI::App* sub = app.get_subcommands().at(0);
        const CLI::Option* seed_opt = sub->get_option_no_throw("--seed");
        o.has_seed = seed_opt && seed_opt->count() > 0;
    }

    try {
        if (t->parsed()) return cmd_train(o);
        if (e->parsed()) return cmd_evaluate(o);
        if (s->parsed()) return cmd_sweep(o);
        if (c->parsed()) return cmd_compare(o, sweep_files);
        if (em->parsed()) return cmd_embed(o, image_path);
        if (ex->parsed()) return cmd_extract(o, image_path);
        if (in->parsed()) return cmd_inspect(o.checkpoint);
        error_record("usage", "no subcommand", 1);
        return 1;
    } catch (const UsageError& err) {
        error_record("usage", err.what(), 1);
        return 1;
    } catch (const ConfigError& err) {
        error_record("config", err.what(), 1);
        return 1;
    } catch (const SeverityDomainError& err) {
        error_record("severity_domain", err.what(), 1);
        return 1;
    } catch (const ContractError& err) {
        error_record("contract", err.what(), 1);
        return 1;
    } catch (const IngestError& err) {
        error_record("data", err.what(), 2);
        return 2;
    } catch (const ValidationError& err) {
        error_record("validation", err.what(), 2);
        return 2;
    } catch (const FormatError& err) {
        error_record("format", err.what(), 4);
        return 4;
    } catch (const TrainingError& err) {
        error_record("training", err.what(), 3);
        return 3;
    } catch (const std::exception& err) {
        error_record("internal", err.what(), 3);
        return 3;
    }
}
