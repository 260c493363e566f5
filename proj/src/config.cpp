#include "rmk/config.hpp"

#include "rmk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rmk {

using nlohmann::json;

const char* to_string(AttackKind k) {
    switch (k) {
        case AttackKind::identity: return "identity";
        case AttackKind::crop: return "crop";
        case AttackKind::cropout: return "cropout";
        case AttackKind::dropout: return "dropout";
        case AttackKind::gaussian_blur: return "gaussian_blur";
        case AttackKind::jpeg_approx: return "jpeg_approx";
    }
    return "?";
}

AttackKind attack_kind_from_string(std::string_view s) {
    if (s == "identity") return AttackKind::identity;
    if (s == "crop") return AttackKind::crop;
    if (s == "cropout") return AttackKind::cropout;
    if (s == "dropout") return AttackKind::dropout;
    if (s == "gaussian_blur" || s == "blur") return AttackKind::gaussian_blur;
    if (s == "jpeg_approx" || s == "jpeg") return AttackKind::jpeg_approx;
    throw ConfigError("unknown attack kind '" + std::string(s) +
                      "' (expected identity|crop|cropout|dropout|gaussian_blur|jpeg_approx)");
}

const char* to_string(TrainMode m) {
    return m == TrainMode::worst_case ? "worst_case" : "fixed_severity";
}

const char* to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

TrainMode train_mode_from_string(std::string_view s) {
    if (s == "worst_case") return TrainMode::worst_case;
    if (s == "fixed_severity") return TrainMode::fixed_severity;
    throw ConfigError("unknown mode '" + std::string(s) + "' (expected worst_case|fixed_severity)");
}

OptimizerKind optimizer_from_string(std::string_view s) {
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "adam") return OptimizerKind::adam;
    throw ConfigError("unknown optimizer '" + std::string(s) + "' (expected sgd|adam)");
}

std::vector<double> SeverityGrid::values() const {
    auto mu = [](double v) { return static_cast<long long>(std::llround(v * 1e6)); };
    const long long lo = mu(min_value), hi = mu(max_value), st = mu(step);
    if (hi < lo) throw ConfigError("severity grid: max < min");
    if (lo == hi) return {static_cast<double>(lo) / 1e6};
    if (st <= 0) throw ConfigError("severity grid: step must be > 0");
    std::vector<double> out;
    for (long long v = lo; v <= hi; v += st) out.push_back(static_cast<double>(v) / 1e6);
    return out;
}

SeverityGrid default_severity_grid(AttackKind k) {
    switch (k) {
        case AttackKind::identity: return {0.0, 0.0, 1.0};
        case AttackKind::crop: return {0.1, 0.8, 0.1};
        case AttackKind::cropout: return {0.3, 0.9, 0.1};
        case AttackKind::dropout: return {0.3, 0.9, 0.1};
        case AttackKind::gaussian_blur: return {1.0, 5.0, 1.0};
        case AttackKind::jpeg_approx: return {50.0, 100.0, 10.0};
    }
    return {};
}

std::optional<double> default_fixed_severity(AttackKind k) {
    switch (k) {
        case AttackKind::crop: return 0.3;
        case AttackKind::cropout: return 0.3;
        case AttackKind::dropout: return 0.3;
        case AttackKind::gaussian_blur: return 2.0;
        default: return std::nullopt;  // jpeg has no published fixed intensity; identity needs none
    }
}

std::vector<AttackSpec> default_attacks() {
    std::vector<AttackSpec> out;
    for (AttackKind k : {AttackKind::crop, AttackKind::cropout, AttackKind::dropout,
                         AttackKind::gaussian_blur, AttackKind::jpeg_approx})
        out.push_back({k, default_severity_grid(k), default_fixed_severity(k)});
    return out;
}

std::vector<AttackSpec> default_attacks_for_mode(TrainMode mode) {
    std::vector<AttackSpec> out = default_attacks();
    if (mode == TrainMode::fixed_severity)
        out.erase(std::remove_if(out.begin(), out.end(),
                                 [](const AttackSpec& a) { return a.kind == AttackKind::jpeg_approx; }),
                  out.end());
    return out;
}

std::vector<int> TrainConfig::effective_subset_sizes() const {
    if (!subset_sizes.empty()) return subset_sizes;
    const int K = static_cast<int>(attacks.size());
    std::vector<int> out(static_cast<std::size_t>(K), K > 0 ? batch_size / K : 0);
    for (int i = 0; K > 0 && i < batch_size % K; ++i) out[static_cast<std::size_t>(i)] += 1;
    return out;
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigError(path + ": " + msg);
}

std::string join(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

void severity_domain_check(AttackKind kind, double v, const std::string& path) {
    switch (kind) {
        case AttackKind::identity: return;
        case AttackKind::crop:
        case AttackKind::cropout:
            if (v <= 0.0 || v > 1.0) fail(path, "area ratio must be in (0, 1]");
            return;
        case AttackKind::dropout:
            if (v < 0.0 || v > 1.0) fail(path, "keep probability must be in [0, 1]");
            return;
        case AttackKind::gaussian_blur:
            if (v <= 0.0) fail(path, "sigma must be > 0");
            return;
        case AttackKind::jpeg_approx:
            if (v < 1.0 || v > 100.0) fail(path, "quality must be in [1, 100]");
            return;
    }
}

} // namespace

void TrainConfig::validate() const {
    if (batch_size < 1) fail("training.batch_size", "must be >= 1");
    if (attacks.empty()) fail("attacks", "at least one attack required");
    const int K = static_cast<int>(attacks.size());
    if (K > batch_size)
        fail("attacks", "more attacks (" + std::to_string(K) + ") than batch items (" +
                            std::to_string(batch_size) + ")");
    if (!subset_sizes.empty()) {
        if (static_cast<int>(subset_sizes.size()) != K)
            fail("training.subset_sizes", "length " + std::to_string(subset_sizes.size()) +
                                              " != number of attacks " + std::to_string(K));
        int sum = 0;
        for (std::size_t i = 0; i < subset_sizes.size(); ++i) {
            if (subset_sizes[i] < 1)
                fail("training.subset_sizes[" + std::to_string(i) + "]", "must be >= 1");
            sum += subset_sizes[i];
        }
        if (sum != batch_size)
            fail("training.subset_sizes", "sum " + std::to_string(sum) + " != batch_size " +
                                              std::to_string(batch_size));
    }
    for (std::size_t i = 0; i < attacks.size(); ++i) {
        const AttackSpec& a = attacks[i];
        const std::string p = "attacks[" + std::to_string(i) + "]";
        if (a.kind != AttackKind::identity) {
            auto mu = [](double v) { return static_cast<long long>(std::llround(v * 1e6)); };
            if (mu(a.grid.max_value) < mu(a.grid.min_value)) fail(p + ".max", "grid max < min");
            if (mu(a.grid.min_value) != mu(a.grid.max_value) && mu(a.grid.step) <= 0)
                fail(p + ".step", "must be > 0");
            severity_domain_check(a.kind, a.grid.min_value, p + ".min");
            severity_domain_check(a.kind, a.grid.max_value, p + ".max");
            if (a.fixed) severity_domain_check(a.kind, *a.fixed, p + ".fixed");
        }
        if (mode == TrainMode::fixed_severity && a.kind != AttackKind::identity && !a.fixed)
            fail(p + ".fixed",
                 std::string("fixed_severity mode requires one severity per attack; none set for ") +
                     to_string(a.kind));
    }
    if (weights.lambda_image < 0.0) fail("training.lambda_image", "must be >= 0");
    if (weights.lambda_adversarial < 0.0) fail("training.lambda_adversarial", "must be >= 0");
    if (lr_encoder < 0.0) fail("training.lr_encoder", "must be >= 0");
    if (lr_decoder < 0.0) fail("training.lr_decoder", "must be >= 0");
    if (lr_discriminator < 0.0) fail("training.lr_discriminator", "must be >= 0");
    if (epochs < 0) fail("training.epochs", "must be >= 0");
    if (checkpoint_interval < 0) fail("training.checkpoint_interval", "must be >= 0");
    if (early_stop_window < 1) fail("training.early_stop_window", "must be >= 1");
    if (early_stop_rel_tol < 0.0) fail("training.early_stop_rel_tol", "must be >= 0");
    if (arch.channels < 1) fail("model.channels", "must be >= 1");
    if (arch.encoder_pre_blocks < 1) fail("model.encoder_pre_blocks", "must be >= 1");
    if (arch.encoder_post_blocks < 1) fail("model.encoder_post_blocks", "must be >= 1");
    if (arch.decoder_blocks < 1) fail("model.decoder_blocks", "must be >= 1");
    if (arch.discriminator_blocks < 1) fail("model.discriminator_blocks", "must be >= 1");
    if (arch.message_length < 1) fail("model.message_length", "must be >= 1");
    if (arch.min_input_size < 1) fail("model.min_input_size", "must be >= 1");
    if (arch.image_h < arch.min_input_size || arch.image_w < arch.min_input_size)
        fail("model.image_size", "must be >= min_input_size");
    if (arch.image_h % 8 != 0 || arch.image_w % 8 != 0)
        fail("model.image_size", "height and width must be multiples of 8");
    if (arch.bn_momentum < 0.0 || arch.bn_momentum > 1.0) fail("model.bn_momentum", "must be in [0, 1]");
    if (arch.bn_eps <= 0.0) fail("model.bn_eps", "must be > 0");
    if (arch.head_init_scale < 0.0) fail("model.head_init_scale", "must be >= 0");
    if (data.limit && *data.limit < 1) fail("data.limit", "must be >= 1");
    if (data.eval_limit && *data.eval_limit < 1) fail("data.eval_limit", "must be >= 1");
}

// ---------------------------------------------------------------------------
// JSON schema

namespace {

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& path) {
    if (!obj.is_object()) fail(path.empty() ? "config" : path, "expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) { ok = true; break; }
        if (!ok) fail(join(path, it.key()), "unknown key");
    }
}

const json* find(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double get_double(const json& obj, const char* key, const std::string& path, double def) {
    const json* v = find(obj, key);
    if (!v) return def;
    if (!v->is_number()) fail(join(path, key), "expected a number");
    return v->get<double>();
}

int get_int(const json& obj, const char* key, const std::string& path, int def) {
    const json* v = find(obj, key);
    if (!v) return def;
    if (!v->is_number_integer()) fail(join(path, key), "expected an integer");
    return v->get<int>();
}

std::uint64_t get_u64(const json& obj, const char* key, const std::string& path, std::uint64_t def) {
    const json* v = find(obj, key);
    if (!v) return def;
    if (!(v->is_number_unsigned() || (v->is_number_integer() && v->get<std::int64_t>() >= 0)))
        fail(join(path, key), "expected a non-negative integer");
    return v->get<std::uint64_t>();
}

bool get_bool(const json& obj, const char* key, const std::string& path, bool def) {
    const json* v = find(obj, key);
    if (!v) return def;
    if (!v->is_boolean()) fail(join(path, key), "expected a boolean");
    return v->get<bool>();
}

std::string get_string(const json& obj, const char* key, const std::string& path, const std::string& def) {
    const json* v = find(obj, key);
    if (!v) return def;
    if (!v->is_string()) fail(join(path, key), "expected a string");
    return v->get<std::string>();
}

AttackSpec attack_from_json(const json& j, const std::string& path) {
    check_keys(j, {"kind", "min", "max", "step", "fixed"}, path);
    AttackSpec spec;
    const json* kind = find(j, "kind");
    if (!kind || !kind->is_string()) fail(join(path, "kind"), "required string");
    try {
        spec.kind = attack_kind_from_string(kind->get<std::string>());
    } catch (const ConfigError& e) {
        fail(join(path, "kind"), e.what());
    }
    const SeverityGrid dg = default_severity_grid(spec.kind);
    spec.grid.min_value = get_double(j, "min", path, dg.min_value);
    spec.grid.max_value = get_double(j, "max", path, dg.max_value);
    spec.grid.step = get_double(j, "step", path, dg.step);
    const json* fx = find(j, "fixed");
    if (!fx) {
        spec.fixed = default_fixed_severity(spec.kind);
    } else if (fx->is_null()) {
        spec.fixed = std::nullopt;
    } else if (fx->is_number()) {
        spec.fixed = fx->get<double>();
    } else {
        fail(join(path, "fixed"), "expected a number or null");
    }
    return spec;
}

json attack_to_json(const AttackSpec& a) {
    json j;
    j["kind"] = to_string(a.kind);
    j["min"] = a.grid.min_value;
    j["max"] = a.grid.max_value;
    j["step"] = a.grid.step;
    if (a.fixed)
        j["fixed"] = *a.fixed;
    else
        j["fixed"] = nullptr;
    return j;
}

} // namespace

ArchConfig arch_from_json(const json& j) {
    check_keys(j,
               {"channels", "encoder_pre_blocks", "encoder_post_blocks", "decoder_blocks",
                "discriminator_blocks", "message_length", "image_size", "bn_momentum", "bn_eps",
                "head_init_scale", "min_input_size"},
               "model");
    ArchConfig a;
    a.channels = get_int(j, "channels", "model", a.channels);
    a.encoder_pre_blocks = get_int(j, "encoder_pre_blocks", "model", a.encoder_pre_blocks);
    a.encoder_post_blocks = get_int(j, "encoder_post_blocks", "model", a.encoder_post_blocks);
    a.decoder_blocks = get_int(j, "decoder_blocks", "model", a.decoder_blocks);
    a.discriminator_blocks = get_int(j, "discriminator_blocks", "model", a.discriminator_blocks);
    a.message_length = get_int(j, "message_length", "model", a.message_length);
    if (const json* sz = find(j, "image_size")) {
        if (!sz->is_array() || sz->size() != 2 || !(*sz)[0].is_number_integer() ||
            !(*sz)[1].is_number_integer())
            fail("model.image_size", "expected [height, width]");
        a.image_h = (*sz)[0].get<int>();
        a.image_w = (*sz)[1].get<int>();
    }
    a.bn_momentum = get_double(j, "bn_momentum", "model", a.bn_momentum);
    a.bn_eps = get_double(j, "bn_eps", "model", a.bn_eps);
    a.head_init_scale = get_double(j, "head_init_scale", "model", a.head_init_scale);
    a.min_input_size = get_int(j, "min_input_size", "model", a.min_input_size);
    return a;
}

json arch_to_json(const ArchConfig& a) {
    json m;
    m["channels"] = a.channels;
    m["encoder_pre_blocks"] = a.encoder_pre_blocks;
    m["encoder_post_blocks"] = a.encoder_post_blocks;
    m["decoder_blocks"] = a.decoder_blocks;
    m["discriminator_blocks"] = a.discriminator_blocks;
    m["message_length"] = a.message_length;
    m["image_size"] = {a.image_h, a.image_w};
    m["bn_momentum"] = a.bn_momentum;
    m["bn_eps"] = a.bn_eps;
    m["head_init_scale"] = a.head_init_scale;
    m["min_input_size"] = a.min_input_size;
    return m;
}

TrainConfig config_from_json(const json& j) {
    check_keys(j, {"data", "model", "attacks", "training", "eval"}, "");
    TrainConfig cfg;
    if (const json* d = find(j, "data")) {
        check_keys(*d, {"train_dir", "eval_dir", "limit", "eval_limit"}, "data");
        cfg.data.train_dir = get_string(*d, "train_dir", "data", "");
        cfg.data.eval_dir = get_string(*d, "eval_dir", "data", "");
        if (const json* v = find(*d, "limit")) {
            if (!v->is_null()) {
                if (!v->is_number_integer()) fail("data.limit", "expected an integer");
                cfg.data.limit = v->get<std::int64_t>();
            }
        }
        if (const json* v = find(*d, "eval_limit")) {
            if (!v->is_null()) {
                if (!v->is_number_integer()) fail("data.eval_limit", "expected an integer");
                cfg.data.eval_limit = v->get<std::int64_t>();
            }
        }
    }
    if (const json* m = find(j, "model")) cfg.arch = arch_from_json(*m);
    if (const json* t = find(j, "training")) {
        check_keys(*t,
                   {"batch_size", "subset_sizes", "mode", "lambda_image", "lambda_adversarial",
                    "lr_encoder", "lr_decoder", "lr_discriminator", "optimizer", "epochs", "seed",
                    "checkpoint_interval", "early_stop", "early_stop_window", "early_stop_rel_tol",
                    "per_image_search", "reuse_search_draws", "history_timing"},
                   "training");
        cfg.batch_size = get_int(*t, "batch_size", "training", cfg.batch_size);
        if (const json* ss = find(*t, "subset_sizes")) {
            if (!ss->is_array()) fail("training.subset_sizes", "expected an array of integers");
            cfg.subset_sizes.clear();
            for (std::size_t i = 0; i < ss->size(); ++i) {
                if (!(*ss)[i].is_number_integer())
                    fail("training.subset_sizes[" + std::to_string(i) + "]", "expected an integer");
                cfg.subset_sizes.push_back((*ss)[i].get<int>());
            }
        }
        try {
            cfg.mode = train_mode_from_string(get_string(*t, "mode", "training", to_string(cfg.mode)));
            cfg.optimizer =
                optimizer_from_string(get_string(*t, "optimizer", "training", to_string(cfg.optimizer)));
        } catch (const ConfigError& e) {
            fail("training", e.what());
        }
        cfg.weights.lambda_image = get_double(*t, "lambda_image", "training", cfg.weights.lambda_image);
        cfg.weights.lambda_adversarial =
            get_double(*t, "lambda_adversarial", "training", cfg.weights.lambda_adversarial);
        cfg.lr_encoder = get_double(*t, "lr_encoder", "training", cfg.lr_encoder);
        cfg.lr_decoder = get_double(*t, "lr_decoder", "training", cfg.lr_decoder);
        cfg.lr_discriminator = get_double(*t, "lr_discriminator", "training", cfg.lr_discriminator);
        cfg.epochs = get_int(*t, "epochs", "training", cfg.epochs);
        cfg.seed = get_u64(*t, "seed", "training", cfg.seed);
        cfg.checkpoint_interval = get_int(*t, "checkpoint_interval", "training", cfg.checkpoint_interval);
        cfg.early_stop = get_bool(*t, "early_stop", "training", cfg.early_stop);
        cfg.early_stop_window = get_int(*t, "early_stop_window", "training", cfg.early_stop_window);
        cfg.early_stop_rel_tol = get_double(*t, "early_stop_rel_tol", "training", cfg.early_stop_rel_tol);
        cfg.per_image_search = get_bool(*t, "per_image_search", "training", cfg.per_image_search);
        cfg.reuse_search_draws = get_bool(*t, "reuse_search_draws", "training", cfg.reuse_search_draws);
        cfg.history_timing = get_bool(*t, "history_timing", "training", cfg.history_timing);
    }
    if (const json* at = find(j, "attacks")) {
        if (!at->is_array()) fail("attacks", "expected an array");
        cfg.attacks.clear();
        for (std::size_t i = 0; i < at->size(); ++i)
            cfg.attacks.push_back(attack_from_json((*at)[i], "attacks[" + std::to_string(i) + "]"));
    } else {
        cfg.attacks = default_attacks_for_mode(cfg.mode);
    }
    if (const json* e = find(j, "eval")) {
        check_keys(*e, {"seed", "extend_grids", "true_jpeg", "plots"}, "eval");
        cfg.eval.seed = get_u64(*e, "seed", "eval", cfg.eval.seed);
        cfg.eval.extend_grids = get_bool(*e, "extend_grids", "eval", cfg.eval.extend_grids);
        cfg.eval.true_jpeg = get_bool(*e, "true_jpeg", "eval", cfg.eval.true_jpeg);
        cfg.eval.plots = get_bool(*e, "plots", "eval", cfg.eval.plots);
    }
    cfg.validate();
    return cfg;
}

json emit_config(const TrainConfig& cfg) {
    json j;
    json d;
    d["train_dir"] = cfg.data.train_dir;
    d["eval_dir"] = cfg.data.eval_dir;
    if (cfg.data.limit) d["limit"] = *cfg.data.limit;
    if (cfg.data.eval_limit) d["eval_limit"] = *cfg.data.eval_limit;
    j["data"] = std::move(d);

    j["model"] = arch_to_json(cfg.arch);

    j["attacks"] = json::array();
    for (const AttackSpec& a : cfg.attacks) j["attacks"].push_back(attack_to_json(a));

    json t;
    t["batch_size"] = cfg.batch_size;
    if (!cfg.subset_sizes.empty()) t["subset_sizes"] = cfg.subset_sizes;
    t["mode"] = to_string(cfg.mode);
    t["lambda_image"] = cfg.weights.lambda_image;
    t["lambda_adversarial"] = cfg.weights.lambda_adversarial;
    t["lr_encoder"] = cfg.lr_encoder;
    t["lr_decoder"] = cfg.lr_decoder;
    t["lr_discriminator"] = cfg.lr_discriminator;
    t["optimizer"] = to_string(cfg.optimizer);
    t["epochs"] = cfg.epochs;
    t["seed"] = cfg.seed;
    t["checkpoint_interval"] = cfg.checkpoint_interval;
    t["early_stop"] = cfg.early_stop;
    t["early_stop_window"] = cfg.early_stop_window;
    t["early_stop_rel_tol"] = cfg.early_stop_rel_tol;
    t["per_image_search"] = cfg.per_image_search;
    t["reuse_search_draws"] = cfg.reuse_search_draws;
    t["history_timing"] = cfg.history_timing;
    j["training"] = std::move(t);

    json e;
    e["seed"] = cfg.eval.seed;
    e["extend_grids"] = cfg.eval.extend_grids;
    e["true_jpeg"] = cfg.eval.true_jpeg;
    e["plots"] = cfg.eval.plots;
    j["eval"] = std::move(e);
    return j;
}

TrainConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return config_from_json(j);
}

void save_config(const TrainConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file: " + path);
    out << emit_config(cfg).dump(2) << "\n";
}

std::vector<AttackSpec> parse_attack_list(std::string_view text) {
    auto trim = [](std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
        return s;
    };
    auto to_num = [](std::string_view s, const std::string& ctx) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(std::string(s), &pos);
            if (pos != s.size()) throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("attack list: bad number '" + std::string(s) + "' in " + ctx);
        }
    };
    std::vector<AttackSpec> out;
    std::string_view rest = text;
    while (!rest.empty()) {
        const std::size_t comma = rest.find(',');
        std::string_view tok = trim(rest.substr(0, comma));
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        if (tok.empty()) continue;
        const std::size_t eq = tok.find('=');
        AttackSpec spec;
        spec.kind = attack_kind_from_string(trim(tok.substr(0, eq)));
        spec.grid = default_severity_grid(spec.kind);
        spec.fixed = default_fixed_severity(spec.kind);
        if (eq != std::string_view::npos) {
            const std::string ctx(tok);
            std::string_view args = trim(tok.substr(eq + 1));
            if (args.substr(0, 6) == "fixed:") {
                const double v = to_num(trim(args.substr(6)), ctx);
                spec.fixed = v;
                spec.grid = {v, v, 1.0};
            } else {
                const std::size_t c1 = args.find(':');
                const std::size_t c2 = c1 == std::string_view::npos ? c1 : args.find(':', c1 + 1);
                if (c1 == std::string_view::npos || c2 == std::string_view::npos)
                    throw ConfigError("attack list: expected kind=min:max:step or kind=fixed:v, got '" +
                                      ctx + "'");
                spec.grid.min_value = to_num(trim(args.substr(0, c1)), ctx);
                spec.grid.max_value = to_num(trim(args.substr(c1 + 1, c2 - c1 - 1)), ctx);
                spec.grid.step = to_num(trim(args.substr(c2 + 1)), ctx);
            }
        }
        out.push_back(spec);
    }
    if (out.empty()) throw ConfigError("attack list: no attacks given");
    return out;
}

} // namespace rmk
