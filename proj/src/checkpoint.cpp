#include "rmk/checkpoint.hpp"

#include "rmk/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace rmk {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

using nlohmann::json;

namespace {

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw FormatError("truncated checkpoint: " + path);
    return v;
}

} // namespace

void save_checkpoint(ModelBundle& m, const TrainConfig* config_snapshot, const std::string& path) {
    json arrays = json::array();
    std::vector<const Tensor*> data;
    std::uint64_t offset = 0;
    auto add = [&](const std::string& name, const Tensor& t) {
        json a;
        a["name"] = name;
        a["shape"] = t.shape();
        a["dtype"] = "f64";
        a["offset"] = offset;
        a["nbytes"] = t.size() * sizeof(double);
        arrays.push_back(std::move(a));
        data.push_back(&t);
        offset += t.size() * sizeof(double);
    };
    visit_params(m, [&](const std::string& name, Tensor& v, Tensor&) { add(name, v); });
    visit_buffers(m, [&](const std::string& name, Tensor& v) { add(name, v); });

    json meta;
    meta["format_version"] = kCheckpointVersion;
    meta["arch"] = arch_to_json(m.arch);
    meta["step"] = m.step;
    meta["seed"] = m.init_seed;
    meta["config"] = config_snapshot ? emit_config(*config_snapshot) : json(nullptr);
    meta["arrays"] = std::move(arrays);
    const std::string meta_str = meta.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write checkpoint: " + path);
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    write_pod<std::uint32_t>(out, kCheckpointVersion);
    write_pod<std::uint64_t>(out, meta_str.size());
    out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
    for (const Tensor* t : data)
        out.write(reinterpret_cast<const char*>(t->data()),
                  static_cast<std::streamsize>(t->size() * sizeof(double)));
    if (!out) throw FormatError("write failed: " + path);
}

namespace {

json read_meta(std::ifstream& in, const std::string& path) {
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw FormatError("not a checkpoint file (bad magic): " + path);
    const auto version = read_pod<std::uint32_t>(in, path);
    if (version != kCheckpointVersion)
        throw FormatError("unsupported checkpoint format version " + std::to_string(version) +
                          " (expected " + std::to_string(kCheckpointVersion) + "): " + path);
    const auto meta_len = read_pod<std::uint64_t>(in, path);
    std::string meta_str(meta_len, '\0');
    in.read(meta_str.data(), static_cast<std::streamsize>(meta_len));
    if (!in) throw FormatError("truncated checkpoint meta: " + path);
    try {
        return json::parse(meta_str);
    } catch (const json::parse_error& e) {
        throw FormatError("corrupt checkpoint meta in " + path + ": " + e.what());
    }
}

} // namespace

nlohmann::json inspect_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open checkpoint: " + path);
    return read_meta(in, path);
}

ModelBundle load_checkpoint(const std::string& path, std::optional<TrainConfig>* config_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open checkpoint: " + path);
    const json meta = read_meta(in, path);
    const std::streampos data_start = in.tellg();

    ArchConfig arch;
    try {
        arch = arch_from_json(meta.at("arch"));
    } catch (const std::exception& e) {
        throw FormatError("checkpoint arch manifest invalid in " + path + ": " + e.what());
    }
    ModelBundle m = make_bundle(arch);
    if (meta.contains("step") && meta["step"].is_number_integer()) m.step = meta["step"].get<std::int64_t>();
    if (meta.contains("seed") && meta["seed"].is_number()) m.init_seed = meta["seed"].get<std::uint64_t>();

    std::map<std::string, Tensor*> expected;
    visit_params(m, [&](const std::string& name, Tensor& v, Tensor&) { expected[name] = &v; });
    visit_buffers(m, [&](const std::string& name, Tensor& v) { expected[name] = &v; });

    if (!meta.contains("arrays") || !meta["arrays"].is_array())
        throw FormatError("checkpoint missing array manifest: " + path);
    std::size_t filled = 0;
    for (const json& a : meta["arrays"]) {
        const std::string name = a.at("name").get<std::string>();
        auto it = expected.find(name);
        if (it == expected.end())
            throw FormatError("checkpoint array '" + name + "' does not fit the architecture: " + path);
        Tensor* t = it->second;
        const auto shape = a.at("shape").get<std::vector<std::size_t>>();
        if (shape != t->shape())
            throw FormatError("checkpoint array '" + name + "' shape " + shape_string(shape) +
                              " != expected " + shape_string(*t) + ": " + path);
        if (a.at("dtype").get<std::string>() != "f64")
            throw FormatError("checkpoint array '" + name + "': unsupported dtype: " + path);
        const auto nbytes = a.at("nbytes").get<std::uint64_t>();
        if (nbytes != t->size() * sizeof(double))
            throw FormatError("checkpoint array '" + name + "' byte count mismatch: " + path);
        in.seekg(data_start + static_cast<std::streamoff>(a.at("offset").get<std::uint64_t>()));
        in.read(reinterpret_cast<char*>(t->data()), static_cast<std::streamsize>(nbytes));
        if (!in) throw FormatError("truncated checkpoint data at '" + name + "': " + path);
        ++filled;
    }
    if (filled != expected.size())
        throw FormatError("checkpoint holds " + std::to_string(filled) + " arrays, architecture needs " +
                          std::to_string(expected.size()) + ": " + path);

    if (config_out && meta.contains("config") && meta["config"].is_object()) {
        try {
            *config_out = config_from_json(meta["config"]);
        } catch (const std::exception& e) {
            throw FormatError("checkpoint config snapshot invalid in " + path + ": " + e.what());
        }
    }
    return m;
}

} // namespace rmk
