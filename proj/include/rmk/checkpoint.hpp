#pragma once

#include "rmk/config.hpp"
#include "rmk/models.hpp"

#include <optional>
#include <string>

#include <json.hpp>

namespace rmk {

// Checkpoint container, format version 1:
//   magic "RMKCKPT\0" | u32 version | u64 meta length | meta JSON | raw f64 data
// The meta manifest carries the architecture, training step, rng seed, an
// optional config snapshot, and one entry per array (name, shape, dtype,
// offset into the data section, byte count). All numbers little-endian.

inline constexpr char kCheckpointMagic[8] = {'R', 'M', 'K', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(ModelBundle& m, const TrainConfig* config_snapshot, const std::string& path);

// Rebuilds the bundle from the manifest. Magic/version/manifest problems raise
// FormatError. When the checkpoint holds a config snapshot and `config_out` is
// given, the snapshot is parsed into it.
ModelBundle load_checkpoint(const std::string& path, std::optional<TrainConfig>* config_out = nullptr);

// Meta manifest only; never touches the data section.
nlohmann::json inspect_checkpoint(const std::string& path);

} // namespace rmk
