#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "ltsf/model.hpp"

namespace ltsf {

inline constexpr int kCheckpointFormatVersion = 1;

nlohmann::json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);

struct Checkpoint {
    ModelSpec spec;
    ModelState state;
    nlohmann::json metadata = nlohmann::json::object();
};

/// Checkpoint container:
///
///   bytes 0..7   "LTSFCKPT"
///   bytes 8..15  header length H, unsigned little-endian
///   next H bytes UTF-8 JSON header {format_version, spec, parameters:[{name, rows, cols}], metadata}
///   remainder    each parameter in header order, row-major little-endian float64
std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Writes via a sibling temporary file and rename so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace ltsf
