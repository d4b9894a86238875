#include "ltsf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ltsf/error.hpp"

namespace ltsf {

namespace {

constexpr std::string_view kMagic = "LTSFCKPT";

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(std::string_view in) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[i])) << (8 * i);
    return v;
}

}  // namespace

nlohmann::json spec_to_json(const ModelSpec& spec) {
    return {{"kind", to_string(spec.kind)},
            {"input_len", spec.input_len},
            {"horizon", spec.horizon},
            {"channels", spec.channels},
            {"depth", spec.depth},
            {"dropout_rate", spec.dropout_rate},
            {"ma_kernel", spec.ma_kernel},
            {"revin_epsilon", spec.revin_epsilon}};
}

ModelSpec spec_from_json(const nlohmann::json& j) {
    try {
        ModelSpec spec;
        spec.kind = parse_model_kind(j.at("kind").get<std::string>());
        spec.input_len = j.at("input_len").get<std::size_t>();
        spec.horizon = j.at("horizon").get<std::size_t>();
        spec.channels = j.at("channels").get<std::size_t>();
        spec.depth = j.value("depth", spec.depth);
        spec.dropout_rate = j.value("dropout_rate", spec.dropout_rate);
        spec.ma_kernel = j.value("ma_kernel", spec.ma_kernel);
        spec.revin_epsilon = j.value("revin_epsilon", spec.revin_epsilon);
        spec.validate();
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model spec: ") + e.what());
    }
}

std::string encode_checkpoint(const Checkpoint& checkpoint) {
    validate_state(checkpoint.spec, checkpoint.state);
    nlohmann::json header;
    header["format"] = "ltsf-checkpoint";
    header["format_version"] = kCheckpointFormatVersion;
    header["spec"] = spec_to_json(checkpoint.spec);
    header["parameters"] = nlohmann::json::array();
    const Parameters& p = checkpoint.state.params;
    for (std::size_t i = 0; i < p.size(); ++i) {
        header["parameters"].push_back({{"name", p.name(i)}, {"rows", p.value(i).rows()}, {"cols", p.value(i).cols()}});
    }
    header["metadata"] = checkpoint.metadata;
    const std::string text = header.dump();

    std::string out(kMagic);
    put_u64(out, text.size());
    out += text;
    for (std::size_t i = 0; i < p.size(); ++i) {
        for (double v : p.value(i).data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
    }
    return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
    if (bytes.size() < 16 || bytes.substr(0, 8) != kMagic) throw ParseError("not a checkpoint file (bad magic)");
    const std::uint64_t header_len = get_u64(bytes.substr(8, 8));
    if (header_len > bytes.size() - 16) throw ParseError("checkpoint header is truncated");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(16, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("checkpoint header: ") + e.what());
    }
    if (header.value("format_version", 0) != kCheckpointFormatVersion) {
        throw ParseError("unsupported checkpoint format version " + header.value("format_version", nlohmann::json()).dump());
    }

    Checkpoint ck;
    ck.spec = spec_from_json(header.at("spec"));
    ck.metadata = header.value("metadata", nlohmann::json::object());
    std::size_t offset = 16 + header_len;
    for (const auto& entry : header.at("parameters")) {
        const auto rows = entry.at("rows").get<std::size_t>();
        const auto cols = entry.at("cols").get<std::size_t>();
        const std::size_t n = rows * cols;
        if (bytes.size() - offset < n * 8) throw ParseError("checkpoint payload is truncated");
        std::vector<double> values(n);
        for (std::size_t i = 0; i < n; ++i) {
            values[i] = std::bit_cast<double>(get_u64(bytes.substr(offset, 8)));
            offset += 8;
        }
        ck.state.params.add(entry.at("name").get<std::string>(), Matrix(rows, cols, std::move(values)));
    }
    if (offset != bytes.size()) throw ParseError("checkpoint has trailing bytes");
    validate_state(ck.spec, ck.state);
    ck.state.mode = Mode::eval;
    return ck;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw LoadError("cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw LoadError("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    write_file_atomic(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return decode_checkpoint(read_file(path));
}

}  // namespace ltsf
