#include "parsefuse/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace parsefuse {

namespace {

constexpr char kMagic[8] = {'P', 'F', 'C', 'H', 'K', 'P', 'T', '\0'};
constexpr uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "payloads are written little-endian; byte-swapping is not implemented");

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw CheckpointError("truncated file");
    return v;
}

}  // namespace

uint64_t config_hash(const std::string& canonical_config) { return fnv1a64(canonical_config); }

void save_checkpoint(const std::filesystem::path& path, SentimentModel& model, uint64_t rng_seed) {
    const std::string config_text = model.config().canonical_string();

    nlohmann::json manifest;
    manifest["format_version"] = kVersion;
    manifest["config"] = config_text;
    manifest["config_hash"] = config_hash(config_text);
    manifest["rng_seed"] = rng_seed;
    nlohmann::json params = nlohmann::json::array();
    for (Parameter* p : model.parameters()) {
        nlohmann::json jp;
        jp["name"] = p->name;
        jp["shape"] = p->tensor.shape();
        jp["weight_decay"] = p->weight_decay_eligible;
        params.push_back(jp);
    }
    manifest["params"] = params;
    const std::string manifest_text = manifest.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
    out.write(kMagic, sizeof(kMagic));
    write_pod(out, kVersion);
    write_pod(out, static_cast<uint64_t>(manifest_text.size()));
    out.write(manifest_text.data(), static_cast<std::streamsize>(manifest_text.size()));
    for (Parameter* p : model.parameters()) {
        const auto& data = p->tensor.data();
        out.write(reinterpret_cast<const char*>(data.data()),
                  static_cast<std::streamsize>(data.size() * sizeof(double)));
    }
    if (!out) throw CheckpointError("write failed for " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw CheckpointError(path.string() + ": bad magic");
    const auto version = read_pod<uint32_t>(in);
    if (version != kVersion)
        throw CheckpointError(path.string() + ": unsupported version " + std::to_string(version));
    const auto manifest_len = read_pod<uint64_t>(in);
    std::string manifest_text(manifest_len, '\0');
    in.read(manifest_text.data(), static_cast<std::streamsize>(manifest_len));
    if (!in) throw CheckpointError(path.string() + ": truncated manifest");

    nlohmann::json manifest = nlohmann::json::parse(manifest_text, nullptr, false);
    if (manifest.is_discarded()) throw CheckpointError(path.string() + ": manifest is not JSON");

    Checkpoint ck;
    ck.config_text = manifest.at("config").get<std::string>();
    ck.config_hash = manifest.at("config_hash").get<uint64_t>();
    ck.rng_seed = manifest.at("rng_seed").get<uint64_t>();
    if (ck.config_hash != config_hash(ck.config_text))
        throw CheckpointError(path.string() + ": config hash does not match config text");

    for (const auto& jp : manifest.at("params")) {
        ck.param_names.push_back(jp.at("name").get<std::string>());
        ck.param_shapes.push_back(jp.at("shape").get<Shape>());
    }
    for (const Shape& shape : ck.param_shapes) {
        std::vector<double> values(static_cast<size_t>(shape_size(shape)));
        in.read(reinterpret_cast<char*>(values.data()),
                static_cast<std::streamsize>(values.size() * sizeof(double)));
        if (!in) throw CheckpointError(path.string() + ": truncated payload");
        ck.param_values.push_back(std::move(values));
    }
    return ck;
}

SentimentModel model_from_checkpoint(const std::filesystem::path& path) {
    Checkpoint ck = read_checkpoint(path);
    ModelConfig cfg = ModelConfig::from_canonical_string(ck.config_text);
    SentimentModel model(cfg, ck.rng_seed);
    load_checkpoint_into(path, model);
    return model;
}

void load_checkpoint_into(const std::filesystem::path& path, SentimentModel& model) {
    Checkpoint ck = read_checkpoint(path);
    const std::string expected = model.config().canonical_string();
    if (ck.config_text != expected)
        throw CheckpointError(path.string() + ": checkpoint config does not match model config");
    std::map<std::string, std::vector<double>> by_name;
    for (size_t i = 0; i < ck.param_names.size(); ++i)
        by_name[ck.param_names[i]] = std::move(ck.param_values[i]);
    model.restore_parameters(by_name);
}

}  // namespace parsefuse
