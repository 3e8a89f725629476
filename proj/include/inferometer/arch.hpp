#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace inferometer {

/// Per-accelerator serving configuration. cost_rate is currency per
/// accelerator-second, power_draw is watts per accelerator. Both are
/// operator-editable defaults in the shipped registry, not measured facts.
struct HardwareProfile {
    std::string id;
    std::string accelerator_type;
    std::int64_t accelerator_count = 1;
    double cost_rate = 0.0;
    double power_draw = 0.0;
};

/// Transformer hyperparameters plus the default serving configuration.
struct ModelArchitecture {
    std::string id;
    std::string provider;
    std::int64_t hidden_size = 1;   // h
    std::int64_t num_layers = 1;    // l
    std::int64_t num_heads = 1;     // n, must divide hidden_size
    std::int64_t reported_param_count = 1;
    std::int64_t max_context_length = 1;
    std::string default_serving;    // HardwareProfile id
};

/// Validated collection of architectures and hardware profiles.
/// Immutable after load; concurrent reads are safe.
class Registry {
public:
    Registry() = default;
    Registry(std::vector<ModelArchitecture> models, std::vector<HardwareProfile> profiles);

    static Registry from_json(const nlohmann::json& doc);
    static Registry load_file(const std::filesystem::path& path);
    nlohmann::ordered_json to_json() const;

    const std::vector<ModelArchitecture>& models() const { return models_; }
    const std::vector<HardwareProfile>& hardware_profiles() const { return profiles_; }

    const ModelArchitecture& model(const std::string& id) const;
    const HardwareProfile& hardware(const std::string& id) const;
    bool has_model(const std::string& id) const;
    bool has_hardware(const std::string& id) const;

private:
    void validate() const;

    std::vector<ModelArchitecture> models_;
    std::vector<HardwareProfile> profiles_;
};

/// Transformer-layer weight count 12 * l * h^2 (QKV, projection and MLP
/// matrices; embedding and output layers excluded).
std::uint64_t approx_param_count(const ModelArchitecture& arch);

}  // namespace inferometer
