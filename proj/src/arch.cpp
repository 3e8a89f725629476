#include "inferometer/arch.hpp"

#include <fstream>
#include <set>
#include <utility>

#include "inferometer/errors.hpp"

namespace inferometer {

namespace {

std::int64_t require_int(const nlohmann::json& obj, const char* field, const std::string& where) {
    if (!obj.contains(field)) {
        throw ValidationError(where + ": missing field '" + field + "'");
    }
    if (!obj[field].is_number_integer()) {
        throw ValidationError(where + ": field '" + field + "' must be an integer");
    }
    return obj[field].get<std::int64_t>();
}

double require_number(const nlohmann::json& obj, const char* field, const std::string& where) {
    if (!obj.contains(field) || !obj[field].is_number()) {
        throw ValidationError(where + ": missing numeric field '" + field + "'");
    }
    return obj[field].get<double>();
}

std::string require_string(const nlohmann::json& obj, const char* field, const std::string& where) {
    if (!obj.contains(field) || !obj[field].is_string()) {
        throw ValidationError(where + ": missing string field '" + field + "'");
    }
    return obj[field].get<std::string>();
}

}  // namespace

Registry::Registry(std::vector<ModelArchitecture> models, std::vector<HardwareProfile> profiles)
    : models_(std::move(models)), profiles_(std::move(profiles)) {
    validate();
}

void Registry::validate() const {
    std::set<std::string> profile_ids;
    for (const auto& hw : profiles_) {
        const std::string where = "hardware profile '" + hw.id + "'";
        if (hw.id.empty()) throw ValidationError("hardware profile with empty id");
        if (!profile_ids.insert(hw.id).second) {
            throw ValidationError("duplicate hardware profile id '" + hw.id + "'");
        }
        if (hw.accelerator_count < 1) {
            throw ValidationError(where + ": accelerator_count must be >= 1");
        }
        if (hw.cost_rate < 0) throw ValidationError(where + ": cost_rate must be >= 0");
        if (hw.power_draw < 0) throw ValidationError(where + ": power_draw must be >= 0");
    }
    std::set<std::string> model_ids;
    for (const auto& m : models_) {
        const std::string where = "model '" + m.id + "'";
        if (m.id.empty()) throw ValidationError("model with empty id");
        if (!model_ids.insert(m.id).second) {
            throw ValidationError("duplicate model id '" + m.id + "'");
        }
        if (m.hidden_size < 1) throw ValidationError(where + ": hidden_size must be >= 1");
        if (m.num_layers < 1) throw ValidationError(where + ": num_layers must be >= 1");
        if (m.num_heads < 1) throw ValidationError(where + ": num_heads must be >= 1");
        if (m.hidden_size % m.num_heads != 0) {
            throw ValidationError(where + ": h not divisible by n");
        }
        if (m.reported_param_count <= 0) {
            throw ValidationError(where + ": reported_param_count must be > 0");
        }
        if (m.max_context_length < 1) {
            throw ValidationError(where + ": max_context_length must be >= 1");
        }
        if (!profile_ids.count(m.default_serving)) {
            throw ValidationError(where + ": default_serving references unknown hardware profile '" +
                                  m.default_serving + "'");
        }
    }
}

Registry Registry::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw ValidationError("registry document must be a JSON object");
    }
    std::vector<ModelArchitecture> models;
    std::vector<HardwareProfile> profiles;
    if (doc.contains("hardware_profiles")) {
        for (const auto& entry : doc["hardware_profiles"]) {
            HardwareProfile hw;
            hw.id = require_string(entry, "id", "hardware profile");
            const std::string where = "hardware profile '" + hw.id + "'";
            hw.accelerator_type = require_string(entry, "accelerator_type", where);
            hw.accelerator_count = require_int(entry, "accelerator_count", where);
            hw.cost_rate = require_number(entry, "cost_rate", where);
            hw.power_draw = require_number(entry, "power_draw", where);
            profiles.push_back(std::move(hw));
        }
    }
    if (doc.contains("models")) {
        for (const auto& entry : doc["models"]) {
            ModelArchitecture m;
            m.id = require_string(entry, "id", "model");
            const std::string where = "model '" + m.id + "'";
            m.provider = require_string(entry, "provider", where);
            m.hidden_size = require_int(entry, "hidden_size", where);
            m.num_layers = require_int(entry, "num_layers", where);
            m.num_heads = require_int(entry, "num_heads", where);
            m.reported_param_count = require_int(entry, "reported_param_count", where);
            m.max_context_length = require_int(entry, "max_context_length", where);
            m.default_serving = require_string(entry, "default_serving", where);
            models.push_back(std::move(m));
        }
    }
    return Registry(std::move(models), std::move(profiles));
}

Registry Registry::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open registry file: " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("registry parse failure in " + path.string() + ": " + e.what());
    }
    return from_json(doc);
}

nlohmann::ordered_json Registry::to_json() const {
    nlohmann::ordered_json doc;
    doc["models"] = nlohmann::ordered_json::array();
    for (const auto& m : models_) {
        doc["models"].push_back({{"id", m.id},
                                 {"provider", m.provider},
                                 {"hidden_size", m.hidden_size},
                                 {"num_layers", m.num_layers},
                                 {"num_heads", m.num_heads},
                                 {"reported_param_count", m.reported_param_count},
                                 {"max_context_length", m.max_context_length},
                                 {"default_serving", m.default_serving}});
    }
    doc["hardware_profiles"] = nlohmann::ordered_json::array();
    for (const auto& hw : profiles_) {
        doc["hardware_profiles"].push_back({{"id", hw.id},
                                            {"accelerator_type", hw.accelerator_type},
                                            {"accelerator_count", hw.accelerator_count},
                                            {"cost_rate", hw.cost_rate},
                                            {"power_draw", hw.power_draw}});
    }
    return doc;
}

const ModelArchitecture& Registry::model(const std::string& id) const {
    for (const auto& m : models_) {
        if (m.id == id) return m;
    }
    throw ValidationError("unknown model id '" + id + "'");
}

const HardwareProfile& Registry::hardware(const std::string& id) const {
    for (const auto& hw : profiles_) {
        if (hw.id == id) return hw;
    }
    throw ValidationError("unknown hardware profile id '" + id + "'");
}

bool Registry::has_model(const std::string& id) const {
    for (const auto& m : models_) {
        if (m.id == id) return true;
    }
    return false;
}

bool Registry::has_hardware(const std::string& id) const {
    for (const auto& hw : profiles_) {
        if (hw.id == id) return true;
    }
    return false;
}

std::uint64_t approx_param_count(const ModelArchitecture& arch) {
    const auto h = static_cast<std::uint64_t>(arch.hidden_size);
    const auto l = static_cast<std::uint64_t>(arch.num_layers);
    return 12 * l * h * h;
}

}  // namespace inferometer
