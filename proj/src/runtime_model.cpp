#include "inferometer/runtime_model.hpp"

#include <algorithm>
#include <fstream>

#include "inferometer/errors.hpp"

namespace inferometer {

std::string to_string(Variant v) {
    return v == Variant::idealized ? "idealized" : "denoised";
}

Variant variant_from_string(const std::string& s) {
    if (s == "idealized") return Variant::idealized;
    if (s == "denoised") return Variant::denoised;
    throw ValidationError("unknown variant '" + s + "' (expected idealized or denoised)");
}

void RuntimeModelParams::validate() const {
    const std::string where = "runtime params for '" + model_id + "'";
    if (knots.size() < 2) {
        throw ValidationError(where + ": at least 2 knots required");
    }
    for (std::size_t i = 0; i < knots.size(); ++i) {
        if (knots[i].prompt_tokens < 1) {
            throw ValidationError(where + ": knot prompt_tokens must be >= 1");
        }
        if (knots[i].encoding_time < 0) {
            throw ValidationError(where + ": knot encoding_time must be >= 0");
        }
        if (i > 0 && knots[i].prompt_tokens <= knots[i - 1].prompt_tokens) {
            throw ValidationError(where + ": knots must be strictly increasing in prompt_tokens");
        }
    }
    if (per_token_slope < 0) throw ValidationError(where + ": per_token_slope must be >= 0");
    if (overhead < 0) throw ValidationError(where + ": overhead must be >= 0");
}

double RuntimeModelParams::prompt_encoding_time(std::int64_t p) const {
    if (p < 1) throw ValidationError("prompt size must be >= 1");
    const std::size_t n = knots.size();
    // Segment slope between knots a and b.
    auto slope = [&](std::size_t a, std::size_t b) {
        return (knots[b].encoding_time - knots[a].encoding_time) /
               static_cast<double>(knots[b].prompt_tokens - knots[a].prompt_tokens);
    };
    double t;
    if (p <= knots.front().prompt_tokens) {
        t = knots.front().encoding_time +
            slope(0, 1) * static_cast<double>(p - knots.front().prompt_tokens);
    } else if (p >= knots.back().prompt_tokens) {
        t = knots.back().encoding_time +
            slope(n - 2, n - 1) * static_cast<double>(p - knots.back().prompt_tokens);
    } else {
        auto it = std::lower_bound(knots.begin(), knots.end(), p,
                                   [](const PromptKnot& k, std::int64_t v) {
                                       return k.prompt_tokens < v;
                                   });
        if (it->prompt_tokens == p) return it->encoding_time;
        const std::size_t hi = static_cast<std::size_t>(it - knots.begin());
        t = knots[hi - 1].encoding_time +
            slope(hi - 1, hi) * static_cast<double>(p - knots[hi - 1].prompt_tokens);
    }
    // Extrapolation may run negative; encoding time cannot.
    return std::max(0.0, t);
}

double RuntimeModelParams::evaluate(std::int64_t p, std::int64_t o) const {
    if (o < 1) throw ValidationError("output token count must be >= 1");
    return prompt_encoding_time(p) + static_cast<double>(o - 1) * per_token_slope + overhead;
}

nlohmann::ordered_json RuntimeModelParams::to_json() const {
    nlohmann::json knot_list = nlohmann::json::array();
    for (const auto& k : knots) {
        knot_list.push_back({k.prompt_tokens, k.encoding_time});
    }
    return {{"model_id", model_id},
            {"variant", to_string(variant)},
            {"stack_label", stack_label},
            {"knots", knot_list},
            {"per_token_slope", per_token_slope},
            {"overhead", overhead}};
}

RuntimeModelParams RuntimeModelParams::from_json(const nlohmann::json& doc) {
    RuntimeModelParams params;
    try {
        params.model_id = doc.at("model_id").get<std::string>();
        params.variant = variant_from_string(doc.at("variant").get<std::string>());
        params.stack_label = doc.value("stack_label", std::string{});
        for (const auto& pair : doc.at("knots")) {
            if (!pair.is_array() || pair.size() != 2) {
                throw ValidationError("knot entries must be [prompt_tokens, seconds] pairs");
            }
            params.knots.push_back({pair[0].get<std::int64_t>(), pair[1].get<double>()});
        }
        params.per_token_slope = doc.at("per_token_slope").get<double>();
        params.overhead = doc.value("overhead", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed runtime params document: ") + e.what());
    }
    params.validate();
    return params;
}

RuntimeModelParams RuntimeModelParams::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open params file: " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("params parse failure in " + path.string() + ": " + e.what());
    }
    return from_json(doc);
}

void RuntimeModelParams::save_file(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write params file: " + path.string());
    }
    out << to_json().dump(2) << '\n';
}

nlohmann::ordered_json FitDiagnostics::to_json() const {
    nlohmann::json per_p = nlohmann::json::object();
    for (const auto& [p, r2] : per_prompt_r2) {
        per_p[std::to_string(p)] = r2;
    }
    return {{"per_prompt_r2", per_p},
            {"slope_r2", slope_r2},
            {"sample_count", sample_count},
            {"residual_max", residual_max},
            {"warnings", warnings}};
}

FitDiagnostics FitDiagnostics::from_json(const nlohmann::json& doc) {
    FitDiagnostics d;
    try {
        for (const auto& [key, value] : doc.at("per_prompt_r2").items()) {
            d.per_prompt_r2[std::stoll(key)] = value.get<double>();
        }
        d.slope_r2 = doc.at("slope_r2").get<double>();
        d.sample_count = doc.at("sample_count").get<std::int64_t>();
        d.residual_max = doc.at("residual_max").get<double>();
        d.warnings = doc.value("warnings", std::vector<std::string>{});
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed diagnostics document: ") + e.what());
    }
    return d;
}

namespace {

RuntimeModelParams make_reference(const std::string& model_id, Variant variant,
                                  const std::string& stack, double t512, double t1024,
                                  double t1536, double g) {
    RuntimeModelParams params;
    params.model_id = model_id;
    params.variant = variant;
    params.stack_label = stack;
    params.knots = {{512, t512}, {1024, t1024}, {1536, t1536}};
    params.per_token_slope = g;
    params.overhead = 0.0;
    return params;
}

}  // namespace

std::optional<RuntimeModelParams> reference_params(const std::string& model_id, Variant variant) {
    const std::string stack = variant == Variant::idealized ? "Megatron/A100" : "";
    if (model_id == "davinci") {
        return variant == Variant::idealized
                   ? make_reference(model_id, variant, stack, 0.178, 0.323, 0.476, 0.081)
                   : make_reference(model_id, variant, stack, 0.045, 0.033, 0.142, 0.030);
    }
    if (model_id == "jurassic-grande") {
        return variant == Variant::idealized
                   ? make_reference(model_id, variant, stack, 0.097, 0.190, 0.298, 0.038)
                   : make_reference(model_id, variant, stack, 0.172, 0.351, 0.519, 0.021);
    }
    if (model_id == "jurassic-jumbo") {
        return variant == Variant::idealized
                   ? make_reference(model_id, variant, stack, 0.164, 0.310, 0.465, 0.064)
                   : make_reference(model_id, variant, stack, 0.268, 0.463, 0.655, 0.042);
    }
    if (model_id == "anthropic-lm") {
        return variant == Variant::idealized
                   ? make_reference(model_id, variant, stack, 0.108, 0.189, 0.279, 0.054)
                   : make_reference(model_id, variant, stack, 0.193, 0.191, 0.380, 0.057);
    }
    return std::nullopt;
}

std::vector<std::string> reference_model_ids() {
    return {"davinci", "jurassic-grande", "jurassic-jumbo", "anthropic-lm"};
}

}  // namespace inferometer
