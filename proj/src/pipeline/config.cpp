#include "dimafx/pipeline/config.hpp"

#include <fstream>
#include <sstream>

namespace dimafx::pipeline {

using json = nlohmann::json;

json default_config()
{
    return json::parse(R"({
  "seed": 7,
  "out": "out",
  "simulate": {
    "preset": "strong",
    "n": 600,
    "censor_rate": 0.3,
    "sites": 10,
    "patch_dim": 32,
    "genes": 400,
    "pathways": 50,
    "site_shift": null,
    "shared_effect": null,
    "image_effect": null,
    "genomic_effect": null
  },
  "data": {"manifest": ""},
  "prototype": {
    "components": 16,
    "kmeans_patches": 160000,
    "kmeans_iters": 100,
    "em_iters": 30,
    "em_tol": 1e-6,
    "variance_floor": 1e-4,
    "top_m": 5
  },
  "model": {
    "d": 64,
    "d_z": 64,
    "hidden": 128,
    "pathway_token_width": 4,
    "heads": 1,
    "residual": false
  },
  "train": {
    "epochs": 30,
    "batch_size": 64,
    "learning_rate": 1e-4,
    "weight_decay": 1e-5,
    "lambda_surv": 1.0,
    "lambda_dis": 7.0
  },
  "evaluate": {"folds": 5, "tau": 120.0},
  "explain": {"fold": 0, "samples": 8, "permutations": 32, "top_k": 3}
})");
}

namespace {

bool compatible(const json& def, const json& value)
{
    if (def.is_null())
        return value.is_null() || value.is_number();
    if (def.is_boolean())
        return value.is_boolean();
    if (def.is_string())
        return value.is_string();
    if (def.is_number_float())
        return value.is_number();
    if (def.is_number_integer())
        return value.is_number_integer();
    if (def.is_object())
        return value.is_object();
    return false;
}

void merge(json& target, const json& source, const std::string& prefix)
{
    if (!source.is_object())
        throw ConfigError("config: '" + (prefix.empty() ? std::string("<root>") : prefix) + "' must be an object");
    for (const auto& [key, value] : source.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!target.contains(key))
            throw ConfigError("config: unknown key '" + path + "'");
        json& slot = target[key];
        if (!compatible(slot, value))
            throw ConfigError("config: key '" + path + "' expects " + std::string(slot.type_name()) +
                              ", got " + value.type_name());
        if (slot.is_object())
            merge(slot, value, path);
        else
            slot = value;
    }
}

json parse_value(const std::string& text)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return json(text);
    }
}

const json& at(const json& c, const std::string& section, const std::string& key)
{
    return c.at(section).at(key);
}

template <typename T>
T positive(const json& c, const std::string& section, const std::string& key)
{
    if constexpr (std::is_integral_v<T>) {
        const auto v = at(c, section, key).get<std::int64_t>();
        if (v <= 0)
            throw ConfigError(section + "." + key + " must be positive");
        return static_cast<T>(v);
    } else {
        const T v = at(c, section, key).get<T>();
        if (!(v > T(0)))
            throw ConfigError(section + "." + key + " must be positive");
        return v;
    }
}

} // namespace

json resolve_config(const std::filesystem::path& file, const std::vector<std::string>& overrides)
{
    json config = default_config();
    std::ifstream in(file);
    if (!in)
        throw ConfigError("config: cannot read " + file.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: invalid JSON in " + file.string() + ": " + e.what());
    }
    merge(config, doc, "");

    for (const std::string& item : overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError("config: --set expects KEY=VALUE, got '" + item + "'");
        const std::string key = item.substr(0, eq);
        json patch = parse_value(item.substr(eq + 1));
        std::size_t pos = key.size();
        while (pos != std::string::npos) {
            const std::size_t dot = key.rfind('.', pos - 1);
            const std::string part = dot == std::string::npos ? key.substr(0, pos) : key.substr(dot + 1, pos - dot - 1);
            if (part.empty())
                throw ConfigError("config: malformed key '" + key + "'");
            patch = json{{part, patch}};
            pos = dot;
        }
        merge(config, patch, "");
    }
    return config;
}

data::SyntheticConfig synthetic_config(const json& c)
{
    const std::string preset = at(c, "simulate", "preset").get<std::string>();
    data::SyntheticConfig s;
    if (preset == "strong")
        s = data::strong_signal_config();
    else if (preset != "default")
        throw ConfigError("simulate.preset must be 'default' or 'strong', got '" + preset + "'");
    s.samples = positive<std::size_t>(c, "simulate", "n");
    s.censor_rate = at(c, "simulate", "censor_rate").get<double>();
    s.sites = positive<std::size_t>(c, "simulate", "sites");
    s.patch_dim = positive<Index>(c, "simulate", "patch_dim");
    s.genes = positive<std::size_t>(c, "simulate", "genes");
    s.pathways = positive<std::size_t>(c, "simulate", "pathways");
    auto optional = [&](const char* key, double& slot) {
        const json& v = at(c, "simulate", key);
        if (!v.is_null())
            slot = v.get<double>();
    };
    optional("site_shift", s.site_shift);
    optional("shared_effect", s.shared_effect);
    optional("image_effect", s.image_effect);
    optional("genomic_effect", s.genomic_effect);
    s.validate();
    return s;
}

ExperimentConfig experiment_config(const json& c)
{
    ExperimentConfig e;
    e.prototypes.components = positive<Index>(c, "prototype", "components");
    e.prototypes.kmeans_patches = positive<Index>(c, "prototype", "kmeans_patches");
    e.prototypes.kmeans_iters = positive<int>(c, "prototype", "kmeans_iters");
    e.prototypes.em.iterations = static_cast<int>(at(c, "prototype", "em_iters").get<std::int64_t>());
    e.prototypes.em.relative_tolerance = at(c, "prototype", "em_tol").get<double>();
    e.prototypes.em.variance_floor = at(c, "prototype", "variance_floor").get<double>();

    e.model.d = positive<Index>(c, "model", "d");
    e.model.d_z = positive<Index>(c, "model", "d_z");
    e.model.hidden = positive<Index>(c, "model", "hidden");
    e.model.pathway_token_width = at(c, "model", "pathway_token_width").get<Index>();
    e.model.heads = positive<Index>(c, "model", "heads");
    e.model.residual = at(c, "model", "residual").get<bool>();

    e.train.epochs = positive<int>(c, "train", "epochs");
    e.train.batch_size = positive<Index>(c, "train", "batch_size");
    e.train.learning_rate = at(c, "train", "learning_rate").get<double>();
    e.train.weight_decay = at(c, "train", "weight_decay").get<double>();
    e.train.weights.surv = at(c, "train", "lambda_surv").get<double>();
    e.train.weights.dis = at(c, "train", "lambda_dis").get<double>();

    e.folds = positive<std::size_t>(c, "evaluate", "folds");
    e.tau = at(c, "evaluate", "tau").get<double>();
    e.seed = run_seed(c);
    e.validate();
    return e;
}

std::filesystem::path output_dir(const json& c)
{
    const std::string out = c.at("out").get<std::string>();
    if (out.empty())
        throw ConfigError("out must not be empty");
    return out;
}

std::uint64_t run_seed(const json& c)
{
    const json& s = c.at("seed");
    if (s.is_number_integer() && s.get<std::int64_t>() < 0)
        throw ConfigError("seed must be non-negative");
    return s.get<std::uint64_t>();
}

std::filesystem::path manifest_path(const json& c)
{
    const std::string m = at(c, "data", "manifest").get<std::string>();
    return m.empty() ? output_dir(c) / "cohort" / "manifest.json" : std::filesystem::path(m);
}

ExplainSettings explain_settings(const json& c)
{
    ExplainSettings s;
    const auto fold = at(c, "explain", "fold").get<std::int64_t>();
    if (fold < 0)
        throw ConfigError("explain.fold must be >= 0");
    s.fold = static_cast<std::size_t>(fold);
    s.samples = positive<std::size_t>(c, "explain", "samples");
    s.permutations = positive<int>(c, "explain", "permutations");
    s.top_k = positive<Index>(c, "explain", "top_k");
    return s;
}

Index top_m(const json& c) { return positive<Index>(c, "prototype", "top_m"); }

} // namespace dimafx::pipeline
