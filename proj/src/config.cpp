#include "aslseg/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

extern char** environ;

namespace aslseg {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

Config Config::from_string(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        cfg.values_[key] = value;
    }
    return cfg;
}

Config Config::from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_string(ss.str());
}

void Config::apply_env_overrides() {
    const std::string prefix = "ASLSEG_";
    for (char** env = environ; *env != nullptr; ++env) {
        const std::string entry(*env);
        if (entry.rfind(prefix, 0) != 0) continue;
        const auto eq = entry.find('=');
        if (eq == std::string::npos) continue;
        std::string name = entry.substr(prefix.size(), eq - prefix.size());
        const std::string value = entry.substr(eq + 1);
        const auto us = name.find('_');
        if (us == std::string::npos) {
            std::transform(name.begin(), name.end(), name.begin(), ::tolower);
            values_[name] = value;
            continue;
        }
        std::string key = name.substr(0, us) + "." + name.substr(us + 1);
        std::transform(key.begin(), key.end(), key.begin(), ::tolower);
        values_[key] = value;
    }
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }

std::string Config::raw(const std::string& key, const std::string& def) const {
    auto it = values_.find(key);
    const std::string v = it == values_.end() ? def : it->second;
    resolved_[key] = v;
    if (it != values_.end()) consumed_[key] = true;
    return v;
}

double Config::get_double(const std::string& key, double def) const {
    const std::string v = raw(key, std::to_string(def));
    try {
        std::size_t pos = 0;
        const double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": '" + v + "' is not a number");
    }
}

long Config::get_long(const std::string& key, long def) const {
    const std::string v = raw(key, std::to_string(def));
    try {
        std::size_t pos = 0;
        const long out = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": '" + v + "' is not an integer");
    }
}

int Config::get_int(const std::string& key, int def) const {
    return static_cast<int>(get_long(key, def));
}

bool Config::get_bool(const std::string& key, bool def) const {
    std::string v = raw(key, def ? "true" : "false");
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key " + key + ": '" + v + "' is not a boolean");
}

std::string Config::get_string(const std::string& key, const std::string& def) const {
    return raw(key, def);
}

std::vector<std::string> Config::unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
        if (!consumed_.count(k)) out.push_back(k);
    return out;
}

std::string Config::snapshot() const {
    std::ostringstream out;
    for (const auto& [k, v] : resolved_) out << k << " = " << v << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// builders

PipelineConfig build_pipeline_config(const Config& c) {
    PipelineConfig p;
    p.seed = static_cast<std::uint64_t>(c.get_long("seed", 0));

    p.beta = c.get_double("pipeline.beta", 0.9);
    p.accept_empty_agreement = c.get_bool("pipeline.accept_empty", true);
    p.max_iterations = c.get_int("pipeline.max_iterations", 4);
    p.patience = c.get_int("pipeline.patience", 1);
    p.refresh_models = c.get_bool("pipeline.refresh_models", false);
    p.adapter_replication = c.get_int("adapter.replication", 4);

    p.ssl_iterations = c.get_long("train.iterations", 600);
    p.ssl_batch_size = c.get_int("train.batch_size", 16);
    p.learning_rate = c.get_double("train.learning_rate", 0.01);
    p.lr_power = c.get_double("train.lr_power", 0.9);
    p.momentum = c.get_double("train.momentum", 0.9);
    p.weight_decay = c.get_double("train.weight_decay", 1e-4);
    p.eval_every = c.get_int("train.eval_every", 50);

    p.loss.lambda_u = c.get_double("loss.lambda_u", 1.0);
    p.loss.alpha = c.get_double("loss.alpha", 1.0);
    p.loss.gamma = c.get_double("loss.gamma", 1.0);

    p.segmenter.encoder_depth = c.get_int("model.depth", 4);
    p.segmenter.base_channels = c.get_int("model.base_channels", 16);
    p.segmenter.dropout = c.get_double("model.dropout", 0.1);

    p.adapter_net.encoder_depth = c.get_int("adapter.depth", p.segmenter.encoder_depth);
    p.adapter_net.base_channels = c.get_int("adapter.base_channels", p.segmenter.base_channels);
    p.adapter.iterations = c.get_long("adapter.iterations", 200);
    p.adapter.batch_size = c.get_int("adapter.batch_size", 8);
    p.adapter.learning_rate = c.get_double("adapter.learning_rate", 0.01);
    p.adapter.gamma = p.loss.gamma;

    p.ms.iterations = c.get_long("ms.iterations", 200);
    p.ms.batch_size = c.get_int("ms.batch_size", 8);
    p.ms.learning_rate = c.get_double("ms.learning_rate", 0.01);
    p.ms.iterative_rounds = c.get_int("ms.iterative_rounds", 3);
    p.ms.gamma = p.loss.gamma;
    const std::string policy = c.get_string("ms.click_policy", "mixed");
    if (policy == "mixed")
        p.ms.policy = ClickPolicy::mixed;
    else if (policy == "random")
        p.ms.policy = ClickPolicy::random_only;
    else if (policy == "iterative")
        p.ms.policy = ClickPolicy::iterative;
    else
        throw ConfigError("ms.click_policy must be mixed|random|iterative, got " + policy);

    p.perturb.apply_probability = c.get_double("perturb.apply_probability", 0.4);
    p.perturb.all_black_probability = c.get_double("perturb.all_black", 0.05);
    p.perturb.noise_blobs_min = c.get_int("perturb.noise_blobs_min", 1);
    p.perturb.noise_blobs_max = c.get_int("perturb.noise_blobs_max", 5);
    p.perturb.noise_radius_min = c.get_double("perturb.noise_radius_min", 2.0);
    p.perturb.noise_radius_max = c.get_double("perturb.noise_radius_max", 8.0);
    p.perturb.occlude_fraction_min = c.get_double("perturb.occlude_min", 0.1);
    p.perturb.occlude_fraction_max = c.get_double("perturb.occlude_max", 0.5);
    p.perturb.elastic_amplitude = c.get_double("perturb.elastic_amplitude", 5.0);
    p.perturb.elastic_sigma = c.get_double("perturb.elastic_sigma", 6.0);
    p.perturb.morph_radius_min = c.get_int("perturb.morph_radius_min", 1);
    p.perturb.morph_radius_max = c.get_int("perturb.morph_radius_max", 4);

    p.validate();
    return p;
}

PreprocessConfig build_preprocess_config(const Config& c) {
    PreprocessConfig p;
    p.window_lo = static_cast<float>(c.get_double("data.window_lo", -82.0));
    p.window_hi = static_cast<float>(c.get_double("data.window_hi", 198.0));
    p.min_tumor_pixels = static_cast<std::size_t>(c.get_long("data.min_tumor_pixels", 100));
    p.tumor_label = c.get_int("data.tumor_label", 2);
    p.keep = c.get_string("data.keep", "labeled");
    p.test_fraction = c.get_double("data.test_fraction", 0.2);
    p.val_fraction = c.get_double("data.val_fraction", 0.1);
    p.labeled_fraction = c.get_double("data.labeled_fraction", 0.1);
    if (p.keep != "labeled" && p.keep != "all")
        throw ConfigError("data.keep must be 'labeled' or 'all'");
    if (!(p.window_lo < p.window_hi)) throw ConfigError("data.window_lo must be < data.window_hi");
    return p;
}

SynthConfig build_synth_config(const Config& c) {
    SynthConfig s;
    s.tumor_free_fraction = c.get_double("synth.tumor_free", 0.2);
    s.max_tumors = c.get_int("synth.max_tumors", 3);
    s.min_contrast = c.get_double("synth.min_contrast", 0.12);
    s.max_contrast = c.get_double("synth.max_contrast", 0.40);
    if (s.tumor_free_fraction < 0.0 || s.tumor_free_fraction > 1.0)
        throw ConfigError("synth.tumor_free must lie in [0,1]");
    return s;
}

} // namespace aslseg
