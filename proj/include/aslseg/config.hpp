#pragma once

#include <map>
#include <string>
#include <vector>

#include "aslseg/pipeline.hpp"
#include "aslseg/synthetic.hpp"

namespace aslseg {

// Flat dotted-key configuration ("pipeline.beta = 0.9"). Values come from a
// file, then ASLSEG_* environment overrides, then explicit --set pairs, in
// that precedence order. Every key a builder reads is recorded with its
// final value so a run can persist the fully resolved snapshot.
class Config {
public:
    Config() = default;
    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text);

    // ASLSEG_PIPELINE_BETA=0.8 -> pipeline.beta = 0.8 (first underscore after
    // the prefix separates the section).
    void apply_env_overrides();
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    double get_double(const std::string& key, double def) const;
    long get_long(const std::string& key, long def) const;
    int get_int(const std::string& key, int def) const;
    bool get_bool(const std::string& key, bool def) const;
    std::string get_string(const std::string& key, const std::string& def) const;

    // keys present in the sources that no builder ever read (typo guard)
    std::vector<std::string> unused_keys() const;

    // sorted "key = value" lines of every key read so far
    std::string snapshot() const;

private:
    std::string raw(const std::string& key, const std::string& def) const;

    std::map<std::string, std::string> values_;
    mutable std::map<std::string, std::string> resolved_;
    mutable std::map<std::string, bool> consumed_;
};

// Spec'd preprocessing knobs (HU window, lesion filter, split fractions).
struct PreprocessConfig {
    float window_lo = -82.f;
    float window_hi = 198.f;
    std::size_t min_tumor_pixels = 100;
    int tumor_label = 2;          // label value that counts as tumor
    std::string keep = "labeled"; // keep slices with any nonzero label, or "all"
    double test_fraction = 0.2;
    double val_fraction = 0.1;
    double labeled_fraction = 0.1;
};

PipelineConfig build_pipeline_config(const Config& cfg);
PreprocessConfig build_preprocess_config(const Config& cfg);
SynthConfig build_synth_config(const Config& cfg);

} // namespace aslseg
