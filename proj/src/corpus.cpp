#include "aslseg/corpus.hpp"

#include <filesystem>
#include <fstream>

#include "aslseg/npy.hpp"

namespace fs = std::filesystem;

namespace aslseg {

std::map<std::string, PartitionTag> partition_map(const DatasetState& state) {
    std::map<std::string, PartitionTag> m;
    for (const auto& s : state.labeled) m[s.slice.id] = PartitionTag::labeled;
    for (const auto& s : state.unlabeled) m[s.id] = PartitionTag::unlabeled;
    for (const auto& s : state.validation) m[s.slice.id] = PartitionTag::validation;
    for (const auto& s : state.test) m[s.slice.id] = PartitionTag::test;
    return m;
}

void save_corpus(const std::string& dir, const std::vector<std::pair<Slice, Mask>>& samples,
                 const std::map<std::string, PartitionTag>& partitions, const nlohmann::json& meta,
                 bool force) {
    if (fs::exists(fs::path(dir) / "manifest.json") && !force)
        throw IoError(dir + ": corpus already exists (use force to overwrite)");
    fs::create_directories(fs::path(dir) / "arrays");

    nlohmann::json manifest;
    manifest["schema_version"] = 1;
    manifest["meta"] = meta;
    manifest["slices"] = nlohmann::json::array();

    for (const auto& [slice, mask] : samples) {
        auto it = partitions.find(slice.id);
        if (it == partitions.end())
            throw ConsistencyError("save_corpus: slice " + slice.id + " has no partition");
        const std::string img_rel = "arrays/" + slice.id + ".img.npy";
        const std::string msk_rel = "arrays/" + slice.id + ".msk.npy";
        save_npy((fs::path(dir) / img_rel).string(), slice.image);
        save_npy((fs::path(dir) / msk_rel).string(), mask.data);

        manifest["slices"].push_back({{"id", slice.id},
                                      {"height", slice.height()},
                                      {"width", slice.width()},
                                      {"has_tumor", slice.has_tumor},
                                      {"partition", partition_name(it->second)},
                                      {"image", img_rel},
                                      {"mask", msk_rel}});
    }

    std::ofstream f(fs::path(dir) / "manifest.json");
    if (!f) throw IoError("cannot write manifest in " + dir);
    f << manifest.dump(2) << '\n';
}

nlohmann::json load_manifest(const std::string& dir) {
    std::ifstream f(fs::path(dir) / "manifest.json");
    if (!f) throw IoError(dir + ": no manifest.json (not a corpus directory?)");
    nlohmann::json j;
    f >> j;
    return j;
}

namespace {

Slice slice_from_entry(const std::string& dir, const nlohmann::json& e) {
    Slice s;
    s.id = e.at("id").get<std::string>();
    s.image = load_npy_f32((fs::path(dir) / e.at("image").get<std::string>()).string());
    s.has_tumor = e.at("has_tumor").get<bool>();
    if (s.image.rows() != e.at("height").get<int>() || s.image.cols() != e.at("width").get<int>())
        throw IoError("corpus entry " + s.id + ": array shape disagrees with manifest");
    return s;
}

Mask mask_from_entry(const std::string& dir, const nlohmann::json& e) {
    Mask m(load_npy_u8((fs::path(dir) / e.at("mask").get<std::string>()).string()));
    for (auto v : m.data.raw())
        if (v > 1) throw IoError("corpus entry " + e.at("id").get<std::string>() + ": mask not binary");
    return m;
}

} // namespace

DatasetState load_dataset_state(const std::string& dir) {
    nlohmann::json manifest = load_manifest(dir);
    DatasetState state;
    for (const auto& e : manifest.at("slices")) {
        PartitionTag tag = partition_from_name(e.at("partition").get<std::string>());
        Slice s = slice_from_entry(dir, e);
        if (tag == PartitionTag::unlabeled) {
            state.unlabeled.push_back(std::move(s));
            continue;
        }
        if (e.at("mask").is_null())
            throw IoError("corpus entry " + s.id + ": partition " + partition_name(tag) +
                          " requires a mask");
        LabeledSample ls{std::move(s), mask_from_entry(dir, e), LabelOrigin::original};
        switch (tag) {
            case PartitionTag::labeled: state.labeled.push_back(std::move(ls)); break;
            case PartitionTag::validation: state.validation.push_back(std::move(ls)); break;
            case PartitionTag::test: state.test.push_back(std::move(ls)); break;
            default: break;
        }
    }
    state.iteration = 0;
    return state;
}

std::map<std::string, Mask> load_hidden_masks(const std::string& dir) {
    nlohmann::json manifest = load_manifest(dir);
    std::map<std::string, Mask> out;
    for (const auto& e : manifest.at("slices")) {
        if (e.at("mask").is_null()) continue;
        out.emplace(e.at("id").get<std::string>(), mask_from_entry(dir, e));
    }
    return out;
}

Slice load_slice(const std::string& dir, const std::string& id) {
    nlohmann::json manifest = load_manifest(dir);
    for (const auto& e : manifest.at("slices")) {
        if (e.at("id").get<std::string>() == id) return slice_from_entry(dir, e);
    }
    throw IoError(dir + ": no slice with id " + id);
}

} // namespace aslseg
