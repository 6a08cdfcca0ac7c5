#include "aslseg/partition.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "aslseg/rng.hpp"

namespace aslseg {

const char* partition_name(PartitionTag p) {
    switch (p) {
        case PartitionTag::labeled: return "labeled";
        case PartitionTag::unlabeled: return "unlabeled";
        case PartitionTag::validation: return "validation";
        case PartitionTag::test: return "test";
    }
    return "?";
}

PartitionTag partition_from_name(const std::string& name) {
    if (name == "labeled") return PartitionTag::labeled;
    if (name == "unlabeled") return PartitionTag::unlabeled;
    if (name == "validation") return PartitionTag::validation;
    if (name == "test") return PartitionTag::test;
    throw ValidationError("unknown partition name: " + name);
}

namespace {

// Apportion `total` tumor slices over partitions sized `sizes` by largest
// remainder, ties broken by partition order.
std::vector<std::size_t> apportion(const std::vector<std::size_t>& sizes, std::size_t total,
                                   std::size_t grand_total) {
    const std::size_t k = sizes.size();
    std::vector<std::size_t> out(k, 0);
    std::vector<double> frac(k, 0.0);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < k; ++i) {
        double exact = grand_total ? static_cast<double>(sizes[i]) * total / grand_total : 0.0;
        out[i] = static_cast<std::size_t>(std::floor(exact));
        frac[i] = exact - static_cast<double>(out[i]);
        assigned += out[i];
    }
    std::vector<std::size_t> order(k);
    for (std::size_t i = 0; i < k; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (std::size_t i = 0; assigned < total; ++i) {
        ++out[order[i % k]];
        ++assigned;
    }
    // cap at partition size (can only matter in degenerate tiny splits)
    for (std::size_t i = 0; i < k && assigned > 0; ++i) {
        if (out[i] > sizes[i]) {
            std::size_t excess = out[i] - sizes[i];
            out[i] = sizes[i];
            for (std::size_t j = 0; j < k && excess > 0; ++j) {
                std::size_t room = sizes[j] - out[j];
                std::size_t add = std::min(room, excess);
                out[j] += add;
                excess -= add;
            }
        }
    }
    return out;
}

} // namespace

DatasetState make_partition(const std::vector<std::pair<Slice, Mask>>& samples,
                            double test_fraction, double val_fraction_of_train,
                            double labeled_fraction_of_train, std::uint64_t seed) {
    auto in_unit = [](double f) { return f > 0.0 && f < 1.0; };
    if (!in_unit(test_fraction) || !in_unit(val_fraction_of_train) || !in_unit(labeled_fraction_of_train))
        throw ConfigError("make_partition: fractions must lie in (0,1)");

    const std::size_t n = samples.size();
    const std::size_t n_test = static_cast<std::size_t>(std::floor(test_fraction * n));
    const std::size_t n_train = n - n_test;
    const std::size_t n_val = static_cast<std::size_t>(std::floor(val_fraction_of_train * n_train));
    const std::size_t n_lab = static_cast<std::size_t>(std::floor(labeled_fraction_of_train * n_train));
    if (n_val + n_lab > n_train)
        throw ConfigError("make_partition: validation+labeled exceed the train pool");
    const std::size_t n_unlab = n_train - n_val - n_lab;
    if (n_test == 0 || n_val == 0 || n_lab == 0 || n_unlab == 0)
        throw ConfigError("make_partition: too few slices to give every partition at least one element");

    // stratify by tumor presence
    std::vector<std::size_t> tumor_idx, clean_idx;
    for (std::size_t i = 0; i < n; ++i)
        (samples[i].first.has_tumor ? tumor_idx : clean_idx).push_back(i);

    Rng rng_t(derive_seed(seed, "partition.tumor"));
    Rng rng_c(derive_seed(seed, "partition.clean"));
    rng_t.shuffle(tumor_idx);
    rng_c.shuffle(clean_idx);

    const std::vector<std::size_t> sizes = {n_test, n_val, n_lab, n_unlab};
    std::vector<std::size_t> tumor_share = apportion(sizes, tumor_idx.size(), n);
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] - tumor_share[i] > clean_idx.size())
            throw ConfigError("make_partition: not enough tumor-free slices for a stratified split");
    }

    std::size_t t_pos = 0, c_pos = 0;
    auto take = [&](std::size_t part) {
        std::vector<std::size_t> ids;
        for (std::size_t i = 0; i < tumor_share[part]; ++i) ids.push_back(tumor_idx[t_pos++]);
        std::size_t n_clean = sizes[part] - tumor_share[part];
        for (std::size_t i = 0; i < n_clean; ++i) ids.push_back(clean_idx[c_pos++]);
        std::sort(ids.begin(), ids.end(),
                  [&](std::size_t a, std::size_t b) { return samples[a].first.id < samples[b].first.id; });
        return ids;
    };

    auto test_ids = take(0);
    auto val_ids = take(1);
    auto lab_ids = take(2);
    auto unlab_ids = take(3);

    DatasetState state;
    auto push_labeled = [&](std::vector<LabeledSample>& dst, const std::vector<std::size_t>& ids) {
        for (auto i : ids) dst.push_back(LabeledSample{samples[i].first, samples[i].second, LabelOrigin::original});
    };
    push_labeled(state.test, test_ids);
    push_labeled(state.validation, val_ids);
    push_labeled(state.labeled, lab_ids);
    for (auto i : unlab_ids) state.unlabeled.push_back(samples[i].first);
    state.iteration = 0;

    check_partition_invariants(state, static_cast<long>(n));
    return state;
}

void check_partition_invariants(const DatasetState& state, long expected_total) {
    std::set<std::string> seen;
    auto add = [&](const std::string& id) {
        if (!seen.insert(id).second)
            throw ConsistencyError("partition invariant violated: duplicate slice id " + id);
    };
    for (const auto& s : state.labeled) add(s.slice.id);
    for (const auto& s : state.unlabeled) add(s.id);
    for (const auto& s : state.validation) add(s.slice.id);
    for (const auto& s : state.test) add(s.slice.id);
    if (expected_total >= 0 && static_cast<long>(seen.size()) != expected_total)
        throw ConsistencyError("partition invariant violated: union of partitions misses slices");
}

} // namespace aslseg
