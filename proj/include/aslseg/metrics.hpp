#pragma once

#include <string>
#include <vector>

#include "aslseg/types.hpp"

namespace aslseg {

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

struct ConfusionMetrics {
    double dsc = 0, jac = 0, se = 0, sp = 0, pre = 0;
};

ConfusionCounts confusion_counts(const Mask& pred, const Mask& gt);

// DSC = 2TP/(2TP+FP+FN), JAC = TP/(TP+FP+FN), SE = TP/(TP+FN),
// SP = TN/(TN+FP), PRE = TP/(TP+FP).
// Conventions: both masks empty -> DSC=JAC=SE=PRE=1 and SP from counts;
// otherwise any metric whose denominator is 0 is 0.
ConfusionMetrics confusion_metrics(const Mask& pred, const Mask& gt);

// (mean, population std) of a non-empty list.
std::pair<double, double> aggregate_mean_std(const std::vector<double>& per_slice);

// Per-slice metric values over an evaluation set plus their mean +/- std.
struct MetricReport {
    std::string label;
    std::vector<double> dsc, jac, se, sp, pre;

    std::size_t size() const { return dsc.size(); }
    void add(const ConfusionMetrics& m);

    std::pair<double, double> summary(const std::string& metric) const;

    // Aligned text table, one row per report: DSC/SE/SP/PRE as percent
    // "mean±std", JAC on its 0-1 scale.
    static std::string render_table(const std::vector<MetricReport>& rows);

    std::string to_json() const;
    static MetricReport from_json(const std::string& text);
};

} // namespace aslseg
