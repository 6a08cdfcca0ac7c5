#include "aslseg/metrics.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace aslseg {

ConfusionCounts confusion_counts(const Mask& pred, const Mask& gt) {
    require_same_shape(pred.data, gt.data, "confusion_counts");
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const bool p = pred.data.raw()[i] != 0;
        const bool t = gt.data.raw()[i] != 0;
        if (p && t)
            ++c.tp;
        else if (p && !t)
            ++c.fp;
        else if (!p && t)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

ConfusionMetrics confusion_metrics(const Mask& pred, const Mask& gt) {
    const ConfusionCounts c = confusion_counts(pred, gt);
    auto ratio = [](std::size_t num, std::size_t den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    ConfusionMetrics m;
    m.sp = ratio(c.tn, c.tn + c.fp);
    if (c.tp + c.fp + c.fn == 0) {
        // both masks empty: perfect agreement on "no tumor"
        m.dsc = m.jac = m.se = m.pre = 1.0;
        return m;
    }
    m.dsc = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
    m.jac = ratio(c.tp, c.tp + c.fp + c.fn);
    m.se = ratio(c.tp, c.tp + c.fn);
    m.pre = ratio(c.tp, c.tp + c.fp);
    return m;
}

std::pair<double, double> aggregate_mean_std(const std::vector<double>& per_slice) {
    if (per_slice.empty()) throw ValidationError("aggregate_mean_std: empty list");
    const double n = static_cast<double>(per_slice.size());
    const double mean = std::accumulate(per_slice.begin(), per_slice.end(), 0.0) / n;
    double var = 0.0;
    for (double v : per_slice) var += (v - mean) * (v - mean);
    return {mean, std::sqrt(var / n)};
}

void MetricReport::add(const ConfusionMetrics& m) {
    dsc.push_back(m.dsc);
    jac.push_back(m.jac);
    se.push_back(m.se);
    sp.push_back(m.sp);
    pre.push_back(m.pre);
}

std::pair<double, double> MetricReport::summary(const std::string& metric) const {
    const std::vector<double>* v = nullptr;
    if (metric == "dsc") v = &dsc;
    else if (metric == "jac") v = &jac;
    else if (metric == "se") v = &se;
    else if (metric == "sp") v = &sp;
    else if (metric == "pre") v = &pre;
    else throw ValidationError("MetricReport: unknown metric " + metric);
    return aggregate_mean_std(*v);
}

namespace {

std::string cell(std::pair<double, double> ms, bool percent) {
    const double scale = percent ? 100.0 : 1.0;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f±%.2f", ms.first * scale, ms.second * scale);
    return buf;
}

} // namespace

std::string MetricReport::render_table(const std::vector<MetricReport>& rows) {
    const std::vector<std::string> headers = {"Method", "DSC↑", "JAC↑", "SE↑", "SP↑", "PRE↑"};
    std::vector<std::vector<std::string>> grid;
    grid.push_back(headers);
    for (const auto& r : rows) {
        grid.push_back({r.label, cell(r.summary("dsc"), true), cell(r.summary("jac"), false),
                        cell(r.summary("se"), true), cell(r.summary("sp"), true),
                        cell(r.summary("pre"), true)});
    }

    // column widths in display characters (± and ↑ are multi-byte, 1 column)
    auto display_width = [](const std::string& s) {
        std::size_t w = 0;
        for (std::size_t i = 0; i < s.size();) {
            unsigned char ch = s[i];
            i += ch < 0x80 ? 1 : ch < 0xE0 ? 2 : ch < 0xF0 ? 3 : 4;
            ++w;
        }
        return w;
    };
    std::vector<std::size_t> width(headers.size(), 0);
    for (const auto& row : grid)
        for (std::size_t j = 0; j < row.size(); ++j)
            width[j] = std::max(width[j], display_width(row[j]));

    std::ostringstream out;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (std::size_t j = 0; j < grid[i].size(); ++j) {
            out << grid[i][j];
            if (j + 1 < grid[i].size())
                out << std::string(width[j] - display_width(grid[i][j]) + 2, ' ');
        }
        out << '\n';
        if (i == 0) {
            std::size_t total = 0;
            for (std::size_t j = 0; j < width.size(); ++j) total += width[j] + (j + 1 < width.size() ? 2 : 0);
            out << std::string(total, '-') << '\n';
        }
    }
    return out.str();
}

std::string MetricReport::to_json() const {
    nlohmann::json j;
    j["label"] = label;
    j["n"] = size();
    for (const char* name : {"dsc", "jac", "se", "sp", "pre"}) {
        auto [mean, sd] = summary(name);
        j["summary"][name] = {{"mean", mean}, {"std", sd}};
    }
    j["per_slice"] = {{"dsc", dsc}, {"jac", jac}, {"se", se}, {"sp", sp}, {"pre", pre}};
    return j.dump(2);
}

MetricReport MetricReport::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    MetricReport r;
    r.label = j.value("label", "");
    auto get = [&](const char* name) { return j.at("per_slice").at(name).get<std::vector<double>>(); };
    r.dsc = get("dsc");
    r.jac = get("jac");
    r.se = get("se");
    r.sp = get("sp");
    r.pre = get("pre");
    return r;
}

} // namespace aslseg
