#include "aslseg/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <json.hpp>

#include "aslseg/corpus.hpp"
#include "aslseg/nn/checkpoint.hpp"
#include "aslseg/npy.hpp"
#include "aslseg/rng.hpp"
#include "aslseg/version.hpp"

namespace fs = std::filesystem;

namespace aslseg {

void PipelineConfig::validate() const {
    if (beta < 0.0 || beta > 1.0) throw ConfigError("pipeline.beta must lie in [0,1]");
    if (max_iterations < 1) throw ConfigError("pipeline.max_iterations must be >= 1");
    if (ssl_iterations < 1 || adapter.iterations < 1 || ms.iterations < 1)
        throw ConfigError("iteration counts must be >= 1");
    if (ssl_batch_size < 1 || adapter.batch_size < 1 || ms.batch_size < 1)
        throw ConfigError("batch sizes must be >= 1");
    if (adapter_replication < 1) throw ConfigError("pipeline.adapter_replication must be >= 1");
    if (learning_rate <= 0) throw ConfigError("train.learning_rate must be > 0");
    validate_weights(loss);
    perturb.validate();
}

// ---------------------------------------------------------------------------
// stage 1: consistency training and inference

namespace {

double mean_val_dsc(const nn::UNet& net, const std::vector<LabeledSample>& val) {
    double sum = 0;
    for (const auto& s : val) {
        Mask pred = threshold_prob(net.predict(nn::stack_channels(s.slice.image)));
        sum += confusion_metrics(pred, s.mask).dsc;
    }
    return val.empty() ? 0.0 : sum / static_cast<double>(val.size());
}

} // namespace

nn::UNet stage1_train(const DatasetState& state, const PipelineConfig& cfg, std::uint64_t seed) {
    if (state.labeled.empty()) throw ConfigError("stage1_train: labeled set is empty");
    if (cfg.segmenter.dropout <= 0.0)
        std::cerr << "warning: dropout is 0, the two-pass consistency term degenerates to zero\n";

    SegmenterConfig sc = cfg.segmenter;
    sc.in_channels = 1;
    nn::UNet net(sc.to_unet(), derive_seed(seed, "ss.init"));
    nn::Sgd sgd(cfg.momentum, cfg.weight_decay);
    nn::Grads grads = net.make_grads();

    const bool have_unlabeled = !state.unlabeled.empty();
    const int b_lab = have_unlabeled ? std::max(1, cfg.ssl_batch_size / 2) : cfg.ssl_batch_size;
    const int b_unl = have_unlabeled ? cfg.ssl_batch_size - b_lab : 0;

    Rng batch_rng(derive_seed(seed, "ss.batch"));
    nn::UNet best = net;
    double best_dsc = -1.0;

    auto maybe_eval = [&](long step) {
        if (state.validation.empty()) return;
        if (step % cfg.eval_every != 0 && step != cfg.ssl_iterations - 1) return;
        const double dsc = mean_val_dsc(net, state.validation);
        if (dsc > best_dsc) {
            best_dsc = dsc;
            best = net;
        }
    };

    for (long step = 0; step < cfg.ssl_iterations; ++step) {
        grads.zero();
        const double lambda = scheduled_lambda(cfg.loss.lambda_u, step, cfg.ssl_iterations);

        for (int bi = 0; bi < b_lab; ++bi) {
            const auto& s = state.labeled[batch_rng.index(state.labeled.size())];
            nn::Tensor3 input = nn::stack_channels(s.slice.image);
            nn::Workspace ws1, ws2;
            const std::uint64_t tag = static_cast<std::uint64_t>(step) * cfg.ssl_batch_size + bi;
            auto [p1, p2] = forward_twice(net, input, derive_seed(seed, "ss.drop1", tag),
                                          derive_seed(seed, "ss.drop2", tag), ws1, ws2);
            ProbMap g1, g2;
            rdrop_supervised_loss(to_prob_map(p1), to_prob_map(p2), s.mask, cfg.loss, &g1, &g2);
            const float scale = 1.f / static_cast<float>(b_lab);
            Array2D<float> g1f = g1.cast<float>(), g2f = g2.cast<float>();
            for (auto& v : g1f.raw()) v *= scale;
            for (auto& v : g2f.raw()) v *= scale;
            net.backward(g1f, ws1, grads);
            net.backward(g2f, ws2, grads);
        }

        for (int bi = 0; bi < b_unl; ++bi) {
            const auto& s = state.unlabeled[batch_rng.index(state.unlabeled.size())];
            nn::Tensor3 input = nn::stack_channels(s.image);
            nn::Workspace ws1, ws2;
            const std::uint64_t tag = static_cast<std::uint64_t>(step) * cfg.ssl_batch_size + b_lab + bi;
            auto [p1, p2] = forward_twice(net, input, derive_seed(seed, "ss.drop1", tag),
                                          derive_seed(seed, "ss.drop2", tag), ws1, ws2);
            ProbMap g1, g2;
            symmetric_kl(to_prob_map(p1), to_prob_map(p2), &g1, &g2);
            const float scale = static_cast<float>(lambda / b_unl);
            Array2D<float> g1f = g1.cast<float>(), g2f = g2.cast<float>();
            for (auto& v : g1f.raw()) v *= scale;
            for (auto& v : g2f.raw()) v *= scale;
            net.backward(g1f, ws1, grads);
            net.backward(g2f, ws2, grads);
        }

        sgd.step(net, grads, poly_lr(cfg.learning_rate, step, cfg.ssl_iterations, cfg.lr_power), 1.0);
        maybe_eval(step);
    }

    return best_dsc >= 0.0 ? best : net;
}

std::vector<std::pair<std::string, Mask>> stage1_infer(const nn::UNet& segmenter,
                                                       const std::vector<Slice>& unlabeled) {
    std::vector<std::pair<std::string, Mask>> out;
    out.reserve(unlabeled.size());
    for (const auto& s : unlabeled)
        out.emplace_back(s.id, threshold_prob(segmenter.predict(nn::stack_channels(s.image))));
    return out;
}

// ---------------------------------------------------------------------------
// stages 2 and 3

Stage2Result stage2_prompt_predict(const PromptableSegmenter& ms, const Slice& slice,
                                   const Mask& ss_mask, std::uint64_t seed) {
    Stage2Result res;
    if (ss_mask.empty_mask()) {
        res.mask = Mask(slice.height(), slice.width());
        res.skipped = true;
        return res;
    }
    res.prompt = sample_random_click(ss_mask, seed);
    res.mask = threshold_prob(ms.predict(slice, *res.prompt));
    return res;
}

Mask stage3_refine(const AdapterNetwork& an, const Slice& slice, const Mask& ms_mask) {
    return threshold_prob(an.refine(slice.image, ms_mask));
}

// ---------------------------------------------------------------------------
// selection and expansion

std::pair<std::vector<SelectionRecord>, std::vector<SelectionRecord>> select_reliable(
    std::vector<SelectionRecord> records, double beta, bool accept_empty) {
    std::vector<SelectionRecord> accepted, rejected;
    for (auto& r : records) {
        r.agreement_dsc = confusion_metrics(r.ss_mask, r.an_mask).dsc;
        const bool both_empty = r.ss_mask.empty_mask() && r.an_mask.empty_mask();
        r.accepted = both_empty ? accept_empty : r.agreement_dsc >= beta;
        (r.accepted ? accepted : rejected).push_back(r);
    }
    return {std::move(accepted), std::move(rejected)};
}

DatasetState expand_labeled_set(DatasetState state, const std::vector<SelectionRecord>& accepted) {
    for (const auto& rec : accepted) {
        auto it = std::find_if(state.unlabeled.begin(), state.unlabeled.end(),
                               [&](const Slice& s) { return s.id == rec.slice_id; });
        if (it == state.unlabeled.end())
            throw ConsistencyError("expand_labeled_set: slice " + rec.slice_id +
                                   " is not in the unlabeled set");
        LabeledSample ls;
        ls.slice = std::move(*it);
        ls.mask = rec.an_mask;
        ls.origin = LabelOrigin::pseudo;
        state.labeled.push_back(std::move(ls));
        state.unlabeled.erase(it);
    }
    return state;
}

MetricReport evaluate_segmenter(const nn::UNet& net, const std::vector<LabeledSample>& samples,
                                const std::string& label) {
    MetricReport report;
    report.label = label;
    for (const auto& s : samples) {
        Mask pred = threshold_prob(net.predict(nn::stack_channels(s.slice.image)));
        report.add(confusion_metrics(pred, s.mask));
    }
    return report;
}

// ---------------------------------------------------------------------------
// persistence helpers

namespace {

struct RunLock {
    fs::path path;
    explicit RunLock(const fs::path& dir) : path(dir / ".lock") {
        if (fs::exists(path))
            throw IoError("run directory " + dir.string() +
                          " is locked by another run (delete .lock if stale)");
        std::ofstream f(path);
        f << "locked\n";
    }
    ~RunLock() {
        std::error_code ec;
        fs::remove(path, ec);
    }
};

nlohmann::json prompt_json(const std::optional<PointPrompt>& p) {
    if (!p) return nullptr;
    return {{"row", p->row}, {"col", p->col}};
}

void persist_iteration(const fs::path& run_dir, int k, const nn::UNet& ss,
                       const std::vector<SelectionRecord>& records, const MetricReport& val_report,
                       const MetricReport& test_report, const IterationSummary& summary) {
    const fs::path iter_dir = run_dir / ("iter_" + std::to_string(k));
    fs::create_directories(iter_dir / "checkpoints");
    fs::create_directories(iter_dir / "pseudolabels");

    nn::save_checkpoint((iter_dir / "checkpoints" / "ss.ckpt").string(), ss, {"segmenter", 0});

    std::ofstream jl(iter_dir / "selection_records.jsonl");
    for (const auto& r : records) {
        const std::string base = "pseudolabels/" + r.slice_id;
        save_npy((iter_dir / (base + "_ss.npy")).string(), r.ss_mask.data);
        save_npy((iter_dir / (base + "_ms.npy")).string(), r.ms_mask.data);
        save_npy((iter_dir / (base + "_an.npy")).string(), r.an_mask.data);
        nlohmann::json j{{"slice_id", r.slice_id},
                         {"iteration", r.iteration},
                         {"agreement_dsc", r.agreement_dsc},
                         {"accepted", r.accepted},
                         {"ms_skipped", r.ms_skipped},
                         {"prompt", prompt_json(r.prompt)},
                         {"ss_mask", base + "_ss.npy"},
                         {"ms_mask", base + "_ms.npy"},
                         {"an_mask", base + "_an.npy"}};
        jl << j.dump() << '\n';
    }

    nlohmann::json m;
    m["iteration"] = k;
    m["val"] = nlohmann::json::parse(val_report.to_json());
    m["test"] = nlohmann::json::parse(test_report.to_json());
    m["accepted"] = summary.accepted;
    m["rejected"] = summary.rejected;
    m["labeled_size"] = summary.labeled_size;
    m["unlabeled_size"] = summary.unlabeled_size;
    std::ofstream mf(iter_dir / "metrics.json");
    mf << m.dump(2) << '\n';

    std::ofstream tf(iter_dir / "metrics_table.txt");
    tf << MetricReport::render_table({test_report});
}

nlohmann::json config_to_json(const PipelineConfig& c) {
    return {{"beta", c.beta},
            {"accept_empty_agreement", c.accept_empty_agreement},
            {"max_iterations", c.max_iterations},
            {"patience", c.patience},
            {"ssl_iterations", c.ssl_iterations},
            {"ssl_batch_size", c.ssl_batch_size},
            {"learning_rate", c.learning_rate},
            {"lr_power", c.lr_power},
            {"momentum", c.momentum},
            {"weight_decay", c.weight_decay},
            {"eval_every", c.eval_every},
            {"loss", {{"lambda_u", c.loss.lambda_u}, {"alpha", c.loss.alpha}, {"gamma", c.loss.gamma}}},
            {"refresh_models", c.refresh_models},
            {"ms",
             {{"iterations", c.ms.iterations},
              {"batch_size", c.ms.batch_size},
              {"learning_rate", c.ms.learning_rate},
              {"iterative_rounds", c.ms.iterative_rounds}}},
            {"adapter",
             {{"iterations", c.adapter.iterations},
              {"batch_size", c.adapter.batch_size},
              {"learning_rate", c.adapter.learning_rate}}},
            {"adapter_replication", c.adapter_replication},
            {"perturb",
             {{"apply_probability", c.perturb.apply_probability},
              {"all_black_probability", c.perturb.all_black_probability}}},
            {"segmenter",
             {{"encoder_depth", c.segmenter.encoder_depth},
              {"base_channels", c.segmenter.base_channels},
              {"dropout", c.segmenter.dropout}}},
            {"adapter_net",
             {{"encoder_depth", c.adapter_net.encoder_depth},
              {"base_channels", c.adapter_net.base_channels}}},
            {"seed", c.seed}};
}

struct PersistedState {
    int completed = 0;
    DatasetState state;
    int best_iteration = -1;
    double best_val_dsc = -1.0;
    std::string stop_reason;
};

void save_state(const fs::path& run_dir, const std::string& corpus_dir, const PersistedState& ps) {
    nlohmann::json j;
    j["completed_iterations"] = ps.completed;
    j["corpus_dir"] = corpus_dir;
    j["iteration"] = ps.state.iteration;
    j["stop_reason"] = ps.stop_reason;
    j["best"] = {{"iteration", ps.best_iteration}, {"val_dsc", ps.best_val_dsc}};
    auto labeled = nlohmann::json::array();
    for (const auto& s : ps.state.labeled) {
        labeled.push_back({{"id", s.slice.id},
                           {"origin", s.origin == LabelOrigin::original ? "original" : "pseudo"},
                           {"mask", s.origin == LabelOrigin::original
                                        ? nlohmann::json(nullptr)
                                        : nlohmann::json("pseudolabels/" + s.slice.id + ".npy")}});
    }
    j["labeled"] = labeled;
    auto unlabeled = nlohmann::json::array();
    for (const auto& s : ps.state.unlabeled) unlabeled.push_back(s.id);
    j["unlabeled"] = unlabeled;
    std::ofstream f(run_dir / "state.json");
    f << j.dump(2) << '\n';
}

PersistedState load_state(const fs::path& run_dir, const std::string& corpus_dir) {
    std::ifstream f(run_dir / "state.json");
    if (!f) throw IoError(run_dir.string() + ": no state.json to resume from");
    nlohmann::json j;
    f >> j;

    PersistedState ps;
    ps.completed = j.at("completed_iterations").get<int>();
    ps.best_iteration = j.at("best").at("iteration").get<int>();
    ps.best_val_dsc = j.at("best").at("val_dsc").get<double>();
    ps.stop_reason = j.value("stop_reason", "");

    // rebuild the dataset view: fixed partitions from the corpus, labeled set
    // recomposed from original masks plus persisted pseudo-labels
    DatasetState fresh = load_dataset_state(corpus_dir);
    std::map<std::string, LabeledSample> originals;
    for (auto& s : fresh.labeled) originals.emplace(s.slice.id, std::move(s));
    std::map<std::string, Slice> unlabeled_pool;
    for (auto& s : fresh.unlabeled) unlabeled_pool.emplace(s.id, std::move(s));

    ps.state.validation = std::move(fresh.validation);
    ps.state.test = std::move(fresh.test);
    ps.state.iteration = j.at("iteration").get<int>();

    for (const auto& e : j.at("labeled")) {
        const std::string id = e.at("id").get<std::string>();
        if (e.at("origin").get<std::string>() == "original") {
            auto it = originals.find(id);
            if (it == originals.end())
                throw ConsistencyError("resume: original labeled slice " + id + " missing from corpus");
            ps.state.labeled.push_back(std::move(it->second));
        } else {
            auto it = unlabeled_pool.find(id);
            if (it == unlabeled_pool.end())
                throw ConsistencyError("resume: pseudo-labeled slice " + id + " missing from corpus");
            LabeledSample ls;
            ls.slice = std::move(it->second);
            ls.mask = Mask(load_npy_u8((run_dir / e.at("mask").get<std::string>()).string()));
            ls.origin = LabelOrigin::pseudo;
            ps.state.labeled.push_back(std::move(ls));
            unlabeled_pool.erase(it);
        }
    }
    for (const auto& idj : j.at("unlabeled")) {
        auto it = unlabeled_pool.find(idj.get<std::string>());
        if (it == unlabeled_pool.end())
            throw ConsistencyError("resume: unlabeled slice " + idj.get<std::string>() +
                                   " missing from corpus");
        ps.state.unlabeled.push_back(std::move(it->second));
        unlabeled_pool.erase(it);
    }
    return ps;
}

std::vector<std::pair<Slice, Mask>> labeled_pairs(const std::vector<LabeledSample>& labeled) {
    std::vector<std::pair<Slice, Mask>> out;
    out.reserve(labeled.size());
    for (const auto& s : labeled) out.emplace_back(s.slice, s.mask);
    return out;
}

std::vector<LabeledSample> tumor_samples(const std::vector<LabeledSample>& labeled) {
    std::vector<LabeledSample> out;
    for (const auto& s : labeled)
        if (!s.mask.empty_mask()) out.push_back(s);
    return out;
}

MetricReport report_from_metrics_json(const fs::path& file, const char* key) {
    std::ifstream f(file);
    if (!f) throw IoError("missing " + file.string());
    nlohmann::json j;
    f >> j;
    return MetricReport::from_json(j.at(key).dump());
}

} // namespace

// ---------------------------------------------------------------------------
// outer loop

RunResult run_pipeline(const std::string& corpus_dir, const std::string& run_dir,
                       const PipelineConfig& cfg, bool resume) {
    cfg.validate();
    const fs::path rd(run_dir);
    if (fs::exists(rd / "state.json") && !resume)
        throw IoError(run_dir + ": run directory already holds a run (use resume)");
    fs::create_directories(rd);
    fs::create_directories(rd / "pseudolabels");
    RunLock lock(rd);

    PersistedState ps;
    PromptableSegmenter ms;
    AdapterNetwork an;
    bool models_ready = false;

    if (resume && fs::exists(rd / "state.json")) {
        ps = load_state(rd, corpus_dir);
        if (fs::exists(rd / "ms.ckpt") && fs::exists(rd / "an.ckpt")) {
            ms = PromptableSegmenter(nn::load_checkpoint((rd / "ms.ckpt").string(), "promptable", 2));
            an = AdapterNetwork(nn::load_checkpoint((rd / "an.ckpt").string(), "adapter", 2));
            models_ready = true;
        }
    } else {
        ps.state = load_dataset_state(corpus_dir);
        nlohmann::json manifest;
        manifest["run"] = rd.filename().string();
        manifest["version"] = kVersion;
        manifest["corpus_dir"] = corpus_dir;
        manifest["seed"] = cfg.seed;
        manifest["config"] = config_to_json(cfg);
        manifest["created_unix"] =
            std::chrono::duration_cast<std::chrono::seconds>(
                std::chrono::system_clock::now().time_since_epoch())
                .count();
        std::ofstream mf(rd / "manifest.json");
        mf << manifest.dump(2) << '\n';
    }

    RunResult result;
    result.best_iteration = ps.best_iteration;
    result.best_val_dsc = ps.best_val_dsc;
    bool best_in_memory = false;

    // reload history of completed iterations
    for (int k = 0; k < ps.completed; ++k) {
        const fs::path iter_dir = rd / ("iter_" + std::to_string(k));
        result.history.push_back(report_from_metrics_json(iter_dir / "metrics.json", "test"));
    }

    if (!ps.stop_reason.empty()) {
        // the run already finished; just reload its outcome
        result.stop_reason = ps.stop_reason;
        result.records = load_selection_records(run_dir);
        result.final_state = std::move(ps.state);
        if (ps.best_iteration >= 0) {
            const fs::path ckpt = rd / ("iter_" + std::to_string(ps.best_iteration)) / "checkpoints" / "ss.ckpt";
            result.best_segmenter = nn::load_checkpoint(ckpt.string(), "segmenter", 1);
        }
        return result;
    }

    for (int k = ps.completed; k < cfg.max_iterations; ++k) {
        ps.state.iteration = k;
        const std::uint64_t iter_seed = derive_seed(cfg.seed, "pipeline.iter", static_cast<std::uint64_t>(k));

        nn::UNet ss = stage1_train(ps.state, cfg, iter_seed);
        MetricReport val_report = evaluate_segmenter(ss, ps.state.validation, "val_iter" + std::to_string(k));
        MetricReport test_report = evaluate_segmenter(ss, ps.state.test, "iter" + std::to_string(k));
        const double val_dsc = val_report.size() ? val_report.summary("dsc").first : 0.0;

        if ((!models_ready || cfg.refresh_models)) {
            const auto tumors = tumor_samples(ps.state.labeled);
            if (tumors.empty())
                throw ConfigError("pipeline: no labeled tumor slices to fine-tune the prompted model");
            ms = PromptableSegmenter(cfg.segmenter, derive_seed(cfg.seed, "ms.init", k));
            ms.fine_tune(tumors, cfg.ms, derive_seed(cfg.seed, "ms.tune", k));

            an = AdapterNetwork(cfg.adapter_net, derive_seed(cfg.seed, "an.init", k));
            auto synth = build_adaptation_training_set(labeled_pairs(ps.state.labeled),
                                                       cfg.adapter_replication, cfg.perturb,
                                                       derive_seed(cfg.seed, "an.synth", k));
            an.train(synth, cfg.adapter, derive_seed(cfg.seed, "an.train", k));
            models_ready = true;
            nn::save_checkpoint((rd / "ms.ckpt").string(), ms.net(), {"promptable", cfg.seed});
            nn::save_checkpoint((rd / "an.ckpt").string(), an.net(), {"adapter", cfg.seed});
        }

        auto proposals = stage1_infer(ss, ps.state.unlabeled);
        std::vector<SelectionRecord> records;
        records.reserve(proposals.size());
        for (std::size_t i = 0; i < proposals.size(); ++i) {
            const Slice& slice = ps.state.unlabeled[i];
            SelectionRecord rec;
            rec.slice_id = proposals[i].first;
            rec.iteration = k;
            rec.ss_mask = std::move(proposals[i].second);
            Stage2Result s2 = stage2_prompt_predict(ms, slice, rec.ss_mask,
                                                    derive_seed(iter_seed, "s2.click", fnv1a(rec.slice_id)));
            rec.ms_mask = std::move(s2.mask);
            rec.ms_skipped = s2.skipped;
            rec.prompt = s2.prompt;
            rec.an_mask = stage3_refine(an, slice, rec.ms_mask);
            records.push_back(std::move(rec));
        }

        auto [accepted, rejected] = select_reliable(std::move(records), cfg.beta, cfg.accept_empty_agreement);

        IterationSummary summary;
        summary.iteration = k;
        summary.val_dsc = val_dsc;
        summary.accepted = static_cast<int>(accepted.size());
        summary.rejected = static_cast<int>(rejected.size());

        ps.state = expand_labeled_set(std::move(ps.state), accepted);
        summary.labeled_size = ps.state.labeled.size();
        summary.unlabeled_size = ps.state.unlabeled.size();

        // persist pseudo-label masks for resume
        for (const auto& rec : accepted)
            save_npy((rd / "pseudolabels" / (rec.slice_id + ".npy")).string(), rec.an_mask.data);

        std::vector<SelectionRecord> all;
        all.reserve(accepted.size() + rejected.size());
        for (auto& r : accepted) all.push_back(std::move(r));
        for (auto& r : rejected) all.push_back(std::move(r));
        std::sort(all.begin(), all.end(),
                  [](const SelectionRecord& a, const SelectionRecord& b) { return a.slice_id < b.slice_id; });

        persist_iteration(rd, k, ss, all, val_report, test_report, summary);

        const bool improved = result.best_iteration < 0 || val_dsc > result.best_val_dsc;
        if (improved) {
            result.best_iteration = k;
            result.best_val_dsc = val_dsc;
            result.best_segmenter = ss;
            best_in_memory = true;
        }
        result.history.push_back(test_report);
        result.summaries.push_back(summary);
        for (auto& r : all) result.records.push_back(std::move(r));

        ps.completed = k + 1;
        ps.best_iteration = result.best_iteration;
        ps.best_val_dsc = result.best_val_dsc;

        if (summary.accepted == 0)
            result.stop_reason = "no_acceptances";
        else if (k + 1 >= cfg.max_iterations)
            result.stop_reason = "max_iterations";
        else if (!improved && k - result.best_iteration >= cfg.patience)
            result.stop_reason = "no_val_improvement";

        ps.stop_reason = result.stop_reason;
        save_state(rd, corpus_dir, ps);
        if (!result.stop_reason.empty()) break;
    }

    if (!best_in_memory && result.best_iteration >= 0) {
        const fs::path ckpt =
            rd / ("iter_" + std::to_string(result.best_iteration)) / "checkpoints" / "ss.ckpt";
        result.best_segmenter = nn::load_checkpoint(ckpt.string(), "segmenter", 1);
    }
    result.final_state = std::move(ps.state);
    return result;
}

std::vector<SelectionRecord> load_selection_records(const std::string& run_dir) {
    std::vector<SelectionRecord> out;
    for (int k = 0;; ++k) {
        const fs::path iter_dir = fs::path(run_dir) / ("iter_" + std::to_string(k));
        const fs::path jsonl = iter_dir / "selection_records.jsonl";
        if (!fs::exists(jsonl)) break;
        std::ifstream f(jsonl);
        std::string line;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            nlohmann::json j = nlohmann::json::parse(line);
            SelectionRecord r;
            r.slice_id = j.at("slice_id").get<std::string>();
            r.iteration = j.at("iteration").get<int>();
            r.agreement_dsc = j.at("agreement_dsc").get<double>();
            r.accepted = j.at("accepted").get<bool>();
            r.ms_skipped = j.at("ms_skipped").get<bool>();
            if (!j.at("prompt").is_null())
                r.prompt = PointPrompt{j.at("prompt").at("row").get<int>(), j.at("prompt").at("col").get<int>()};
            r.ss_mask = Mask(load_npy_u8((iter_dir / j.at("ss_mask").get<std::string>()).string()));
            r.ms_mask = Mask(load_npy_u8((iter_dir / j.at("ms_mask").get<std::string>()).string()));
            r.an_mask = Mask(load_npy_u8((iter_dir / j.at("an_mask").get<std::string>()).string()));
            out.push_back(std::move(r));
        }
    }
    return out;
}

} // namespace aslseg
