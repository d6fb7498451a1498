#pragma once

/// \file train.hpp
/// \brief Training loop, dataset-level evaluation and hard-negative statistics.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ranp/data.hpp"
#include "ranp/error.hpp"
#include "ranp/loss.hpp"
#include "ranp/metrics.hpp"
#include "ranp/mining.hpp"
#include "ranp/model.hpp"
#include "ranp/semantics.hpp"

namespace ranp {

struct TrainConfig {
    Strategy strategy = Strategy::RANP;
    double tau = 0.15;
    Margins margins{0.2, 0.2};
    double rho = 0.25;
    std::size_t epochs = 50;
    std::size_t batch_size = 64;
    double lr = 0.1;
    std::uint64_t seed = 0;
    std::size_t embed_dim = 32;
    DirectionWeights weights{1.0, 1.0};
    CaptionSampling caption_sampling = CaptionSampling::Uniform;
    double empty_empty = 1.0;
    std::string select_split = "val";

    void validate() const {
        if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidConfig("tau must lie in [0, 1]");
        margins.validate();
        if (!(rho > 0.0 && rho <= 1.0)) throw InvalidConfig("rho must lie in (0, 1]");
        if (batch_size < 2) throw InvalidConfig("batch size must be at least 2");
        if (!(lr > 0.0)) throw InvalidConfig("learning rate must be positive");
        if (embed_dim == 0) throw InvalidConfig("embedding dimension must be positive");
        if (!(weights.v2t >= 0.0 && weights.t2v >= 0.0)) throw InvalidConfig("direction weights must be >= 0");
    }

    RelevanceOptions relevance_options() const { return {empty_empty}; }
};

inline nlohmann::ordered_json to_json(const TrainConfig& c) {
    nlohmann::ordered_json j;
    j["strategy"] = to_string(c.strategy);
    j["tau"] = c.tau;
    j["delta_n"] = c.margins.delta_n;
    j["delta_p"] = c.margins.delta_p;
    j["rho"] = c.rho;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["lr"] = c.lr;
    j["seed"] = c.seed;
    j["embed_dim"] = c.embed_dim;
    j["weight_v2t"] = c.weights.v2t;
    j["weight_t2v"] = c.weights.t2v;
    j["caption_sampling"] = c.caption_sampling == CaptionSampling::Uniform ? "uniform" : "first";
    j["empty_empty"] = c.empty_empty;
    j["select_split"] = c.select_split;
    return j;
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    try {
        c.strategy = parse_strategy(j.at("strategy").get<std::string>());
        c.tau = j.at("tau").get<double>();
        c.margins = {j.at("delta_n").get<double>(), j.at("delta_p").get<double>()};
        c.rho = j.at("rho").get<double>();
        c.epochs = j.at("epochs").get<std::size_t>();
        c.batch_size = j.at("batch_size").get<std::size_t>();
        c.lr = j.at("lr").get<double>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.embed_dim = j.at("embed_dim").get<std::size_t>();
        c.weights = {j.at("weight_v2t").get<double>(), j.at("weight_t2v").get<double>()};
        c.caption_sampling =
            j.at("caption_sampling").get<std::string>() == "first" ? CaptionSampling::First : CaptionSampling::Uniform;
        c.empty_empty = j.at("empty_empty").get<double>();
        c.select_split = j.at("select_split").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfig(std::string("malformed training config: ") + e.what());
    }
    return c;
}

/// Features and relevance of one split, ready for repeated evaluation.
struct EvalSplit {
    Matrix videos;
    Matrix captions;
    Matrix rel_v2t;
};

inline EvalSplit prepare_split(const Dataset& ds, const std::string& split, double rho,
                               const RelevanceOptions& opts = {}) {
    const auto vids = ds.split_videos(split);
    if (vids.empty()) throw InvalidInput("split '" + split + "' is empty");
    const auto caps = ds.captions_of(vids);
    const auto all_profiles = ds.video_profiles(rho);

    EvalSplit out;
    out.videos = Matrix(vids.size(), ds.video_dim());
    out.captions = Matrix(caps.size(), ds.text_dim());
    std::vector<SemanticProfile> vprof, cprof;
    for (std::size_t i = 0; i < vids.size(); ++i) {
        const auto& f = ds.videos[vids[i]].features;
        std::copy(f.begin(), f.end(), out.videos.row(i).begin());
        vprof.push_back(all_profiles[vids[i]]);
    }
    for (std::size_t j = 0; j < caps.size(); ++j) {
        const auto& f = ds.captions[caps[j]].features;
        std::copy(f.begin(), f.end(), out.captions.row(j).begin());
        cprof.push_back(ds.captions[caps[j]].annotation.profile);
    }
    out.rel_v2t = relevance_matrix(vprof, cprof, opts);
    return out;
}

inline MetricsReport evaluate(const ModelParams& params, const EvalSplit& split) {
    return evaluate_matrices(forward_batch(split.videos, split.captions, params), split.rel_v2t);
}

/// Ranks every split caption for every split video (and vice versa).
inline MetricsReport evaluate(const ModelParams& params, const Dataset& ds, const std::string& split, double rho,
                              const RelevanceOptions& opts = {}) {
    return evaluate(params, prepare_split(ds, split, rho, opts));
}

struct StepRecord {
    std::size_t epoch = 0;
    std::size_t step = 0;
    LossBreakdown loss;
};

struct EpochRecord {
    std::size_t epoch = 0;
    MetricsReport val;
};

struct TrainingLog {
    std::vector<StepRecord> steps;
    std::vector<EpochRecord> epochs;
};

struct TrainResult {
    ModelParams params;  // best on the selection split
    std::size_t best_epoch = 0;
    std::optional<double> best_val_ndcg;
    TrainingLog log;
};

/// Features, relevance and groundtruth of one training batch.
struct BatchView {
    PairedFeatures features;
    Matrix rel_v2t;
};

inline BatchView make_batch_view(const Dataset& ds, const Batch& batch,
                                 const std::vector<SemanticProfile>& video_profiles, const RelevanceOptions& opts) {
    BatchView view;
    view.features.videos = Matrix(batch.size(), ds.video_dim());
    view.features.captions = Matrix(batch.size(), ds.text_dim());
    std::vector<SemanticProfile> vprof, cprof;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& v = ds.videos[batch[i].video].features;
        const auto& c = ds.captions[batch[i].caption].features;
        std::copy(v.begin(), v.end(), view.features.videos.row(i).begin());
        std::copy(c.begin(), c.end(), view.features.captions.row(i).begin());
        vprof.push_back(video_profiles[batch[i].video]);
        cprof.push_back(ds.captions[batch[i].caption].annotation.profile);
    }
    view.rel_v2t = relevance_matrix(vprof, cprof, opts);
    return view;
}

inline MinedBatch mine_view(const BatchView& view, const Matrix& sim, const TrainConfig& cfg) {
    const auto gt = identity_map(sim.rows());
    const Tau tau(cfg.tau);
    return {mine_batch(sim, view.rel_v2t, gt, tau, cfg.strategy),
            mine_batch(sim.transposed(), view.rel_v2t.transposed(), gt, tau, cfg.strategy)};
}

inline std::uint64_t sampler_seed(std::uint64_t seed) { return seed ^ 0x9E3779B97F4A7C15ull; }

inline TrainResult train(const Dataset& ds, const TrainConfig& cfg) {
    cfg.validate();
    const auto opts = cfg.relevance_options();
    TrainResult result;
    ModelParams params = init_params(ds.video_dim(), ds.text_dim(), cfg.embed_dim, cfg.seed);
    result.params = params;
    if (cfg.epochs == 0) return result;

    const BatchSampler sampler(ds, "train", cfg.batch_size, sampler_seed(cfg.seed), cfg.caption_sampling);
    const auto profiles = ds.video_profiles(cfg.rho);
    const EvalSplit selection = prepare_split(ds, cfg.select_split, cfg.rho, opts);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto batches = sampler.epoch(epoch);
        for (std::size_t step = 0; step < batches.size(); ++step) {
            if (batches[step].size() < 2) continue;  // a lone pair has nothing to contrast
            const auto view = make_batch_view(ds, batches[step], profiles, opts);
            const Matrix sim = forward_batch(view.features.videos, view.features.captions, params);
            const auto mined = mine_view(view, sim, cfg);
            auto lg = loss_gradients(view.features, params, mined, cfg.margins, cfg.weights);
            if (!std::isfinite(lg.combined.total)) {
                throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                                       std::to_string(step));
            }
            params = sgd_step(params, lg.grads, cfg.lr);
            result.log.steps.push_back({epoch, step, lg.combined});
        }
        const auto report = evaluate(params, selection);
        result.log.epochs.push_back({epoch, report});
        if (!result.best_val_ndcg || report.ndcg_avg > *result.best_val_ndcg) {
            result.best_val_ndcg = report.ndcg_avg;
            result.best_epoch = epoch;
            result.params = params;
        }
    }
    return result;
}

/// Relevance of every mined negative over one epoch of the training split,
/// both directions, without updating the parameters.
struct NegativeRelevanceStats {
    std::vector<double> relevances;
    std::size_t anchors = 0;
    std::size_t skipped = 0;
};

inline NegativeRelevanceStats collect_negative_relevance(const Dataset& ds, const ModelParams& params,
                                                         const TrainConfig& cfg) {
    cfg.validate();
    const auto opts = cfg.relevance_options();
    const BatchSampler sampler(ds, "train", cfg.batch_size, sampler_seed(cfg.seed), cfg.caption_sampling);
    const auto profiles = ds.video_profiles(cfg.rho);
    NegativeRelevanceStats stats;
    for (const auto& batch : sampler.epoch(1)) {
        if (batch.size() < 2) continue;
        const auto view = make_batch_view(ds, batch, profiles, opts);
        const Matrix sim = forward_batch(view.features.videos, view.features.captions, params);
        const auto mined = mine_view(view, sim, cfg);
        const Matrix rel_t2v = view.rel_v2t.transposed();
        for (const auto* dir : {&mined.v2t, &mined.t2v}) {
            const Matrix& rel = dir == &mined.v2t ? view.rel_v2t : rel_t2v;
            for (const auto& t : dir->rows) {
                ++stats.anchors;
                if (!t.negative_index) {
                    ++stats.skipped;
                    continue;
                }
                stats.relevances.push_back(rel(t.anchor_index, *t.negative_index));
            }
        }
    }
    return stats;
}

/// Largest integer percent b with b / 100 <= rel; so rel < tau implies b < 100 * tau.
inline std::size_t relevance_bin(double rel) {
    if (!(rel >= 0.0)) return 0;
    if (rel >= 1.0) return 100;
    auto b = static_cast<std::size_t>(std::floor(rel * 100.0));
    while (b < 100 && static_cast<double>(b + 1) / 100.0 <= rel) ++b;
    while (b > 0 && static_cast<double>(b) / 100.0 > rel) --b;
    return b;
}

inline std::vector<std::size_t> relevance_histogram(const std::vector<double>& relevances) {
    std::vector<std::size_t> bins(101, 0);
    for (double r : relevances) ++bins[relevance_bin(r)];
    return bins;
}

// ---------------------------------------------------------------------------
// CSV output

inline std::string format_number(double x, int precision = 9) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, x);
    return buf;
}

inline std::string format_percent(const std::optional<double>& x) {
    if (!x) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", *x);
    return buf;
}

inline void write_metrics_header(std::ostream& out) {
    out << "ndcg_t2v,ndcg_v2t,ndcg_avg,map_t2v,map_v2t,map_avg";
}

inline void write_metrics_fields(std::ostream& out, const MetricsReport& r) {
    out << format_percent(r.ndcg_t2v) << ',' << format_percent(r.ndcg_v2t) << ',' << format_percent(r.ndcg_avg)
        << ',' << format_percent(r.map_t2v) << ',' << format_percent(r.map_v2t) << ',' << format_percent(r.map_avg);
}

inline void write_metrics_csv(std::ostream& out, const MetricsReport& r) {
    write_metrics_header(out);
    out << '\n';
    write_metrics_fields(out, r);
    out << '\n';
}

inline void write_step_log(std::ostream& out, const TrainingLog& log) {
    out << "epoch,step,total,l_n_sum,l_p_sum,skipped\n";
    for (const auto& s : log.steps) {
        out << s.epoch << ',' << s.step << ',' << format_number(s.loss.total) << ',' << format_number(s.loss.l_n_sum)
            << ',' << format_number(s.loss.l_p_sum) << ',' << s.loss.skipped << '\n';
    }
}

inline void write_epoch_log(std::ostream& out, const TrainingLog& log) {
    out << "epoch,";
    write_metrics_header(out);
    out << '\n';
    for (const auto& e : log.epochs) {
        out << e.epoch << ',';
        write_metrics_fields(out, e.val);
        out << '\n';
    }
}

}  // namespace ranp
