#pragma once

/// \file commands.hpp
/// \brief Implementation of the `ranp` subcommands (train, eval, hist,
/// sweep, generate). Each command writes its outputs plus a `config.json`
/// echo into an output directory.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ranp/checkpoint.hpp"
#include "ranp/data.hpp"
#include "ranp/synthetic.hpp"
#include "ranp/train.hpp"

namespace ranp {

/// Where the data comes from plus the training hyper-parameters.
struct RunConfig {
    std::optional<std::string> dataset_path;
    std::optional<std::string> synthetic_preset;
    TrainConfig train;
    std::string out_dir = "out";

    void validate() const {
        if (dataset_path.has_value() == synthetic_preset.has_value()) {
            throw InvalidConfig("exactly one of --dataset and --synthetic is required");
        }
        train.validate();
    }
};

/// Synthetic datasets are generated with the run seed.
inline Dataset load_run_dataset(const RunConfig& cfg) {
    if (cfg.dataset_path) return load_dataset(*cfg.dataset_path);
    if (!cfg.synthetic_preset) throw InvalidConfig("no dataset given");
    auto sc = synthetic_preset(*cfg.synthetic_preset);
    sc.seed = cfg.train.seed;
    return generate_synthetic(sc);
}

inline nlohmann::ordered_json config_echo(const std::string& command, const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["command"] = command;
    if (cfg.dataset_path) {
        j["dataset"] = *cfg.dataset_path;
    } else {
        j["synthetic"] = cfg.synthetic_preset.value_or("");
    }
    j["train"] = to_json(cfg.train);
    return j;
}

namespace detail {

inline std::filesystem::path prepare_out_dir(const std::string& dir) {
    std::filesystem::path p(dir);
    std::filesystem::create_directories(p);
    return p;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write '" + path.string() + "'");
    out << text;
}

template <typename Fn>
void write_with(const std::filesystem::path& path, Fn&& fn) {
    std::ostringstream ss;
    fn(ss);
    write_text(path, ss.str());
}

}  // namespace detail

struct TrainOutcome {
    TrainResult result;
    MetricsReport test;
};

/// Trains, then writes checkpoint.json, train_log.csv, val_log.csv,
/// metrics_test.csv and config.json.
inline TrainOutcome cmd_train(const RunConfig& cfg) {
    cfg.validate();
    const Dataset ds = load_run_dataset(cfg);
    const auto dir = detail::prepare_out_dir(cfg.out_dir);
    detail::write_text(dir / "config.json", config_echo("train", cfg).dump(2) + "\n");

    TrainOutcome out;
    out.result = train(ds, cfg.train);
    out.test = evaluate(out.result.params, ds, "test", cfg.train.rho, cfg.train.relevance_options());

    save_checkpoint((dir / "checkpoint.json").string(), {out.result.params, cfg.train, dataset_fingerprint(ds),
                                                         out.result.best_epoch, out.result.best_val_ndcg});
    detail::write_with(dir / "train_log.csv", [&](std::ostream& o) { write_step_log(o, out.result.log); });
    detail::write_with(dir / "val_log.csv", [&](std::ostream& o) { write_epoch_log(o, out.result.log); });
    detail::write_with(dir / "metrics_test.csv", [&](std::ostream& o) { write_metrics_csv(o, out.test); });
    return out;
}

struct EvalRequest {
    std::string checkpoint;
    std::string split = "test";
    bool transposed = false;
    std::string output = "metrics.csv";
};

/// Evaluates a checkpoint on a split of the run dataset. The relevance
/// settings (rho, empty-set convention) and the synthetic seed come from
/// the checkpoint.
inline MetricsReport cmd_eval(const RunConfig& cfg, const EvalRequest& req) {
    const Checkpoint ck = load_checkpoint(req.checkpoint);
    // A synthetic dataset is regenerated from the seed it was trained with.
    RunConfig data_cfg = cfg;
    data_cfg.train.seed = ck.config.seed;
    const Dataset ds = load_run_dataset(data_cfg);
    check_compatible(ck, ds);
    auto report = evaluate(ck.params, ds, req.split, ck.config.rho, ck.config.relevance_options());
    if (req.transposed) report = report.transposed();

    const std::filesystem::path out_path(req.output);
    if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
    detail::write_with(out_path, [&](std::ostream& o) { write_metrics_csv(o, report); });
    return report;
}

struct HistOutcome {
    std::vector<std::size_t> bins;  // 101 integer-percent bins
    std::size_t negatives = 0;
    std::size_t anchors = 0;
    std::size_t skipped = 0;
    double mass_above_zero = 0.0;
    bool bins_at_or_above_tau_empty = true;
};

/// One epoch of mining over the training split, no updates. Writes
/// hist.csv (bin,count,fraction), hist_summary.json and config.json.
/// Under RAN an occupied bin at or above 100*tau is a runtime error.
inline HistOutcome cmd_hist(const RunConfig& cfg, const std::optional<std::string>& trained = std::nullopt) {
    cfg.validate();
    const Dataset ds = load_run_dataset(cfg);
    const auto dir = detail::prepare_out_dir(cfg.out_dir);
    detail::write_text(dir / "config.json", config_echo("hist", cfg).dump(2) + "\n");

    ModelParams params;
    if (trained) {
        const auto ck = load_checkpoint(*trained);
        check_compatible(ck, ds);
        params = ck.params;
    } else {
        params = init_params(ds.video_dim(), ds.text_dim(), cfg.train.embed_dim, cfg.train.seed);
    }
    const auto stats = collect_negative_relevance(ds, params, cfg.train);

    HistOutcome out;
    out.bins = relevance_histogram(stats.relevances);
    out.negatives = stats.relevances.size();
    out.anchors = stats.anchors;
    out.skipped = stats.skipped;
    std::size_t nonzero = 0;
    for (double r : stats.relevances) nonzero += r > 0.0 ? 1 : 0;
    out.mass_above_zero = out.negatives ? static_cast<double>(nonzero) / static_cast<double>(out.negatives) : 0.0;
    for (std::size_t b = 0; b < out.bins.size(); ++b) {
        if (static_cast<double>(b) / 100.0 >= cfg.train.tau && out.bins[b] > 0) out.bins_at_or_above_tau_empty = false;
    }

    detail::write_with(dir / "hist.csv", [&](std::ostream& o) {
        o << "bin,count,fraction\n";
        for (std::size_t b = 0; b < out.bins.size(); ++b) {
            const double frac =
                out.negatives ? static_cast<double>(out.bins[b]) / static_cast<double>(out.negatives) : 0.0;
            o << b << ',' << out.bins[b] << ',' << format_number(frac) << '\n';
        }
    });
    nlohmann::ordered_json summary;
    summary["strategy"] = to_string(cfg.train.strategy);
    summary["tau"] = cfg.train.tau;
    summary["anchors"] = out.anchors;
    summary["negatives"] = out.negatives;
    summary["skipped"] = out.skipped;
    summary["skip_rate"] = out.anchors ? static_cast<double>(out.skipped) / static_cast<double>(out.anchors) : 0.0;
    summary["mass_above_zero"] = out.mass_above_zero;
    summary["bins_at_or_above_tau_empty"] = out.bins_at_or_above_tau_empty;
    detail::write_text(dir / "hist_summary.json", summary.dump(2) + "\n");

    if (cfg.train.strategy != Strategy::Standard && !out.bins_at_or_above_tau_empty) {
        throw Error("relevance-aware mining selected a negative with relevance at or above tau");
    }
    return out;
}

struct GridPoint {
    Strategy strategy = Strategy::Standard;
    double tau = 0.15;
    Margins margins;
};

/// Standard, then RAN and RANP at tau = 0.75, 0.40, 0.15.
inline std::vector<GridPoint> tau_grid(const Margins& margins) {
    std::vector<GridPoint> g{{Strategy::Standard, 0.0, margins}};
    for (double tau : {0.75, 0.40, 0.15}) {
        g.push_back({Strategy::RAN, tau, margins});
        g.push_back({Strategy::RANP, tau, margins});
    }
    return g;
}

/// RANP with delta_n = 0.20 and delta_p from 0.10 to 0.30.
inline std::vector<GridPoint> margin_grid(double tau) {
    std::vector<GridPoint> g;
    for (double dp : {0.10, 0.15, 0.20, 0.25, 0.30}) g.push_back({Strategy::RANP, tau, {0.20, dp}});
    return g;
}

struct SweepRow {
    GridPoint point;
    MetricsReport test;
};

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "strategy,tau,delta_n,delta_p,";
    write_metrics_header(out);
    out << '\n';
    for (const auto& r : rows) {
        out << to_string(r.point.strategy) << ',' << format_number(r.point.tau, 4) << ','
            << format_number(r.point.margins.delta_n, 4) << ',' << format_number(r.point.margins.delta_p, 4) << ',';
        write_metrics_fields(out, r.test);
        out << '\n';
    }
}

/// Trains one model per grid point with the shared seed and writes sweep.csv.
inline std::vector<SweepRow> cmd_sweep(const RunConfig& cfg, const std::vector<GridPoint>& grid) {
    cfg.validate();
    if (grid.empty()) throw InvalidConfig("empty sweep grid");
    const Dataset ds = load_run_dataset(cfg);
    const auto dir = detail::prepare_out_dir(cfg.out_dir);
    auto echo = config_echo("sweep", cfg);
    auto& points = echo["grid"];
    points = nlohmann::ordered_json::array();
    for (const auto& p : grid) {
        points.push_back({{"strategy", to_string(p.strategy)},
                          {"tau", p.tau},
                          {"delta_n", p.margins.delta_n},
                          {"delta_p", p.margins.delta_p}});
    }
    detail::write_text(dir / "config.json", echo.dump(2) + "\n");

    std::vector<SweepRow> rows;
    for (const auto& p : grid) {
        TrainConfig tc = cfg.train;
        tc.strategy = p.strategy;
        tc.tau = p.tau;
        tc.margins = p.margins;
        const auto result = train(ds, tc);
        rows.push_back({p, evaluate(result.params, ds, "test", tc.rho, tc.relevance_options())});
    }
    detail::write_with(dir / "sweep.csv", [&](std::ostream& o) { write_sweep_csv(o, rows); });
    return rows;
}

/// Writes the run dataset (typically a synthetic preset) as JSONL.
inline void cmd_generate(const RunConfig& cfg, const std::string& path) {
    const Dataset ds = load_run_dataset(cfg);
    const std::filesystem::path out_path(path);
    if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
    save_dataset(path, ds);
}

}  // namespace ranp
