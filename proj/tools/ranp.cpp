// ranp: train, evaluate and inspect relevance-aware mining on retrieval data.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ranp/commands.hpp"

namespace {

struct Flags {
    std::string dataset;
    std::string synthetic;
    std::string strategy = "ranp";
    std::string sampling = "uniform";
};

void add_run_flags(CLI::App& cmd, ranp::RunConfig& cfg, Flags& flags) {
    auto* ds = cmd.add_option("--dataset", flags.dataset, "JSONL dataset file");
    auto* syn = cmd.add_option("--synthetic", flags.synthetic, "synthetic preset: default, small, disjoint, dense");
    ds->excludes(syn);
    cmd.add_option("--strategy", flags.strategy, "mining strategy: standard, ran, ranp")->capture_default_str();
    cmd.add_option("--tau", cfg.train.tau, "relevance threshold")->capture_default_str();
    cmd.add_option("--delta-n", cfg.train.margins.delta_n, "negative margin")->capture_default_str();
    cmd.add_option("--delta-p", cfg.train.margins.delta_p, "positive margin")->capture_default_str();
    cmd.add_option("--rho", cfg.train.rho, "caption share needed to keep a class in a video profile")
        ->capture_default_str();
    cmd.add_option("--epochs", cfg.train.epochs)->capture_default_str();
    cmd.add_option("--batch-size", cfg.train.batch_size)->capture_default_str();
    cmd.add_option("--lr", cfg.train.lr, "SGD learning rate")->capture_default_str();
    cmd.add_option("--seed", cfg.train.seed)->capture_default_str();
    cmd.add_option("--embed-dim", cfg.train.embed_dim)->capture_default_str();
    cmd.add_option("--weight-v2t", cfg.train.weights.v2t)->capture_default_str();
    cmd.add_option("--weight-t2v", cfg.train.weights.t2v)->capture_default_str();
    cmd.add_option("--caption-sampling", flags.sampling, "uniform or first")->capture_default_str();
    cmd.add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
}

void finish_run_config(ranp::RunConfig& cfg, const Flags& flags) {
    if (!flags.dataset.empty()) cfg.dataset_path = flags.dataset;
    if (!flags.synthetic.empty()) cfg.synthetic_preset = flags.synthetic;
    cfg.train.strategy = ranp::parse_strategy(flags.strategy);
    if (flags.sampling == "uniform") {
        cfg.train.caption_sampling = ranp::CaptionSampling::Uniform;
    } else if (flags.sampling == "first") {
        cfg.train.caption_sampling = ranp::CaptionSampling::First;
    } else {
        throw ranp::InvalidConfig("--caption-sampling must be uniform or first");
    }
}

void print_report(const ranp::MetricsReport& r) {
    ranp::write_metrics_csv(std::cout, r);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Relevance-aware hard negative and positive mining for cross-modal retrieval"};
    app.require_subcommand(1);

    ranp::RunConfig cfg;
    Flags flags;

    auto* train = app.add_subcommand("train", "train a model and evaluate it on the test split");
    add_run_flags(*train, cfg, flags);

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    add_run_flags(*eval, cfg, flags);
    ranp::EvalRequest eval_req;
    eval->add_option("--checkpoint", eval_req.checkpoint)->required();
    eval->add_option("--split", eval_req.split)->capture_default_str();
    eval->add_flag("--transpose", eval_req.transposed, "swap the t2v and v2t columns");

    auto* hist = app.add_subcommand("hist", "relevance histogram of mined hard negatives over one epoch");
    add_run_flags(*hist, cfg, flags);
    std::string trained;
    hist->add_option("--trained", trained, "checkpoint to mine with instead of fresh parameters");

    auto* sweep = app.add_subcommand("sweep", "train one model per grid point");
    add_run_flags(*sweep, cfg, flags);
    std::string grid_name = "tau";
    std::vector<std::string> grid_strategies;
    std::vector<double> grid_taus;
    std::vector<double> grid_delta_ps;
    sweep->add_option("--grid", grid_name, "tau (strategy x tau), margin (delta_p) or custom")
        ->capture_default_str();
    sweep->add_option("--strategies", grid_strategies, "custom grid strategies")->delimiter(',');
    sweep->add_option("--taus", grid_taus, "custom grid thresholds")->delimiter(',');
    sweep->add_option("--delta-ps", grid_delta_ps, "custom grid positive margins")->delimiter(',');

    auto* generate = app.add_subcommand("generate", "write a dataset (usually a synthetic preset) as JSONL");
    add_run_flags(*generate, cfg, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        finish_run_config(cfg, flags);
        if (train->parsed()) {
            const auto out = ranp::cmd_train(cfg);
            std::cout << "best epoch " << out.result.best_epoch << ", outputs in " << cfg.out_dir << "\n";
            print_report(out.test);
        } else if (eval->parsed()) {
            eval_req.output = cfg.out_dir + "/metrics_" + eval_req.split + ".csv";
            print_report(ranp::cmd_eval(cfg, eval_req));
        } else if (hist->parsed()) {
            std::optional<std::string> ck;
            if (!trained.empty()) ck = trained;
            const auto out = ranp::cmd_hist(cfg, ck);
            std::cout << "negatives " << out.negatives << ", skipped " << out.skipped << ", relevant share "
                      << out.mass_above_zero << ", bins >= tau empty: "
                      << (out.bins_at_or_above_tau_empty ? "yes" : "no") << "\n";
        } else if (sweep->parsed()) {
            std::vector<ranp::GridPoint> grid;
            if (grid_name == "tau") {
                grid = ranp::tau_grid(cfg.train.margins);
            } else if (grid_name == "margin") {
                grid = ranp::margin_grid(cfg.train.tau);
            } else if (grid_name == "custom") {
                if (grid_strategies.empty()) grid_strategies.push_back(flags.strategy);
                if (grid_taus.empty()) grid_taus.push_back(cfg.train.tau);
                if (grid_delta_ps.empty()) grid_delta_ps.push_back(cfg.train.margins.delta_p);
                for (const auto& s : grid_strategies) {
                    for (double tau : grid_taus) {
                        for (double dp : grid_delta_ps) {
                            grid.push_back({ranp::parse_strategy(s), tau, {cfg.train.margins.delta_n, dp}});
                        }
                    }
                }
            } else {
                std::cerr << "error: --grid must be tau, margin or custom\n";
                return 1;
            }
            const auto rows = ranp::cmd_sweep(cfg, grid);
            ranp::write_sweep_csv(std::cout, rows);
        } else if (generate->parsed()) {
            ranp::cmd_generate(cfg, cfg.out_dir);
        }
    } catch (const ranp::InvalidConfig& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
