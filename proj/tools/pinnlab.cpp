#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pinnlab/reports.hpp"

namespace {

namespace fs = std::filesystem;
using namespace pinnlab;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out_dir;  // overrides [output] dir when nonempty
};

std::uint64_t parse_seed_env(const char* text) {
    std::uint64_t v = 0;
    const char* end = text + std::string(text).size();
    auto [p, ec] = std::from_chars(text, end, v);
    if (ec != std::errc() || p != end)
        throw ConfigError("PINNLAB_SEED must be a non-negative integer, got '" + std::string(text) + "'");
    return v;
}

ExperimentConfig resolve_config(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args.config_path);
    if (const char* env = std::getenv("PINNLAB_SEED")) cfg.train.seed = parse_seed_env(env);
    for (const std::string& s : args.sets) apply_override(cfg, s);
    if (!args.out_dir.empty()) cfg.output.dir = args.out_dir;
    return cfg;
}

void validate_or_config_error(const TrainConfig& cfg) {
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

void write_failure(const fs::path& dir, const ExperimentConfig& cfg, const TrainingDiverged& e) {
    nlohmann::json j = {
        {"error", "training_diverged"},
        {"epoch", e.epoch},
        {"last_finite_loss", e.last_finite_loss},
        {"config", config_echo(cfg)},
    };
    write_text_file(dir / "failure.json", json_text(j));
}

int cmd_train(const CommonArgs& args) {
    ExperimentConfig cfg = resolve_config(args);
    validate_or_config_error(cfg.train);
    const fs::path dir = cfg.output.dir;
    try {
        TrainReport rep = train(cfg.train);
        write_text_file(dir / "report.json", json_text(train_report_json(cfg, rep)));
        write_text_file(dir / "loss.csv", loss_csv(rep.loss_history));
        write_text_file(dir / "mae.csv", mae_csv(rep.mae_at));
        write_text_file(dir / "params.json", json_text(params_to_json(cfg.train.spec, rep.final_params)));
        write_text_file(dir / "report.meta.json", json_text(meta_json(rep.wall_seconds)));
    } catch (const TrainingDiverged& e) {
        write_failure(dir, cfg, e);
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

struct TuneArgs {
    CommonArgs common;
    int jobs = 1;
    std::string mode;         // empty: keep config
    std::string search_seed;  // empty: keep config
    std::string activations;  // comma list, empty: keep config
};

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(text.substr(start));
            break;
        }
        out.push_back(text.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

int cmd_tune(const TuneArgs& args) {
    ExperimentConfig cfg = resolve_config(args.common);
    if (!args.mode.empty()) apply_override(cfg, "tune.mode=" + args.mode);
    if (!args.search_seed.empty()) apply_override(cfg, "tune.search_seed=" + args.search_seed);
    if (!args.activations.empty()) {
        std::vector<ActivationKind> kinds;
        for (const std::string& name : split_commas(args.activations)) {
            try {
                kinds.push_back(parse_activation(name));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("--activations: ") + e.what());
            }
        }
        cfg.tune.activations = kinds;
    }
    if (args.jobs < 1) throw ConfigError("--jobs must be >= 1");

    TrainConfig base = cfg.train;
    base.epochs_max = cfg.tune.search_epochs;
    validate_or_config_error(base);
    try {
        cfg.tune.space.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    const fs::path dir = cfg.output.dir;
    try {
        SearchOptions opt;
        opt.jobs = args.jobs;
        SearchReport rep = run_search(cfg.tune.space, base, cfg.tune.activations, opt);

        nlohmann::json report = tune_report_json(cfg, rep);
        double wall = 0.0;
        if (cfg.tune.retrain_best) {
            nlohmann::json retrained = nlohmann::json::array();
            for (std::size_t a = 0; a < rep.activations.size(); ++a) {
                const TrialRecord& t = rep.best_for(static_cast<int>(a));
                TrainConfig rc = cfg.train;
                rc.epochs_max = cfg.tune.retrain_epochs;
                std::vector<int> cps;
                for (int c : rc.mae_checkpoints)
                    if (c <= rc.epochs_max) cps.push_back(c);
                cps.push_back(rc.epochs_max);
                std::sort(cps.begin(), cps.end());
                cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
                TrainReport tr = train(trial_config(rc, cps, t.activation, t.learning_rate, t.seed));
                wall += tr.wall_seconds;
                retrained.push_back({{"activation", activation_name(t.activation)},
                                     {"learning_rate", t.learning_rate},
                                     {"mae", mae_map_json(tr.mae_at)},
                                     {"final_loss", tr.loss_history.back()}});
            }
            report["retrain"] = retrained;
        }

        write_text_file(dir / "report.json", json_text(report));
        write_text_file(dir / "trials.csv", trials_csv(rep));
        write_text_file(dir / "summary.csv", summary_csv(rep));
        write_text_file(dir / "report.meta.json", json_text(meta_json(wall)));
    } catch (const TrainingDiverged& e) {
        // run_search absorbs per-trial divergence; reaching here means a
        // retrain blew up, which is a genuine numeric failure.
        write_failure(dir, cfg, e);
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

int cmd_export_field(const std::string& params_path, int grid_n, const std::string& out_dir) {
    if (grid_n < 1) throw ConfigError("--grid-n must be >= 1");
    std::ifstream in(params_path);
    if (!in) throw ConfigError("cannot open params file: " + params_path);
    LayerSpec spec;
    Params params;
    try {
        nlohmann::json j = nlohmann::json::parse(in);
        std::tie(spec, params) = params_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad params file '" + params_path + "': " + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError("bad params file '" + params_path + "': " + e.what());
    }
    write_text_file(fs::path(out_dir) / "field.csv", field_csv(spec, params, grid_n));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pinnlab: a physics-informed neural network laboratory"};
    app.require_subcommand(1);

    CommonArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train one network on the benchmark problem");
    train_cmd->add_option("--config", train_args.config_path, "Experiment config file")->required();
    train_cmd->add_option("--set", train_args.sets, "Override a config key, e.g. train.seed=7");
    train_cmd->add_option("--out", train_args.out_dir, "Output directory (overrides [output] dir)");

    TuneArgs tune_args;
    auto* tune_cmd = app.add_subcommand("tune", "Learning-rate search across activations");
    tune_cmd->add_option("--config", tune_args.common.config_path, "Experiment config file")->required();
    tune_cmd->add_option("--set", tune_args.common.sets, "Override a config key, e.g. tune.mode=random");
    tune_cmd->add_option("--out", tune_args.common.out_dir, "Output directory (overrides [output] dir)");
    tune_cmd->add_option("--jobs", tune_args.jobs, "Worker threads for trials");
    tune_cmd->add_option("--mode", tune_args.mode, "grid or random");
    tune_cmd->add_option("--search-seed", tune_args.search_seed, "Seed for random candidate draws");
    tune_cmd->add_option("--activations", tune_args.activations, "Comma list, e.g. tanh,gelu");

    std::string params_path, export_out = ".";
    int grid_n = 100;
    auto* export_cmd = app.add_subcommand("export-field", "Evaluate a trained surface on a grid");
    export_cmd->add_option("--params", params_path, "params.json from a training run")->required();
    export_cmd->add_option("--grid-n", grid_n, "Grid resolution per axis");
    export_cmd->add_option("--out", export_out, "Output directory");

    try {
        app.parse(argc, argv);
        if (train_cmd->parsed()) return cmd_train(train_args);
        if (tune_cmd->parsed()) return cmd_tune(tune_args);
        if (export_cmd->parsed()) return cmd_export_field(params_path, grid_n, export_out);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const TrainingDiverged& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
