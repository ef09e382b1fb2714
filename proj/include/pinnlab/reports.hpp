#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pinnlab/config.hpp"
#include "pinnlab/format.hpp"
#include "pinnlab/hypertune.hpp"
#include "pinnlab/training.hpp"

namespace pinnlab {

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);  // binary keeps artifacts byte-stable
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

inline std::string loss_csv(const std::vector<double>& loss_history) {
    std::string s = "epoch,loss\n";
    for (std::size_t i = 0; i < loss_history.size(); ++i)
        s += std::to_string(i + 1) + "," + format_double(loss_history[i]) + "\n";
    return s;
}

inline std::string mae_csv(const std::map<int, double>& mae_at) {
    std::string s = "epoch,mae\n";
    for (const auto& [epoch, mae] : mae_at) s += std::to_string(epoch) + "," + format_double(mae) + "\n";
    return s;
}

// One row per trial. Checkpoint cells: empty when the trial stopped before
// the checkpoint, "inf" everywhere when it diverged.
inline std::string trials_csv(const SearchReport& rep) {
    std::string s = "activation,learning_rate";
    for (int c : rep.checkpoints) s += ",mae_" + std::to_string(c);
    s += ",final_loss,seed\n";
    for (const TrialRecord& t : rep.trials) {
        s += activation_name(t.activation) + "," + format_double(t.learning_rate);
        for (int c : rep.checkpoints) {
            s += ",";
            if (t.diverged)
                s += "inf";
            else if (auto it = t.mae_at.find(c); it != t.mae_at.end())
                s += format_double(it->second);
        }
        s += "," + format_double(t.final_loss) + "," + std::to_string(t.seed) + "\n";
    }
    return s;
}

// Checkpoint MAEs of the per-activation winners, one activation per column.
inline std::string summary_csv(const SearchReport& rep) {
    std::string s = "metric";
    for (const auto& a : rep.activations) s += "," + activation_name(a);
    s += "\n";
    for (int c : rep.checkpoints) {
        s += "mae_" + std::to_string(c);
        for (std::size_t a = 0; a < rep.activations.size(); ++a) {
            const TrialRecord& t = rep.best_for(static_cast<int>(a));
            s += ",";
            if (t.diverged)
                s += "inf";
            else if (auto it = t.mae_at.find(c); it != t.mae_at.end())
                s += format_double(it->second);
        }
        s += "\n";
    }
    s += "best_learning_rate";
    for (std::size_t a = 0; a < rep.activations.size(); ++a)
        s += "," + format_double(rep.best_for(static_cast<int>(a)).learning_rate);
    s += "\n";
    return s;
}

inline std::string field_csv(const LayerSpec& spec, const Params& p, int grid_n) {
    std::string s = "x,y,psi_ap,psi_th,abs_err\n";
    for (Point pt : validation_grid(grid_n)) {
        double ap = trial_value(spec, p, pt);
        double th = exact_solution(pt);
        s += format_double(pt.x) + "," + format_double(pt.y) + "," + format_double(ap) + "," +
             format_double(th) + "," + format_double(std::abs(ap - th)) + "\n";
    }
    return s;
}

inline nlohmann::json mae_map_json(const std::map<int, double>& mae_at) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [epoch, mae] : mae_at) j[std::to_string(epoch)] = mae;
    return j;
}

inline nlohmann::json train_report_json(const ExperimentConfig& cfg, const TrainReport& rep) {
    return {
        {"command", "train"},
        {"config", config_echo(cfg)},
        {"epochs_run", rep.loss_history.size()},
        {"stop_reason", rep.stop_reason == StopReason::MaxEpochs ? "max_epochs" : "tolerance_reached"},
        {"final_loss", rep.loss_history.empty() ? 0.0 : rep.loss_history.back()},
        {"mae", mae_map_json(rep.mae_at)},
    };
}

inline nlohmann::json tune_report_json(const ExperimentConfig& cfg, const SearchReport& rep) {
    nlohmann::json best = nlohmann::json::array();
    for (std::size_t a = 0; a < rep.activations.size(); ++a) {
        const TrialRecord& t = rep.best_for(static_cast<int>(a));
        best.push_back({{"activation", activation_name(t.activation)},
                        {"learning_rate", t.learning_rate},
                        {"trial_index", rep.best[a]},
                        {"diverged", t.diverged},
                        {"mae", mae_map_json(t.mae_at)},
                        {"final_loss", t.final_loss}});
    }
    return {
        {"command", "tune"},
        {"config", config_echo(cfg)},
        {"trial_count", rep.trials.size()},
        {"checkpoints", rep.checkpoints},
        {"best", best},
    };
}

// Wall time and timestamps are nondeterministic, so they live in this
// sidecar and never in report.json.
inline nlohmann::json meta_json(double wall_seconds) {
    auto now = std::chrono::system_clock::now();
    std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return {{"wall_seconds", wall_seconds}, {"created_utc", buf}};
}

inline std::string json_text(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace pinnlab
