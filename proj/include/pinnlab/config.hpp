#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pinnlab/hypertune.hpp"
#include "pinnlab/training.hpp"

namespace pinnlab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Minimal TOML subset: [section] headers, typed key = value pairs, strings,
// bools, integers, floats, (nested) single-line arrays, # comments.
struct TomlValue {
    std::variant<bool, std::int64_t, double, std::string, std::vector<TomlValue>> data;
    int line = 0;
};

using TomlSection = std::map<std::string, TomlValue>;
using TomlDoc = std::map<std::string, TomlSection>;

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline bool is_bare_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
}

[[noreturn]] inline void fail_at(int line, const std::string& why) {
    throw ConfigError("config: line " + std::to_string(line) + ": " + why);
}

inline void skip_ws(const std::string& s, std::size_t& i) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
}

inline TomlValue parse_value(const std::string& s, std::size_t& i, int line) {
    skip_ws(s, i);
    if (i >= s.size()) fail_at(line, "expected a value");
    TomlValue v;
    v.line = line;
    if (s[i] == '"') {
        std::string out;
        ++i;
        while (i < s.size() && s[i] != '"') {
            if (s[i] == '\\') {
                ++i;
                if (i >= s.size()) fail_at(line, "dangling escape in string");
                switch (s[i]) {
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    default: fail_at(line, std::string("unsupported escape \\") + s[i]);
                }
            } else {
                out += s[i];
            }
            ++i;
        }
        if (i >= s.size()) fail_at(line, "unterminated string");
        ++i;
        v.data = out;
        return v;
    }
    if (s[i] == '[') {
        ++i;
        std::vector<TomlValue> items;
        skip_ws(s, i);
        while (true) {
            skip_ws(s, i);
            if (i >= s.size()) fail_at(line, "unterminated array (arrays must stay on one line)");
            if (s[i] == ']') {
                ++i;
                break;
            }
            items.push_back(parse_value(s, i, line));
            skip_ws(s, i);
            if (i < s.size() && s[i] == ',') {
                ++i;
                continue;
            }
            if (i < s.size() && s[i] == ']') {
                ++i;
                break;
            }
            if (i >= s.size()) fail_at(line, "unterminated array (arrays must stay on one line)");
            fail_at(line, "expected ',' or ']' in array");
        }
        v.data = std::move(items);
        return v;
    }
    std::size_t start = i;
    while (i < s.size() && s[i] != ',' && s[i] != ']' && s[i] != ' ' && s[i] != '\t') ++i;
    std::string tok = s.substr(start, i - start);
    if (tok.empty()) fail_at(line, "expected a value");
    if (tok == "true") {
        v.data = true;
        return v;
    }
    if (tok == "false") {
        v.data = false;
        return v;
    }
    const bool looks_float = tok.find_first_of(".eE") != std::string::npos;
    if (!looks_float) {
        std::int64_t iv = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), iv);
        if (ec == std::errc() && p == tok.data() + tok.size()) {
            v.data = iv;
            return v;
        }
    }
    double dv = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), dv);
    if (ec == std::errc() && p == tok.data() + tok.size()) {
        v.data = dv;
        return v;
    }
    fail_at(line, "cannot parse value '" + tok + "' (strings need quotes)");
}

// Strips a trailing comment, honoring # inside quoted strings.
inline std::string strip_comment(const std::string& raw) {
    std::string out;
    bool in_string = false;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        char c = raw[i];
        if (in_string && c == '\\' && i + 1 < raw.size()) {
            out += c;
            out += raw[++i];
            continue;
        }
        if (c == '"') in_string = !in_string;
        if (c == '#' && !in_string) break;
        out += c;
    }
    return out;
}

inline const char* type_name(const TomlValue& v) {
    switch (v.data.index()) {
        case 0: return "bool";
        case 1: return "integer";
        case 2: return "float";
        case 3: return "string";
        default: return "array";
    }
}

}  // namespace detail

inline TomlDoc parse_toml(const std::string& text) {
    TomlDoc doc;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = detail::trim(detail::strip_comment(raw));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.size() < 3 || s.back() != ']') detail::fail_at(line, "malformed section header");
            std::string name = detail::trim(s.substr(1, s.size() - 2));
            if (name.empty()) detail::fail_at(line, "empty section name");
            for (char c : name)
                if (!detail::is_bare_char(c)) detail::fail_at(line, "bad section name '" + name + "'");
            if (doc.count(name)) detail::fail_at(line, "duplicate section [" + name + "]");
            doc[name];
            section = name;
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string::npos) detail::fail_at(line, "expected key = value");
        std::string key = detail::trim(s.substr(0, eq));
        if (key.empty()) detail::fail_at(line, "empty key");
        for (char c : key)
            if (!detail::is_bare_char(c)) detail::fail_at(line, "bad key '" + key + "'");
        if (section.empty()) detail::fail_at(line, "key '" + key + "' appears before any [section]");
        std::size_t i = eq + 1;
        TomlValue v = detail::parse_value(s, i, line);
        detail::skip_ws(s, i);
        if (i != s.size()) detail::fail_at(line, "trailing characters after value");
        if (!doc[section].emplace(key, std::move(v)).second)
            detail::fail_at(line, "duplicate key '" + section + "." + key + "'");
    }
    return doc;
}

namespace detail {

// Typed extraction with consumed-key tracking; leftovers are config errors.
class SectionReader {
  public:
    SectionReader(const TomlDoc& doc, std::string name) : name_(std::move(name)) {
        auto it = doc.find(name_);
        sec_ = it == doc.end() ? nullptr : &it->second;
    }

    bool present() const { return sec_ != nullptr; }

    const TomlValue* find(const std::string& key) {
        if (!sec_) return nullptr;
        auto it = sec_->find(key);
        if (it == sec_->end()) return nullptr;
        used_.insert(key);
        return &it->second;
    }

    [[noreturn]] void type_error(const std::string& key, const char* want, const TomlValue& v) const {
        throw ConfigError(name_ + "." + key + ": expected " + want + ", got " + type_name(v));
    }

    double number(const std::string& key, double cur) {
        const TomlValue* v = find(key);
        if (!v) return cur;
        if (auto* d = std::get_if<double>(&v->data)) return *d;
        if (auto* i = std::get_if<std::int64_t>(&v->data)) return static_cast<double>(*i);
        type_error(key, "number", *v);
    }

    int integer(const std::string& key, int cur) {
        const TomlValue* v = find(key);
        if (!v) return cur;
        if (auto* i = std::get_if<std::int64_t>(&v->data)) return static_cast<int>(*i);
        type_error(key, "integer", *v);
    }

    std::uint64_t seed(const std::string& key, std::uint64_t cur) {
        const TomlValue* v = find(key);
        if (!v) return cur;
        if (auto* i = std::get_if<std::int64_t>(&v->data)) {
            if (*i < 0) throw ConfigError(name_ + "." + key + ": seed must be >= 0");
            return static_cast<std::uint64_t>(*i);
        }
        type_error(key, "integer", *v);
    }

    bool boolean(const std::string& key, bool cur) {
        const TomlValue* v = find(key);
        if (!v) return cur;
        if (auto* b = std::get_if<bool>(&v->data)) return *b;
        type_error(key, "bool", *v);
    }

    std::string str(const std::string& key, std::string cur) {
        const TomlValue* v = find(key);
        if (!v) return cur;
        if (auto* s = std::get_if<std::string>(&v->data)) return *s;
        type_error(key, "string", *v);
    }

    std::vector<int> int_array(const std::string& key, std::vector<int> cur) {
        const TomlValue* v = find(key);
        if (!v) return cur;
        auto* arr = std::get_if<std::vector<TomlValue>>(&v->data);
        if (!arr) type_error(key, "array of integers", *v);
        std::vector<int> out;
        for (const TomlValue& e : *arr) {
            auto* i = std::get_if<std::int64_t>(&e.data);
            if (!i) type_error(key, "array of integers", e);
            out.push_back(static_cast<int>(*i));
        }
        return out;
    }

    std::vector<std::string> str_array(const std::string& key, std::vector<std::string> cur) {
        const TomlValue* v = find(key);
        if (!v) return cur;
        auto* arr = std::get_if<std::vector<TomlValue>>(&v->data);
        if (!arr) type_error(key, "array of strings", *v);
        std::vector<std::string> out;
        for (const TomlValue& e : *arr) {
            auto* s = std::get_if<std::string>(&e.data);
            if (!s) type_error(key, "array of strings", e);
            out.push_back(*s);
        }
        return out;
    }

    std::vector<std::pair<double, double>> intervals(const std::string& key,
                                                     std::vector<std::pair<double, double>> cur) {
        const TomlValue* v = find(key);
        if (!v) return cur;
        auto* arr = std::get_if<std::vector<TomlValue>>(&v->data);
        if (!arr) type_error(key, "array of [lo, hi] pairs", *v);
        std::vector<std::pair<double, double>> out;
        for (const TomlValue& e : *arr) {
            auto* pair = std::get_if<std::vector<TomlValue>>(&e.data);
            if (!pair || pair->size() != 2) type_error(key, "array of [lo, hi] pairs", e);
            double ab[2];
            for (int k = 0; k < 2; ++k) {
                if (auto* d = std::get_if<double>(&(*pair)[k].data))
                    ab[k] = *d;
                else if (auto* i = std::get_if<std::int64_t>(&(*pair)[k].data))
                    ab[k] = static_cast<double>(*i);
                else
                    type_error(key, "array of [lo, hi] pairs", (*pair)[k]);
            }
            out.emplace_back(ab[0], ab[1]);
        }
        return out;
    }

    void done() const {
        if (!sec_) return;
        for (const auto& [key, value] : *sec_)
            if (!used_.count(key)) throw ConfigError("unknown config key '" + name_ + "." + key + "'");
    }

  private:
    const TomlSection* sec_;
    std::string name_;
    std::set<std::string> used_;
};

}  // namespace detail

struct TuneOptions {
    SearchSpace space{{{1e-6, 1e-5}, {1e-5, 1e-4}, {1e-4, 1e-3}, {1e-3, 1e-2}, {1e-2, 1e-1}},
                      50,
                      SearchMode::Grid,
                      0,
                      false};
    std::vector<ActivationKind> activations{ActivationKind::sigmoid(), ActivationKind::tanh(),
                                            ActivationKind::relu(), ActivationKind::elu(),
                                            ActivationKind::gelu()};
    int search_epochs = 10000;
    bool retrain_best = false;
    int retrain_epochs = 50000;
};

struct OutputOptions {
    std::string dir = "out";
};

struct ExperimentConfig {
    TrainConfig train = default_train();
    TuneOptions tune{};
    OutputOptions output{};

    static TrainConfig default_train() {
        TrainConfig t;
        t.spec.sizes = {2, 30, 1};
        t.spec.activations = {ActivationKind::tanh(), ActivationKind::tanh()};
        return t;
    }
};

inline const std::map<std::string, std::set<std::string>>& config_schema() {
    static const std::map<std::string, std::set<std::string>> schema = {
        {"network", {"sizes", "activations", "linear_output"}},
        {"train",
         {"seed", "optimizer", "learning_rate", "epochs_max", "batch_size", "beta1", "beta2", "epsilon",
          "noise", "stddev", "tolerance", "mae_checkpoints", "validation_grid"}},
        {"tune",
         {"intervals", "points_per_interval", "mode", "search_seed", "log_spacing", "search_epochs",
          "activations", "retrain_best", "retrain_epochs"}},
        {"output", {"dir"}},
    };
    return schema;
}

namespace detail {

inline std::vector<ActivationKind> parse_activation_list(const std::string& where,
                                                         const std::vector<std::string>& names) {
    std::vector<ActivationKind> out;
    for (const std::string& n : names) {
        try {
            out.push_back(parse_activation(n));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }
    return out;
}

}  // namespace detail

inline void extract_into(ExperimentConfig& cfg, const TomlDoc& doc) {
    for (const auto& [name, sec] : doc)
        if (!config_schema().count(name)) throw ConfigError("unknown config section [" + name + "]");

    {
        detail::SectionReader r(doc, "network");
        cfg.train.spec.sizes = r.int_array("sizes", cfg.train.spec.sizes);
        std::vector<std::string> cur;  // sentinel: empty means key absent
        auto names = r.str_array("activations", cur);
        if (!names.empty())
            cfg.train.spec.activations = detail::parse_activation_list("network.activations", names);
        cfg.train.spec.linear_output = r.boolean("linear_output", cfg.train.spec.linear_output);
        r.done();
    }
    {
        detail::SectionReader r(doc, "train");
        TrainConfig& t = cfg.train;
        t.seed = r.seed("seed", t.seed);
        std::string opt = r.str("optimizer", t.optimizer == OptimizerKind::Adam ? "adam" : "sgd");
        if (opt == "adam")
            t.optimizer = OptimizerKind::Adam;
        else if (opt == "sgd")
            t.optimizer = OptimizerKind::Sgd;
        else
            throw ConfigError("train.optimizer: expected \"adam\" or \"sgd\", got \"" + opt + "\"");
        t.learning_rate = r.number("learning_rate", t.learning_rate);
        t.epochs_max = r.integer("epochs_max", t.epochs_max);
        t.batch_size = r.integer("batch_size", t.batch_size);
        t.adam.beta1 = r.number("beta1", t.adam.beta1);
        t.adam.beta2 = r.number("beta2", t.adam.beta2);
        t.adam.epsilon = r.number("epsilon", t.adam.epsilon);
        t.noise = r.number("noise", t.noise);
        t.stddev = r.number("stddev", t.stddev);
        t.tolerance = r.number("tolerance", t.tolerance);
        t.mae_checkpoints = r.int_array("mae_checkpoints", t.mae_checkpoints);
        t.validation_grid_n = r.integer("validation_grid", t.validation_grid_n);
        r.done();
    }
    {
        detail::SectionReader r(doc, "tune");
        TuneOptions& u = cfg.tune;
        u.space.intervals = r.intervals("intervals", u.space.intervals);
        u.space.points_per_interval = r.integer("points_per_interval", u.space.points_per_interval);
        std::string mode = r.str("mode", u.space.mode == SearchMode::Grid ? "grid" : "random");
        if (mode == "grid")
            u.space.mode = SearchMode::Grid;
        else if (mode == "random")
            u.space.mode = SearchMode::Random;
        else
            throw ConfigError("tune.mode: expected \"grid\" or \"random\", got \"" + mode + "\"");
        u.space.seed = r.seed("search_seed", u.space.seed);
        u.space.log_spacing = r.boolean("log_spacing", u.space.log_spacing);
        u.search_epochs = r.integer("search_epochs", u.search_epochs);
        std::vector<std::string> cur;
        auto names = r.str_array("activations", cur);
        if (!names.empty()) u.activations = detail::parse_activation_list("tune.activations", names);
        u.retrain_best = r.boolean("retrain_best", u.retrain_best);
        u.retrain_epochs = r.integer("retrain_epochs", u.retrain_epochs);
        r.done();
    }
    {
        detail::SectionReader r(doc, "output");
        cfg.output.dir = r.str("dir", cfg.output.dir);
        r.done();
    }
}

// Re-broadcasts a uniform activation list after sizes change.
inline void finalize_config(ExperimentConfig& cfg) {
    auto& spec = cfg.train.spec;
    if (spec.sizes.size() < 2) return;
    const std::size_t need = spec.sizes.size() - 1;
    if (spec.activations.size() == need || spec.activations.empty()) return;
    bool uniform = true;
    for (const auto& a : spec.activations)
        if (!(a == spec.activations.front())) uniform = false;
    if (uniform) spec.activations.assign(need, spec.activations.front());
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    ExperimentConfig cfg;
    extract_into(cfg, parse_toml(ss.str()));
    finalize_config(cfg);
    return cfg;
}

// "train.seed=7" or just "seed=7" when the key names exactly one section.
inline void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must look like key=value: '" + assignment + "'");
    std::string key = detail::trim(assignment.substr(0, eq));
    std::string val = detail::trim(assignment.substr(eq + 1));

    std::string section, bare;
    if (auto dot = key.find('.'); dot != std::string::npos) {
        section = key.substr(0, dot);
        bare = key.substr(dot + 1);
    } else {
        bare = key;
        std::vector<std::string> hits;
        for (const auto& [sec, keys] : config_schema())
            if (keys.count(bare)) hits.push_back(sec);
        if (hits.empty()) throw ConfigError("unknown config key '" + bare + "'");
        if (hits.size() > 1) {
            std::string msg = "ambiguous config key '" + bare + "', qualify as";
            for (const auto& h : hits) msg += " " + h + "." + bare;
            throw ConfigError(msg);
        }
        section = hits[0];
    }

    TomlValue v;
    try {
        std::size_t i = 0;
        v = detail::parse_value(val, i, 0);
        detail::skip_ws(val, i);
        if (i != val.size()) v.data = val;  // e.g. unquoted string with spaces
    } catch (const ConfigError&) {
        v.data = val;  // unquoted bare string
    }
    TomlDoc doc;
    doc[section].emplace(bare, std::move(v));
    extract_into(cfg, doc);
    finalize_config(cfg);
}

inline nlohmann::json config_echo(const ExperimentConfig& cfg) {
    const TrainConfig& t = cfg.train;
    const TuneOptions& u = cfg.tune;
    nlohmann::json intervals = nlohmann::json::array();
    for (auto [a, b] : u.space.intervals) intervals.push_back({a, b});
    nlohmann::json tune_acts = nlohmann::json::array();
    for (const auto& a : u.activations) tune_acts.push_back(activation_name(a));
    return {
        {"network", spec_to_json(t.spec)},
        {"train",
         {{"seed", t.seed},
          {"optimizer", t.optimizer == OptimizerKind::Adam ? "adam" : "sgd"},
          {"learning_rate", t.learning_rate},
          {"epochs_max", t.epochs_max},
          {"batch_size", t.batch_size},
          {"beta1", t.adam.beta1},
          {"beta2", t.adam.beta2},
          {"epsilon", t.adam.epsilon},
          {"noise", t.noise},
          {"stddev", t.stddev},
          {"tolerance", t.tolerance},
          {"mae_checkpoints", t.mae_checkpoints},
          {"validation_grid", t.validation_grid_n}}},
        {"tune",
         {{"intervals", intervals},
          {"points_per_interval", u.space.points_per_interval},
          {"mode", u.space.mode == SearchMode::Grid ? "grid" : "random"},
          {"search_seed", u.space.seed},
          {"log_spacing", u.space.log_spacing},
          {"search_epochs", u.search_epochs},
          {"activations", tune_acts},
          {"retrain_best", u.retrain_best},
          {"retrain_epochs", u.retrain_epochs}}},
        {"output", {{"dir", cfg.output.dir}}},
    };
}

}  // namespace pinnlab
