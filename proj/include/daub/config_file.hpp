// config_file.hpp
//
// JSON run configuration: run parameters, a learner source (synthetic specs,
// replay manifest, or an external worker), mode, seed, and output location.
//
//   {
//     "mode": "daub",            // daub | daub_star | full | fixed_fraction |
//                                // elimination | verify | trend
//     "seed": 1,
//     "config": {"r": 2, "b": 100, "N": 12800, "delta": 0.01, "s": 1,
//                "sizes": [ ... ]},          // sizes optional
//     "learners": [ {"name": "a", "family": "inverse", "asymptote": 0.9,
//                    "scale": 100, ...}, ... ],
//     "replay_manifest": "replay/manifest.csv",
//     "worker": {"command": ["python3", "worker.py"], "learners": ["x"],
//                "timeout_seconds": 60},
//     "fixed_fraction_n": 500,
//     "trend_grid": [1000, 10000, 100000],
//     "output": {"dir": "out"}
//   }
//
// Exactly one of "learners", "replay_manifest", "worker" must be present.
// Relative paths resolve against the config file's directory.
#pragma once
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "core_model.hpp"
#include "external_learner.hpp"
#include "learners.hpp"

namespace daub {

enum class RunMode { daub, daub_star, full, fixed_fraction, elimination, verify, trend };

inline RunMode parse_mode(const std::string& s) {
    if (s == "daub") return RunMode::daub;
    if (s == "daub_star") return RunMode::daub_star;
    if (s == "full") return RunMode::full;
    if (s == "fixed_fraction") return RunMode::fixed_fraction;
    if (s == "elimination") return RunMode::elimination;
    if (s == "verify") return RunMode::verify;
    if (s == "trend") return RunMode::trend;
    throw ConfigError("unknown mode '" + s + "'");
}

struct NamedSpec {
    std::string name;
    SyntheticCurveSpec spec;
};

struct WorkerConfig {
    std::vector<std::string> command;
    std::vector<std::string> learners;
    double timeout_seconds = 60.0;
};

struct RunConfigFile {
    RunMode mode = RunMode::daub;
    std::uint64_t seed = 0;
    DaubConfig config;
    std::vector<NamedSpec> synthetic;
    std::optional<std::filesystem::path> replay_manifest;
    std::optional<WorkerConfig> worker;
    std::optional<SampleCount> fixed_fraction_n;
    std::vector<SampleCount> trend_grid;
    std::filesystem::path output_dir = ".";
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.contains(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

inline SyntheticCurveSpec parse_spec(const nlohmann::json& j) {
    reject_unknown(j, {"name", "family", "asymptote", "scale", "exponent", "rise", "noise_sigma", "cost_exponent",
                       "cost_scale", "overfit_margin"},
                   "learner");
    SyntheticCurveSpec s;
    s.family = parse_family(j.at("family").get<std::string>());
    s.asymptote = j.value("asymptote", s.asymptote);
    s.scale = j.value("scale", s.scale);
    s.exponent = j.value("exponent", s.exponent);
    s.rise = j.value("rise", s.rise);
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    s.cost_exponent = j.value("cost_exponent", s.cost_exponent);
    s.cost_scale = j.value("cost_scale", s.cost_scale);
    s.overfit_margin = j.value("overfit_margin", s.overfit_margin);
    s.validate();
    return s;
}

}  // namespace detail

inline RunConfigFile parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    RunConfigFile out;
    try {
        if (!j.is_object()) throw ConfigError("config must be a JSON object");
        detail::reject_unknown(j, {"mode", "seed", "config", "learners", "replay_manifest", "worker",
                                   "fixed_fraction_n", "trend_grid", "output"},
                               "config file");
        out.mode = parse_mode(j.value("mode", std::string("daub")));
        out.seed = j.value("seed", std::uint64_t{0});
        const auto& c = j.at("config");
        detail::reject_unknown(c, {"r", "b", "N", "delta", "s", "sizes"}, "config");
        out.config.r = c.at("r").get<double>();
        out.config.b = c.at("b").get<SampleCount>();
        out.config.N = c.at("N").get<SampleCount>();
        out.config.delta = c.value("delta", out.config.delta);
        out.config.s = c.value("s", out.config.s);
        if (c.contains("sizes")) out.config.sizes = c.at("sizes").get<std::vector<SampleCount>>();
        if (out.mode != RunMode::trend) out.config.validate();

        int sources = 0;
        if (j.contains("learners")) {
            ++sources;
            std::set<std::string> seen;
            for (const auto& l : j.at("learners")) {
                NamedSpec ns{l.at("name").get<std::string>(), detail::parse_spec(l)};
                if (!seen.insert(ns.name).second) throw ConfigError("duplicate learner name '" + ns.name + "'");
                out.synthetic.push_back(ns);
            }
            if (out.synthetic.empty()) throw ConfigError("learner list is empty");
        }
        if (j.contains("replay_manifest")) {
            ++sources;
            std::filesystem::path p = j.at("replay_manifest").get<std::string>();
            if (p.is_relative()) p = base_dir / p;
            if (!std::filesystem::exists(p)) throw ConfigError("replay manifest not found: " + p.string());
            out.replay_manifest = p;
        }
        if (j.contains("worker")) {
            ++sources;
            const auto& w = j.at("worker");
            detail::reject_unknown(w, {"command", "learners", "timeout_seconds"}, "worker");
            WorkerConfig wc;
            wc.command = w.at("command").get<std::vector<std::string>>();
            if (wc.command.empty()) throw ConfigError("worker command is empty");
            wc.learners = w.value("learners", std::vector<std::string>{});
            wc.timeout_seconds = w.value("timeout_seconds", wc.timeout_seconds);
            out.worker = wc;
        }
        if (sources != 1) throw ConfigError("exactly one of learners, replay_manifest, worker is required");
        if ((out.mode == RunMode::daub_star || out.mode == RunMode::verify || out.mode == RunMode::trend) &&
            out.synthetic.empty())
            throw ConfigError("exact-mode runs need synthetic learners");

        if (j.contains("fixed_fraction_n")) out.fixed_fraction_n = j.at("fixed_fraction_n").get<SampleCount>();
        if (out.mode == RunMode::fixed_fraction && !out.fixed_fraction_n)
            throw ConfigError("fixed_fraction mode needs fixed_fraction_n");
        if (j.contains("trend_grid")) out.trend_grid = j.at("trend_grid").get<std::vector<SampleCount>>();
        if (out.mode == RunMode::trend && out.trend_grid.size() < 2)
            throw ConfigError("trend mode needs a trend_grid with at least two sizes");
        if (j.contains("output")) {
            detail::reject_unknown(j.at("output"), {"dir"}, "output");
            std::filesystem::path d = j.at("output").value("dir", std::string("."));
            out.output_dir = d.is_relative() ? base_dir / d : d;
        } else {
            out.output_dir = base_dir;
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return out;
}

inline RunConfigFile load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return parse_run_config(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

inline LearnerPool build_pool(const RunConfigFile& cfg, bool exact = false) {
    LearnerPool pool;
    if (!cfg.synthetic.empty()) {
        for (const auto& ns : cfg.synthetic) pool.push_back(std::make_unique<SyntheticLearner>(ns.name, ns.spec, exact));
    } else if (cfg.replay_manifest) {
        for (const auto& e : load_replay_manifest(*cfg.replay_manifest))
            pool.push_back(std::make_unique<ReplayLearner>(e.name, load_replay_csv(e.path)));
    } else if (cfg.worker) {
        const auto timeout = std::chrono::milliseconds(static_cast<long long>(cfg.worker->timeout_seconds * 1000.0));
        pool = connect_worker(cfg.worker->command, cfg.worker->learners, timeout);
    }
    return pool;
}

}  // namespace daub
