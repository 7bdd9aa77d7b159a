// reporting.hpp
//
// JSONL traces, CSV summaries, and the full-vs-DAUB comparison tables.
#pragma once
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "core_model.hpp"
#include "idealized_analysis.hpp"

namespace daub {

// ---------------------------------------------------------------------------
// JSONL trace: one "allocation" record per trained allocation, one
// "failure" record per failed training call, and a closing "summary".

inline nlohmann::json allocation_json(const RunReport& rep, const AllocationRecord& rec) {
    nlohmann::json j{{"type", "allocation"},
                     {"iter", rec.iter},
                     {"learner", rep.learner_names.at(rec.learner)},
                     {"learner_index", rec.learner},
                     {"n", rec.n},
                     {"train_acc", rec.train_acc},
                     {"val_acc", rec.val_acc},
                     {"bound", nullptr},
                     {"cost", rec.cost}};
    if (rec.bound) j["bound"] = *rec.bound;
    return j;
}

inline void write_trace(std::ostream& out, const RunReport& rep) {
    for (const auto& rec : rep.records) out << allocation_json(rep, rec).dump() << '\n';
    for (const auto& f : rep.failures) {
        out << nlohmann::json{{"type", "failure"},
                              {"learner", rep.learner_names.at(f.learner)},
                              {"learner_index", f.learner},
                              {"n", f.n},
                              {"message", f.message}}
                   .dump()
            << '\n';
    }
    nlohmann::json s{{"type", "summary"},
                     {"mode", rep.mode},
                     {"learners", rep.learner_names},
                     {"selected", rep.learner_names.at(rep.selected)},
                     {"selected_index", rep.selected},
                     {"selected_val_acc", rep.selected_val_acc},
                     {"iterations", rep.iterations()},
                     {"allocation", rep.total_allocation()},
                     {"total_cost", rep.total_cost},
                     {"selected_cost", rep.selected_cost},
                     {"regret", nullptr},
                     {"loss", nullptr}};
    if (rep.regret) s["regret"] = *rep.regret;
    if (rep.loss) s["loss"] = *rep.loss;
    out << s.dump() << '\n';
}

inline void write_verdicts(std::ostream& out, const std::vector<Verdict>& verdicts, const std::string& suite) {
    for (const auto& v : verdicts) {
        nlohmann::json j{{"type", "verdict"},
                         {"suite", suite},
                         {"check", v.check},
                         {"learner_index", nullptr},
                         {"result", v.passed ? "pass" : "fail"},
                         {"detail", v.detail}};
        if (v.learner) j["learner_index"] = *v.learner;
        out << j.dump() << '\n';
    }
}

// Rebuilds a RunReport from its trace. Verdict records are skipped.
inline RunReport read_trace(std::istream& in) {
    RunReport rep;
    bool have_summary = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
            const auto type = j.at("type").get<std::string>();
            if (type == "allocation") {
                AllocationRecord rec;
                rec.iter = j.at("iter").get<std::size_t>();
                rec.learner = j.at("learner_index").get<LearnerId>();
                rec.n = j.at("n").get<SampleCount>();
                rec.train_acc = j.at("train_acc").get<double>();
                rec.val_acc = j.at("val_acc").get<double>();
                if (!j.at("bound").is_null()) rec.bound = j.at("bound").get<double>();
                rec.cost = j.at("cost").get<double>();
                rep.sequence.append(rec.learner, rec.n);
                rep.per_learner_cost[rec.learner] += rec.cost;
                rep.total_cost += rec.cost;
                rep.records.push_back(rec);
            } else if (type == "failure") {
                rep.failures.push_back({j.at("learner_index").get<LearnerId>(), j.at("n").get<SampleCount>(),
                                        j.at("message").get<std::string>()});
            } else if (type == "summary") {
                have_summary = true;
                rep.mode = j.at("mode").get<std::string>();
                rep.learner_names = j.at("learners").get<std::vector<std::string>>();
                rep.selected = j.at("selected_index").get<LearnerId>();
                rep.selected_val_acc = j.at("selected_val_acc").get<double>();
                rep.selected_cost = j.at("selected_cost").get<double>();
                if (!j.at("regret").is_null()) rep.regret = j.at("regret").get<double>();
                if (!j.at("loss").is_null()) rep.loss = j.at("loss").get<double>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("trace line " + std::to_string(lineno) + ": " + e.what());
        } catch (const DomainError& e) {
            throw ConfigError("trace line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!have_summary) throw ConfigError("trace has no summary record");
    if (rep.selected >= rep.learner_names.size()) throw ConfigError("trace summary names an unknown learner");
    return rep;
}

// ---------------------------------------------------------------------------
// CSV summary: one row per run.

inline const char* kSummaryHeader = "mode,learners,iterations,allocation,time,selected,selected_val_acc,regret,loss";

// Shortest text that reads back to the same double.
inline std::string csv_number(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline void write_summary_csv(std::ostream& out, const RunReport& rep) {
    out << kSummaryHeader << '\n';
    out << rep.mode << ',' << rep.learner_count() << ',' << rep.iterations() << ',' << rep.total_allocation() << ','
        << csv_number(rep.total_cost) << ',' << rep.learner_names.at(rep.selected) << ','
        << csv_number(rep.selected_val_acc) << ',' << (rep.regret ? csv_number(*rep.regret) : "") << ','
        << (rep.loss ? csv_number(*rep.loss) : "") << '\n';
}

// ---------------------------------------------------------------------------
// Comparison tables

// Integer "25x" from 10 up, one decimal ("6.7x") below.
inline std::string format_speedup(double full_time, double daub_time) {
    if (!(daub_time > 0.0)) return "n/a";
    const double ratio = full_time / daub_time;
    char buf[64];
    if (std::round(ratio * 10.0) / 10.0 >= 10.0)
        std::snprintf(buf, sizeof buf, "%.0fx", std::round(ratio));
    else
        std::snprintf(buf, sizeof buf, "%.1fx", ratio);
    return buf;
}

// Accuracy given up by the cheaper strategy, as a non-negative percentage.
inline std::string format_loss(double f_best, double f_selected) {
    double pct = std::max(0.0, f_best - f_selected) * 100.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f%%", pct + 0.0);
    return buf;
}

inline std::string with_commas(long long v) {
    std::string s = std::to_string(v < 0 ? -v : v);
    for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) s.insert(static_cast<std::size_t>(i), ",");
    return v < 0 ? "-" + s : s;
}

struct RunSummary {
    std::size_t iterations = 0;
    SampleCount allocation = 0;
    double time = 0.0;
    double selected_accuracy = 0.0;

    static RunSummary of(const RunReport& r) {
        return {r.iterations(), r.total_allocation(), r.total_cost, r.selected_val_acc};
    }
};

struct Comparison {
    RunSummary full;
    RunSummary daub;
    std::string speedup;
    std::string loss;
};

inline Comparison compare(const RunSummary& full, const RunSummary& daub) {
    return {full, daub, format_speedup(full.time, daub.time), format_loss(full.selected_accuracy, daub.selected_accuracy)};
}

inline SampleCount largest_n(const RunReport& r) {
    SampleCount m = 0;
    for (const auto& a : r.sequence.entries()) m = std::max(m, a.n);
    return m;
}

// Both reports must cover the same learner pool and N.
inline Comparison compare_reports(const RunReport& daub, const RunReport& full) {
    if (daub.learner_names != full.learner_names)
        throw ConfigError("comparison needs the same learner pool in both reports");
    if (largest_n(daub) != largest_n(full)) throw ConfigError("comparison needs the same N in both reports");
    return compare(RunSummary::of(full), RunSummary::of(daub));
}

inline std::string fmt_time(double t) {
    if (std::abs(t) >= 100.0 && std::abs(t) < 9e15) return with_commas(std::llround(t));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", t);
    return buf;
}

inline void print_comparison(std::ostream& out, const Comparison& c) {
    char line[160];
    std::snprintf(line, sizeof line, "%-12s | %14s | %14s\n", "", "Full", "DAUB");
    out << line;
    std::snprintf(line, sizeof line, "%-12s | %14s | %14s\n", "Iterations", with_commas(static_cast<long long>(c.full.iterations)).c_str(),
                  with_commas(static_cast<long long>(c.daub.iterations)).c_str());
    out << line;
    std::snprintf(line, sizeof line, "%-12s | %14s | %14s\n", "Allocation", with_commas(c.full.allocation).c_str(),
                  with_commas(c.daub.allocation).c_str());
    out << line;
    std::snprintf(line, sizeof line, "%-12s | %14s | %14s\n", "Time", fmt_time(c.full.time).c_str(),
                  fmt_time(c.daub.time).c_str());
    out << line;
    out << "Speedup: " << c.speedup << '\n';
    out << "Loss: " << c.loss << '\n';
}

// Mean speedup and mean loss over several benchmarks.
inline void print_means(std::ostream& out, const std::vector<Comparison>& all) {
    double speedup = 0.0, loss = 0.0;
    std::size_t with_time = 0;
    for (const auto& c : all) {
        if (c.daub.time > 0.0) {
            speedup += c.full.time / c.daub.time;
            ++with_time;
        }
        loss += std::max(0.0, c.full.selected_accuracy - c.daub.selected_accuracy);
    }
    out << "Mean speedup: " << (with_time ? format_speedup(speedup / with_time, 1.0) : "n/a") << '\n';
    out << "Mean loss: " << format_loss(loss / all.size(), 0.0) << '\n';
}

struct AblationTable {
    RunSummary without_ft;
    RunSummary with_ft;
};

inline void print_ablation(std::ostream& out, const AblationTable& t) {
    char line[160];
    std::snprintf(line, sizeof line, "%-12s | %14s | %14s\n", "", "no f^T", "DAUB");
    out << line;
    std::snprintf(line, sizeof line, "%-12s | %14s | %14s\n", "Iterations",
                  with_commas(static_cast<long long>(t.without_ft.iterations)).c_str(),
                  with_commas(static_cast<long long>(t.with_ft.iterations)).c_str());
    out << line;
    std::snprintf(line, sizeof line, "%-12s | %14s | %14s\n", "Allocation", with_commas(t.without_ft.allocation).c_str(),
                  with_commas(t.with_ft.allocation).c_str());
    out << line;
    std::snprintf(line, sizeof line, "%-12s | %14s | %14s\n", "Time", fmt_time(t.without_ft.time).c_str(),
                  fmt_time(t.with_ft.time).c_str());
    out << line;
}

inline void write_trend_csv(std::ostream& out, const std::vector<TrendRow>& rows) {
    out << "N,regret,m_cost_selected,ratio,selected\n";
    for (const auto& r : rows)
        out << r.N << ',' << csv_number(r.regret) << ',' << csv_number(r.m_cost_selected) << ',' << csv_number(r.ratio)
            << ',' << r.selected << '\n';
}

}  // namespace daub
