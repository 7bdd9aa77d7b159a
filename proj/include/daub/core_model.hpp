// core_model.hpp
//
// Domain types for cost-sensitive training data allocation: run parameters,
// per-allocation samples, allocation sequences, and the cost/regret
// accounting used to judge a finished run.
#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace daub {

using LearnerId = std::size_t;
using SampleCount = std::int64_t;

inline bool is_finite(double x) { return std::isfinite(x); }

struct DaubConfig {
    double r = 2.0;          // geometric ratio
    SampleCount b = 100;     // first allocation size
    SampleCount N = 10000;   // full training set size
    double delta = 0.01;     // suboptimality gap
    SampleCount s = 1;       // derivative step for exact-mode bounds
    // Explicit allocation sizes. Empty means the geometric schedule.
    std::vector<SampleCount> sizes;

    // Cost overhead constant achieved on the selected learner.
    double d_factor() const { return r / (r - 1.0); }

    void validate() const {
        if (!is_finite(r) || !(r > 1.0))
            throw ConfigError("r must be > 1");
        if (b < 1) throw ConfigError("b must be >= 1");
        if (N < 1) throw ConfigError("N must be >= 1");
        if (static_cast<double>(b) * r * r > static_cast<double>(N))
            throw ConfigError("b*r^2 <= N violated (b=" + std::to_string(b) +
                              ", N=" + std::to_string(N) + ")");
        if (!is_finite(delta) || !(delta > 0.0) || delta > 1.0)
            throw ConfigError("delta must lie in (0, 1]");
        if (s < 1) throw ConfigError("s must be >= 1");
        if (!sizes.empty()) {
            if (sizes.size() < 3)
                throw ConfigError("explicit sizes need at least three entries");
            if (sizes.front() < 1)
                throw ConfigError("explicit sizes must be positive");
            for (std::size_t k = 1; k < sizes.size(); ++k)
                if (sizes[k] <= sizes[k - 1])
                    throw ConfigError("explicit sizes must be strictly increasing");
            if (sizes.back() != N)
                throw ConfigError("explicit sizes must end at N");
        }
    }

    bool operator==(const DaubConfig&) const = default;
};

struct CurveSample {
    SampleCount n = 0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double cost = 0.0;

    double error() const { return 1.0 - val_acc; }

    // Rejects NaN/inf and out-of-range values at ingestion.
    void validate() const {
        if (n < 1) throw DomainError("sample n must be positive");
        if (!is_finite(train_acc) || train_acc < 0.0 || train_acc > 1.0)
            throw DomainError("train_acc outside [0,1]");
        if (!is_finite(val_acc) || val_acc < 0.0 || val_acc > 1.0)
            throw DomainError("val_acc outside [0,1]");
        if (!is_finite(cost) || cost < 0.0)
            throw DomainError("cost must be finite and nonnegative");
    }

    bool operator==(const CurveSample&) const = default;
};

struct LearnerState {
    LearnerId id = 0;
    std::map<SampleCount, CurveSample> history;  // repaired values
    SampleCount n_current = 0;
    double u_current = std::numeric_limits<double>::infinity();
    bool active = true;
    std::vector<double> bounds;  // every bound emitted, in order
};

struct Allocation {
    LearnerId learner = 0;
    SampleCount n = 0;
    bool operator==(const Allocation&) const = default;
};

class AllocationSequence {
public:
    AllocationSequence() = default;
    explicit AllocationSequence(const std::vector<Allocation>& entries) {
        for (const auto& a : entries) append(a.learner, a.n);
    }

    // Enforces strictly increasing n within each induced subsequence.
    void append(LearnerId learner, SampleCount n) {
        if (n < 1) throw DomainError("allocation size must be positive");
        auto it = last_n_.find(learner);
        if (it != last_n_.end() && n <= it->second)
            throw DomainError("induced subsequence must be strictly increasing");
        entries_.push_back({learner, n});
        last_n_[learner] = n;
    }

    const std::vector<Allocation>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    std::vector<SampleCount> induced(LearnerId learner) const {
        std::vector<SampleCount> out;
        for (const auto& a : entries_)
            if (a.learner == learner) out.push_back(a.n);
        return out;
    }

    SampleCount total_allocated(LearnerId learner) const {
        SampleCount total = 0;
        for (const auto& a : entries_)
            if (a.learner == learner) total += a.n;
        return total;
    }

    SampleCount total_allocated() const {
        SampleCount total = 0;
        for (const auto& a : entries_) total += a.n;
        return total;
    }

    bool contains(LearnerId learner, SampleCount n) const {
        return std::any_of(entries_.begin(), entries_.end(), [&](const Allocation& a) {
            return a.learner == learner && a.n == n;
        });
    }

    std::set<LearnerId> learners() const {
        std::set<LearnerId> out;
        for (const auto& a : entries_) out.insert(a.learner);
        return out;
    }

    bool operator==(const AllocationSequence& o) const { return entries_ == o.entries_; }

private:
    std::vector<Allocation> entries_;
    std::map<LearnerId, SampleCount> last_n_;
};

// One trained allocation as it appears in a trace.
struct AllocationRecord {
    std::size_t iter = 0;
    LearnerId learner = 0;
    SampleCount n = 0;
    double train_acc = 0.0;
    double val_acc = 0.0;  // as observed, before repair
    std::optional<double> bound;
    double cost = 0.0;
    bool operator==(const AllocationRecord&) const = default;
};

struct FailureRecord {
    LearnerId learner = 0;
    SampleCount n = 0;
    std::string message;
    bool operator==(const FailureRecord&) const = default;
};

struct RunReport {
    std::string mode;
    std::vector<std::string> learner_names;
    LearnerId selected = 0;
    double selected_val_acc = 0.0;  // observed validation accuracy at N
    AllocationSequence sequence;
    std::vector<AllocationRecord> records;
    std::map<LearnerId, double> per_learner_cost;
    double total_cost = 0.0;
    double selected_cost = 0.0;
    std::optional<double> regret;  // only with oracle accuracies
    std::optional<double> loss;    // oracle f* - f_selected(N)
    std::vector<FailureRecord> failures;

    std::size_t iterations() const { return sequence.size(); }
    SampleCount total_allocation() const { return sequence.total_allocated(); }
    std::size_t learner_count() const { return learner_names.size(); }

    bool operator==(const RunReport&) const = default;
};

// Cost of training `learner` on `n` examples, or nullopt when unknown.
using CostFunction = std::function<std::optional<double>(LearnerId, SampleCount)>;

struct CostBreakdown {
    double total = 0.0;
    std::map<LearnerId, double> per_learner;
};

inline CostBreakdown cost_breakdown(const AllocationSequence& seq, const CostFunction& costs) {
    CostBreakdown out;
    for (const auto& a : seq.entries()) {
        auto c = costs(a.learner, a.n);
        if (!c)
            throw IncompleteCostError("no cost for learner " + std::to_string(a.learner) +
                                      " at n=" + std::to_string(a.n));
        out.total += *c;
        out.per_learner[a.learner] += *c;
    }
    return out;
}

inline double cost_of_sequence(const AllocationSequence& seq, const CostFunction& costs) {
    return cost_breakdown(seq, costs).total;
}

// Costs as recorded in a run's trace.
inline CostFunction recorded_costs(const RunReport& report) {
    std::map<std::pair<LearnerId, SampleCount>, double> table;
    for (const auto& rec : report.records) table[{rec.learner, rec.n}] = rec.cost;
    return [table = std::move(table)](LearnerId i, SampleCount n) -> std::optional<double> {
        auto it = table.find({i, n});
        if (it == table.end()) return std::nullopt;
        return it->second;
    };
}

// Learners whose accuracy trails the maximum by at least delta. All learners
// attaining the maximum are optimal.
inline std::set<LearnerId> classify_suboptimal(const std::map<LearnerId, double>& accuracies,
                                               double delta) {
    if (accuracies.empty()) throw DomainError("classify_suboptimal: no accuracies");
    if (!(delta > 0.0) || delta > 1.0) throw DomainError("delta must lie in (0, 1]");
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& [id, f] : accuracies) {
        if (!is_finite(f)) throw DomainError("non-finite accuracy");
        best = std::max(best, f);
    }
    std::set<LearnerId> out;
    for (const auto& [id, f] : accuracies)
        if (best - f >= delta) out.insert(id);
    return out;
}

inline double regret(const AllocationSequence& seq, const CostFunction& costs,
                     const std::set<LearnerId>& suboptimal) {
    double total = 0.0;
    for (const auto& a : seq.entries()) {
        if (!suboptimal.contains(a.learner)) continue;
        auto c = costs(a.learner, a.n);
        if (!c)
            throw IncompleteCostError("no cost for learner " + std::to_string(a.learner) +
                                      " at n=" + std::to_string(a.n));
        total += *c;
    }
    return total;
}

struct SolutionVerdict {
    bool contains_selected_at_N = false;
    std::optional<bool> selected_optimal;  // needs oracle accuracies
    bool cost_within_d = false;
    double selected_cost = 0.0;
    double d_bound = 0.0;  // d_factor * c_selected(N)

    std::vector<std::string> failed() const {
        std::vector<std::string> out;
        if (!contains_selected_at_N) out.push_back("sequence lacks (selected, N)");
        if (selected_optimal && !*selected_optimal) out.push_back("selected learner is (N,delta)-suboptimal");
        if (!cost_within_d) out.push_back("cost(S_selected) exceeds d * c_selected(N)");
        return out;
    }
    bool ok() const { return failed().empty(); }
};

// Checks the finite-N conditions of a solution: (selected, N) present, the
// selected learner (N,delta)-optimal under the oracle, and
// cost(S_selected) <= r/(r-1) * c_selected(N).
inline SolutionVerdict validate_solution(const RunReport& report, const DaubConfig& config,
                                         const std::optional<std::map<LearnerId, double>>& oracle_accuracies = std::nullopt,
                                         const CostFunction& costs = nullptr) {
    SolutionVerdict v;
    const CostFunction cost_fn = costs ? costs : recorded_costs(report);
    v.contains_selected_at_N = report.sequence.contains(report.selected, config.N);
    if (oracle_accuracies) {
        auto sub = classify_suboptimal(*oracle_accuracies, config.delta);
        v.selected_optimal = !sub.contains(report.selected);
    }
    double selected_cost = 0.0;
    bool complete = true;
    for (auto n : report.sequence.induced(report.selected)) {
        auto c = cost_fn(report.selected, n);
        if (!c) { complete = false; break; }
        selected_cost += *c;
    }
    auto full = cost_fn(report.selected, config.N);
    v.selected_cost = selected_cost;
    if (complete && full) {
        v.d_bound = config.d_factor() * *full;
        v.cost_within_d = selected_cost <= v.d_bound * (1.0 + 1e-12);
    }
    return v;
}

}  // namespace daub
