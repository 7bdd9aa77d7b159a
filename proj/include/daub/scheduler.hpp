// scheduler.hpp
//
// The upper-bound allocation loop and the baseline strategies it is compared
// against (full training, fixed fraction, round-synchronous elimination).
#pragma once
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bound_estimator.hpp"
#include "core_model.hpp"
#include "learners.hpp"

namespace daub {

// Geometric allocation sizes b, ceil(r*b), ... capped at N, ending at N.
inline std::vector<SampleCount> schedule_sizes(SampleCount b, double r, SampleCount N) {
    DaubConfig probe;
    probe.b = b;
    probe.r = r;
    probe.N = N;
    probe.validate();
    std::vector<SampleCount> out{b};
    while (out.back() < N) {
        const double next = r * static_cast<double>(out.back());
        // r*n within rounding of an integer counts as that integer
        const double nearest = std::round(next);
        SampleCount step = std::abs(next - nearest) <= 1e-9 * next ? static_cast<SampleCount>(nearest)
                                                                  : static_cast<SampleCount>(std::ceil(next));
        out.push_back(std::min(step, N));
    }
    if (out.size() < 3) throw ConfigError("schedule has fewer than three distinct sizes");
    return out;
}

inline std::vector<SampleCount> schedule_sizes(const DaubConfig& config) {
    config.validate();
    if (!config.sizes.empty()) return config.sizes;
    return schedule_sizes(config.b, config.r, config.N);
}

// Size following `n` on the schedule (N when n is past the last entry).
inline SampleCount next_size(const std::vector<SampleCount>& sizes, SampleCount n) {
    auto it = std::upper_bound(sizes.begin(), sizes.end(), n);
    return it == sizes.end() ? sizes.back() : *it;
}

// Exact-mode bounds: the true curve and a fixed derivative step replace the
// regression slope over observed points.
struct IdealBounds {
    std::vector<std::function<double(SampleCount)>> accuracy;  // per learner
    SampleCount step = 1;
};

struct RunOptions {
    std::uint64_t seed = 0;
    bool use_train_bound = true;  // false: projected bound alone
    std::optional<IdealBounds> ideal;
};

struct ScheduleState {
    std::vector<LearnerState> states;
    AllocationSequence sequence;
    std::vector<AllocationRecord> records;
    std::vector<FailureRecord> failures;
    DaubConfig config;
    std::vector<SampleCount> sizes;
    std::uint64_t rng_seed = 0;

    ScheduleState() = default;
    ScheduleState(std::size_t learners, const DaubConfig& cfg, std::uint64_t seed)
        : config(cfg), sizes(schedule_sizes(cfg)), rng_seed(seed) {
        for (std::size_t i = 0; i < learners; ++i) states.push_back(LearnerState{i, {}, 0, kNoBound, true, {}});
    }
};

namespace detail {

inline double bound_for(const ScheduleState& state, const RunOptions& opts, LearnerId id) {
    const auto& ls = state.states[id];
    const auto& h = ls.history;
    auto it = h.rbegin();
    const CurveSample& cur = it->second;
    const SampleCount n = cur.n;
    const SampleCount N = state.config.N;
    double projected;
    if (opts.ideal) {
        const auto& f = opts.ideal->accuracy.at(id);
        projected = projected_bound(f(n), ideal_derivative(f, n, opts.ideal->step), n, N);
    } else {
        std::array<CurvePoint, 3> pts;
        for (int k = 2; k >= 0; --k, ++it) pts[static_cast<std::size_t>(k)] = {it->first, it->second.val_acc};
        projected = projected_bound(cur.val_acc, regression_slope(pts), n, N);
    }
    const double combined = opts.use_train_bound ? combined_bound(cur.train_acc, projected) : projected;
    return clamp_nonincreasing(ls.u_current, clamp01(combined));
}

}  // namespace detail

// Trains `id` on `n` examples, records the allocation, repairs the newest
// pair of validation accuracies, and refreshes the learner's bound once three
// points exist. Returns false when the learner failed (it is deactivated).
inline bool train_learner(ScheduleState& state, LearnerPool& pool, const RunOptions& opts, LearnerId id,
                          SampleCount n, bool update_bound = true) {
    auto& ls = state.states[id];
    CurveSample sample;
    try {
        sample = pool[id]->train_eval(n, allocation_seed(state.rng_seed, id, n));
        if (sample.n != n) throw LearnerFailure("learner returned a sample for a different n");
        sample.validate();
    } catch (const LearnerFailure& e) {
        ls.active = false;
        state.failures.push_back({id, n, e.what()});
        return false;
    } catch (const DomainError& e) {
        ls.active = false;
        state.failures.push_back({id, n, e.what()});
        return false;
    }
    state.sequence.append(id, n);
    AllocationRecord rec{state.records.size(), id, n, sample.train_acc, sample.val_acc, std::nullopt, sample.cost};

    if (!ls.history.empty()) {
        auto& prev = ls.history.rbegin()->second;
        auto [p, c] = monotone_repair(prev.val_acc, sample.val_acc);
        prev.val_acc = p;
        sample.val_acc = c;
    }
    ls.history[n] = sample;
    ls.n_current = n;

    if (update_bound && ls.history.size() >= 3) {
        ls.u_current = detail::bound_for(state, opts, id);
        ls.bounds.push_back(ls.u_current);
        rec.bound = ls.u_current;
    }
    state.records.push_back(rec);
    return true;
}

// Trains every learner on the first three schedule sizes, in learner order.
inline void bootstrap(ScheduleState& state, LearnerPool& pool, const RunOptions& opts) {
    for (LearnerId i = 0; i < state.states.size(); ++i) {
        for (std::size_t k = 0; k < 3; ++k)
            if (!train_learner(state, pool, opts, i, state.sizes[k])) break;
    }
}

// Active learner below N with the largest bound; ties go to the smaller
// allocation, then the smaller id.
inline std::optional<LearnerId> next_learner(const ScheduleState& state) {
    std::optional<LearnerId> best;
    for (const auto& ls : state.states) {
        if (!ls.active || ls.n_current >= state.config.N) continue;
        if (!best) {
            best = ls.id;
            continue;
        }
        const auto& b = state.states[*best];
        if (ls.u_current > b.u_current || (ls.u_current == b.u_current && ls.n_current < b.n_current))
            best = ls.id;
    }
    return best;
}

namespace detail {

inline std::vector<std::string> names_of(const LearnerPool& pool) {
    std::vector<std::string> out;
    for (const auto& l : pool) out.push_back(l->name());
    return out;
}

inline RunReport finish_report(std::string mode, const LearnerPool& pool, const ScheduleState& state,
                               LearnerId selected) {
    RunReport rep;
    rep.mode = std::move(mode);
    rep.learner_names = names_of(pool);
    rep.selected = selected;
    rep.sequence = state.sequence;
    rep.records = state.records;
    rep.failures = state.failures;
    for (const auto& rec : state.records) {
        rep.per_learner_cost[rec.learner] += rec.cost;
        rep.total_cost += rec.cost;
        if (rec.learner == selected) {
            rep.selected_cost += rec.cost;
            rep.selected_val_acc = rec.val_acc;  // last record is the largest n
        }
    }
    return rep;
}

// Argmax of observed validation accuracy among learners trained on `n`;
// ties go to the smaller id.
inline std::optional<LearnerId> best_at(const ScheduleState& state, SampleCount n,
                                        const std::vector<LearnerId>& candidates) {
    std::optional<LearnerId> best;
    double best_acc = -1.0;
    for (auto id : candidates) {
        for (const auto& rec : state.records) {
            if (rec.learner == id && rec.n == n && rec.val_acc > best_acc) {
                best_acc = rec.val_acc;
                best = id;
            }
        }
    }
    return best;
}

}  // namespace detail

// The upper-bound allocation loop. Stops as soon as one learner has been
// trained on all N examples and selects it.
inline RunReport run_daub(LearnerPool& pool, const DaubConfig& config, const RunOptions& opts = {}) {
    if (pool.empty()) throw RunError("no learners");
    ScheduleState state(pool.size(), config, opts.seed);
    bootstrap(state, pool, opts);

    auto at_cap = [&] {
        std::vector<LearnerId> out;
        for (const auto& ls : state.states)
            if (ls.active && ls.n_current >= config.N) out.push_back(ls.id);
        return out;
    };

    while (at_cap().empty()) {
        auto j = next_learner(state);
        if (!j) throw RunError("every learner failed before reaching N");
        const SampleCount n = next_size(state.sizes, state.states[*j].n_current);
        train_learner(state, pool, opts, *j, n);
    }
    // Several learners can only sit at N together when bootstrap already
    // reached it (b*r^2 == N); pick the best observed accuracy then.
    auto capped = at_cap();
    LearnerId selected = capped.size() == 1 ? capped.front() : *detail::best_at(state, config.N, capped);
    return detail::finish_report(opts.use_train_bound ? "daub" : "daub_no_ft", pool, state, selected);
}

// Brute force: every learner on all N examples.
inline RunReport run_full_training(LearnerPool& pool, SampleCount N, const RunOptions& opts = {}) {
    if (pool.empty()) throw RunError("no learners");
    DaubConfig cfg;
    cfg.N = N;
    ScheduleState state;
    state.config = cfg;
    state.rng_seed = opts.seed;
    for (std::size_t i = 0; i < pool.size(); ++i) state.states.push_back(LearnerState{i, {}, 0, kNoBound, true, {}});
    std::vector<LearnerId> trained;
    for (LearnerId i = 0; i < pool.size(); ++i)
        if (train_learner(state, pool, opts, i, N, false)) trained.push_back(i);
    auto best = detail::best_at(state, N, trained);
    if (!best) throw RunError("every learner failed");
    return detail::finish_report("full", pool, state, *best);
}

// Trains every learner on n, then the best of them on N.
inline RunReport run_fixed_fraction(LearnerPool& pool, SampleCount n, SampleCount N, const RunOptions& opts = {}) {
    if (pool.empty()) throw RunError("no learners");
    if (n < 1 || n > N) throw ConfigError("fixed fraction needs 1 <= n <= N");
    DaubConfig cfg;
    cfg.N = N;
    ScheduleState state;
    state.config = cfg;
    state.rng_seed = opts.seed;
    for (std::size_t i = 0; i < pool.size(); ++i) state.states.push_back(LearnerState{i, {}, 0, kNoBound, true, {}});
    std::vector<LearnerId> trained;
    for (LearnerId i = 0; i < pool.size(); ++i)
        if (train_learner(state, pool, opts, i, n, false)) trained.push_back(i);
    auto best = detail::best_at(state, n, trained);
    if (!best) throw RunError("every learner failed");
    if (n < N && !train_learner(state, pool, opts, *best, N, false))
        throw RunError("selected learner failed on N examples");
    return detail::finish_report("fixed_fraction", pool, state, *best);
}

// Round-synchronous elimination: each round trains every survivor on the next
// schedule size and permanently drops learners whose bound falls below the
// best current validation accuracy.
inline RunReport run_elimination(LearnerPool& pool, const DaubConfig& config, const RunOptions& opts = {}) {
    if (pool.empty()) throw RunError("no learners");
    ScheduleState state(pool.size(), config, opts.seed);
    std::vector<LearnerId> survivors;
    for (LearnerId i = 0; i < pool.size(); ++i) survivors.push_back(i);

    for (std::size_t k = 0; k < state.sizes.size(); ++k) {
        const SampleCount n = state.sizes[k];
        std::vector<LearnerId> trained;
        for (auto id : survivors)
            if (train_learner(state, pool, opts, id, n)) trained.push_back(id);
        if (trained.empty()) throw RunError("every learner failed");
        survivors = trained;
        if (k < 2 || n == config.N) continue;
        double leader = -1.0;
        LearnerId leader_id = survivors.front();
        for (auto id : survivors) {
            const double f = state.states[id].history.at(n).val_acc;
            if (f > leader) {
                leader = f;
                leader_id = id;
            }
        }
        std::vector<LearnerId> kept;
        for (auto id : survivors)
            if (id == leader_id || state.states[id].u_current >= leader) kept.push_back(id);
        survivors = kept;
    }
    auto best = detail::best_at(state, config.N, survivors);
    if (!best) throw RunError("every learner failed");
    return detail::finish_report("elimination", pool, state, *best);
}

}  // namespace daub
