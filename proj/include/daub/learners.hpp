// learners.hpp
//
// The learner training interface and the in-process adapters: synthetic
// learning curves and replayed curve tables.
#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "core_model.hpp"

namespace daub {

struct LearnerCapabilities {
    SampleCount max_n = std::numeric_limits<SampleCount>::max();
    bool exact_mode = false;  // exact_accuracy() is available
};

class Learner {
public:
    virtual ~Learner() = default;

    virtual const std::string& name() const = 0;

    // Train on n examples drawn with `seed`; deterministic in (n, seed).
    // Throws LearnerFailure (or a subclass) when no sample can be produced.
    virtual CurveSample train_eval(SampleCount n, std::uint64_t seed) = 0;

    virtual LearnerCapabilities capabilities() const { return {}; }

    // Noiseless expected accuracy, for exact-mode runs.
    virtual std::optional<double> exact_accuracy(SampleCount) const { return std::nullopt; }
};

using LearnerPool = std::vector<std::unique_ptr<Learner>>;

// splitmix64 finalizer; used to derive independent per-allocation seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t allocation_seed(std::uint64_t run_seed, LearnerId learner, SampleCount n) {
    return mix_seed(mix_seed(mix_seed(run_seed) ^ learner) ^ static_cast<std::uint64_t>(n));
}

inline double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// ---------------------------------------------------------------------------
// Synthetic curves

enum class CurveFamily { inverse, power_law, crossing, flat };

inline std::string_view to_string(CurveFamily f) {
    switch (f) {
        case CurveFamily::inverse: return "inverse";
        case CurveFamily::power_law: return "power_law";
        case CurveFamily::crossing: return "crossing";
        case CurveFamily::flat: return "flat";
    }
    return "?";
}

inline CurveFamily parse_family(std::string_view s) {
    if (s == "inverse") return CurveFamily::inverse;
    if (s == "power_law") return CurveFamily::power_law;
    if (s == "crossing") return CurveFamily::crossing;
    if (s == "flat") return CurveFamily::flat;
    throw ConfigError("unknown curve family '" + std::string(s) + "'");
}

// Curve shapes (a = asymptote, c = scale):
//   inverse    f(n) = a - c/n
//   power_law  f(n) = a - c * n^-exponent
//   crossing   f(n) = min(a, rise - c/n): climbs like an inverse curve toward
//              `rise`, then flattens at the plateau a from crossing_point() on
//   flat       f(n) = a
// Every family is non-decreasing with a non-increasing discrete derivative.
struct SyntheticCurveSpec {
    CurveFamily family = CurveFamily::inverse;
    double asymptote = 0.9;
    double scale = 100.0;
    double exponent = 1.0;
    double rise = 1.0;            // crossing only
    double noise_sigma = 0.0;
    double cost_exponent = 1.0;   // cost = cost_scale * n^cost_exponent
    double cost_scale = 1.0;
    double overfit_margin = 0.05; // training accuracy = min(1, a + m0/sqrt(n))

    void validate() const {
        auto finite = [](double x) { return std::isfinite(x); };
        if (!finite(asymptote) || asymptote < 0.0 || asymptote > 1.0)
            throw ConfigError("asymptote must lie in [0,1]");
        if (family != CurveFamily::flat && (!finite(scale) || !(scale > 0.0)))
            throw ConfigError("scale must be > 0");
        if (family == CurveFamily::power_law && (!finite(exponent) || !(exponent > 0.0)))
            throw ConfigError("exponent must be > 0");
        if (family == CurveFamily::crossing && (!finite(rise) || !(rise > asymptote)))
            throw ConfigError("crossing curves need rise > asymptote");
        if (!finite(noise_sigma) || noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
        if (!finite(cost_exponent) || cost_exponent < 1.0) throw ConfigError("cost_exponent must be >= 1");
        if (!finite(cost_scale) || cost_scale < 1.0) throw ConfigError("cost_scale must be >= 1");
        if (!finite(overfit_margin) || overfit_margin < 0.0) throw ConfigError("overfit_margin must be >= 0");
    }

    bool unit_cost() const { return cost_exponent == 1.0 && cost_scale == 1.0; }

    bool operator==(const SyntheticCurveSpec&) const = default;
};

// Noiseless curve value. Unclamped: small n can fall below zero for
// inverse-type curves, which keeps the shape well-behaved everywhere.
inline double exact_accuracy(const SyntheticCurveSpec& spec, double n) {
    switch (spec.family) {
        case CurveFamily::inverse: return spec.asymptote - spec.scale / n;
        case CurveFamily::power_law: return spec.asymptote - spec.scale * std::pow(n, -spec.exponent);
        case CurveFamily::crossing: return std::min(spec.asymptote, spec.rise - spec.scale / n);
        case CurveFamily::flat: return spec.asymptote;
    }
    return 0.0;
}

// Where the two constituents of a crossing curve meet.
inline double crossing_point(const SyntheticCurveSpec& spec) {
    if (spec.family != CurveFamily::crossing) throw DomainError("not a crossing curve");
    return spec.scale / (spec.rise - spec.asymptote);
}

// An inverse curve that starts below `early` and overtakes it at the crossing
// point, reaching `late_asymptote` in the limit.
inline SyntheticCurveSpec late_bloomer(const SyntheticCurveSpec& early, double late_asymptote) {
    if (!(late_asymptote > early.asymptote))
        throw ConfigError("late bloomer must end above the early plateau");
    SyntheticCurveSpec out = early;
    out.family = CurveFamily::inverse;
    out.asymptote = late_asymptote;
    out.scale = (late_asymptote - early.asymptote) * crossing_point(early);
    return out;
}

// Training accuracy in expectation: the curve's supremum plus a shrinking
// overfit margin, so it never falls below f(N) and never increases with n.
inline double exact_train_accuracy(const SyntheticCurveSpec& spec, double n) {
    return std::min(1.0, spec.asymptote + spec.overfit_margin / std::sqrt(n));
}

inline double synthetic_cost(const SyntheticCurveSpec& spec, double n) {
    if (spec.unit_cost()) return n;
    return spec.cost_scale * std::pow(n, spec.cost_exponent);
}

namespace detail {
inline double truncated_normal(std::mt19937_64& rng, double center, double sigma) {
    if (sigma == 0.0) return clamp01(center);
    std::normal_distribution<double> dist(0.0, sigma);
    for (int attempt = 0; attempt < 64; ++attempt) {
        const double v = center + dist(rng);
        if (v >= 0.0 && v <= 1.0) return v;
    }
    return clamp01(center);
}
}  // namespace detail

inline CurveSample synthetic_train_eval(const SyntheticCurveSpec& spec, SampleCount n, std::uint64_t seed) {
    if (n < 1) throw DomainError("synthetic_train_eval: n must be >= 1");
    std::mt19937_64 rng(mix_seed(seed ^ mix_seed(static_cast<std::uint64_t>(n))));
    const double dn = static_cast<double>(n);
    CurveSample out;
    out.n = n;
    out.val_acc = detail::truncated_normal(rng, exact_accuracy(spec, dn), spec.noise_sigma);
    out.train_acc = detail::truncated_normal(rng, exact_train_accuracy(spec, dn), spec.noise_sigma);
    out.cost = synthetic_cost(spec, dn);
    return out;
}

// Returns the first n in [lo, hi] where f stops being non-decreasing or its
// discrete derivative (step 1) increases; nullopt when none.
template <typename F>
std::optional<SampleCount> find_well_behaved_violation(const F& f, SampleCount lo, SampleCount hi,
                                                       double tol = 1e-12) {
    if (hi - lo < 1) return std::nullopt;
    double prev = f(lo);
    double cur = f(lo + 1);
    double prev_d = cur - prev;
    if (prev_d < -tol) return lo + 1;
    for (SampleCount n = lo + 2; n <= hi; ++n) {
        prev = cur;
        cur = f(n);
        const double d = cur - prev;
        if (d < -tol || d > prev_d + tol) return n;
        prev_d = d;
    }
    return std::nullopt;
}

class SyntheticLearner final : public Learner {
public:
    SyntheticLearner(std::string name, SyntheticCurveSpec spec, bool exact = false)
        : name_(std::move(name)), spec_(spec), exact_(exact) {
        spec_.validate();
        if (exact_) spec_.noise_sigma = 0.0;
    }

    const std::string& name() const override { return name_; }
    const SyntheticCurveSpec& spec() const { return spec_; }

    CurveSample train_eval(SampleCount n, std::uint64_t seed) override {
        return synthetic_train_eval(spec_, n, seed);
    }

    LearnerCapabilities capabilities() const override { return {std::numeric_limits<SampleCount>::max(), true}; }

    std::optional<double> exact_accuracy(SampleCount n) const override {
        return daub::exact_accuracy(spec_, static_cast<double>(n));
    }

private:
    std::string name_;
    SyntheticCurveSpec spec_;
    bool exact_;
};

// ---------------------------------------------------------------------------
// Replay tables

struct ReplayRow {
    SampleCount n = 0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double cost = 0.0;
    bool operator==(const ReplayRow&) const = default;
};

struct ReplayTable {
    std::vector<ReplayRow> rows;  // sorted by n, strictly increasing

    void validate() const {
        if (rows.empty()) throw ConfigError("replay table is empty");
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const auto& r = rows[k];
            CurveSample{r.n, r.train_acc, r.val_acc, r.cost}.validate();
            if (k > 0 && r.n <= rows[k - 1].n)
                throw ConfigError("replay table n must be strictly increasing");
        }
    }
};

// Exact row, or piecewise-linear interpolation between neighbouring rows.
// Never extrapolates.
inline CurveSample replay_train_eval(const ReplayTable& table, SampleCount n) {
    if (table.rows.empty()) throw OutOfRangeError("replay table is empty");
    if (n < table.rows.front().n || n > table.rows.back().n)
        throw OutOfRangeError("n=" + std::to_string(n) + " outside replay table range [" +
                              std::to_string(table.rows.front().n) + ", " +
                              std::to_string(table.rows.back().n) + "]");
    auto it = std::lower_bound(table.rows.begin(), table.rows.end(), n,
                               [](const ReplayRow& r, SampleCount v) { return r.n < v; });
    if (it->n == n) return {n, it->train_acc, it->val_acc, it->cost};
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double t = static_cast<double>(n - lo.n) / static_cast<double>(hi.n - lo.n);
    auto lerp = [t](double a, double b) { return a + t * (b - a); };
    return {n, lerp(lo.train_acc, hi.train_acc), lerp(lo.val_acc, hi.val_acc), lerp(lo.cost, hi.cost)};
}

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        auto b = field.find_first_not_of(" \t\r");
        auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad number '" + s + "' in " + what);
    }
}
}  // namespace detail

// CSV with header `n,train_acc,val_acc,cost`.
inline ReplayTable parse_replay_csv(std::istream& in, const std::string& source = "replay table") {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(source + ": missing header");
    const auto header = detail::split_csv_line(line);
    if (header != std::vector<std::string>{"n", "train_acc", "val_acc", "cost"})
        throw ConfigError(source + ": header must be n,train_acc,val_acc,cost");
    ReplayTable table;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto f = detail::split_csv_line(line);
        if (f.size() != 4) throw ConfigError(source + ": expected 4 fields in '" + line + "'");
        ReplayRow row;
        row.n = static_cast<SampleCount>(detail::parse_double(f[0], source));
        row.train_acc = detail::parse_double(f[1], source);
        row.val_acc = detail::parse_double(f[2], source);
        row.cost = detail::parse_double(f[3], source);
        table.rows.push_back(row);
    }
    try {
        table.validate();
    } catch (const std::exception& e) {
        throw ConfigError(source + ": " + e.what());
    }
    return table;
}

inline ReplayTable load_replay_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open replay table " + path.string());
    return parse_replay_csv(in, path.string());
}

class ReplayLearner final : public Learner {
public:
    ReplayLearner(std::string name, ReplayTable table) : name_(std::move(name)), table_(std::move(table)) {
        table_.validate();
    }

    const std::string& name() const override { return name_; }
    const ReplayTable& table() const { return table_; }

    CurveSample train_eval(SampleCount n, std::uint64_t) override { return replay_train_eval(table_, n); }

    LearnerCapabilities capabilities() const override { return {table_.rows.back().n, false}; }

private:
    std::string name_;
    ReplayTable table_;
};

struct ManifestEntry {
    std::string name;
    std::filesystem::path path;
};

// Manifest CSV with header `name,path`; relative paths resolve against the
// manifest's directory.
inline std::vector<ManifestEntry> load_replay_manifest(const std::filesystem::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw ConfigError("cannot open replay manifest " + manifest.string());
    std::string line;
    if (!std::getline(in, line) || detail::split_csv_line(line) != std::vector<std::string>{"name", "path"})
        throw ConfigError(manifest.string() + ": header must be name,path");
    std::vector<ManifestEntry> out;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto f = detail::split_csv_line(line);
        if (f.size() != 2 || f[0].empty()) throw ConfigError(manifest.string() + ": bad row '" + line + "'");
        std::filesystem::path p = f[1];
        if (p.is_relative()) p = manifest.parent_path() / p;
        if (!std::filesystem::exists(p)) throw ConfigError("replay table not found: " + p.string());
        out.push_back({f[0], p});
    }
    if (out.empty()) throw ConfigError(manifest.string() + ": no learners listed");
    return out;
}

}  // namespace daub
