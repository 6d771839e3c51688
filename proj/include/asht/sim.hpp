#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "asht/blackwell.hpp"
#include "asht/core.hpp"
#include "asht/errors.hpp"
#include "asht/goap.hpp"
#include "asht/rng.hpp"

namespace asht {

// Per-arm empirical distributions of a batch drawn from hypothesis `truth`; counts come from
// largest-remainder rounding of w n. Arms with zero count get an empty vector.
std::vector<std::vector<double>> sample_batch(int truth, const BanditClass& inst, std::span<const double> w, int n,
                                              Rng& rng);
std::vector<std::vector<double>> sample_batch(int truth, const BanditClass& inst, std::span<const double> w, int n,
                                              std::uint64_t seed);
// Same for explicit integer counts.
std::vector<std::vector<double>> sample_counts(int truth, const BanditClass& inst, const std::vector<int>& counts,
                                               Rng& rng);

struct StaticPolicy {
    Allocation w;
};
struct ApproachPolicy {
    const BSetSpec* spec = nullptr;
};
struct GoapPolicy {
    const ValueTable* table = nullptr;
};
using Policy = std::variant<StaticPolicy, ApproachPolicy, GoapPolicy>;

std::string policy_name(const Policy& p);

struct TrialRecord {
    int truth = 0;
    int decision = 0;
    std::uint64_t seed = 0;
    bool degenerate = false;  // the instance has identical hypotheses
    std::vector<std::vector<int>> counts;             // per batch, per arm
    std::vector<std::vector<std::vector<double>>> Q;  // per batch, per arm (empty when unsampled)
    std::vector<double> x;                            // final state
    double terminal_g = 0.0;
    // Approachability certificates.
    std::optional<double> recursion_violation;
    std::optional<double> M;
};

// Batches of T / B samples (the last absorbs the remainder); decision = argmin_i x_i, smallest index on ties.
TrialRecord run_trial(const Policy& policy, const BanditClass& inst, int truth, int T, int B, std::uint64_t seed);

// State recomputed from the stored batches: average over batches of sum_a w_a D(Q_a || nu^i_a).
std::vector<double> recompute_state(const BanditClass& inst, const TrialRecord& rec);

struct WilsonInterval {
    double lo = 0.0, hi = 0.0;
};
WilsonInterval wilson_interval(int errors, int trials, double z = 1.959963984540054);

struct ErrorRow {
    int truth = 0;
    int T = 0;
    int trials = 0;
    int errors = 0;
    double p_hat = 0.0;
    WilsonInterval ci;
};

struct ExponentEstimate {
    double slope = 0.0;
    double stderr_ = 0.0;
    double intercept = 0.0;
    std::vector<ErrorRow> rows;     // every (truth, T) cell
    std::vector<int> used_T;        // T values entering the fit
    std::vector<std::string> warnings;
};

// Too few errors to fit; carries the per-cell rows that were measured.
class InsufficientDataError : public SolverError {
public:
    InsufficientDataError(const std::string& what, ExponentEstimate partial)
        : SolverError(what, 0.0, std::numeric_limits<double>::infinity()), partial_(std::move(partial)) {}
    const ExponentEstimate& partial() const { return partial_; }

private:
    ExponentEstimate partial_;
};

// Error counts per (truth, T) from `trials` seeded runs each, then a weighted fit of the
// worst-truth -log p_hat(T) - log(T) / 2 = slope T + intercept; stderr by parametric bootstrap.
ExponentEstimate estimate_error_exponent(const Policy& policy, const BanditClass& inst, const std::vector<int>& T_grid,
                                         int trials, std::uint64_t seed, int batches = 1);

// Seed of trial k under a master seed.
inline std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) { return mix64(seed ^ trial); }

}  // namespace asht
