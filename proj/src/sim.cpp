#include "asht/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "asht/bounds.hpp"
#include "asht/errors.hpp"
#include "asht/parallel.hpp"

namespace asht {

std::vector<std::vector<double>> sample_counts(int truth, const BanditClass& inst, const std::vector<int>& counts,
                                               Rng& rng) {
    const int K = inst.K(), X = inst.support_size();
    if (truth < 0 || truth >= inst.m()) throw ValidationError("sample_batch: truth index out of range");
    if (static_cast<int>(counts.size()) != K) throw ValidationError("sample_batch: one count per arm");
    std::vector<std::vector<double>> Q(K);
    for (int a = 0; a < K; ++a) {
        if (counts[a] <= 0) continue;
        Q[a].assign(X, 0.0);
        const double* p = inst.nu(truth, a).probs().data();
        for (int s = 0; s < counts[a]; ++s) Q[a][rng.categorical(p, X)] += 1.0;
        for (auto& q : Q[a]) q /= counts[a];
    }
    return Q;
}

std::vector<std::vector<double>> sample_batch(int truth, const BanditClass& inst, std::span<const double> w, int n,
                                              Rng& rng) {
    if (n < 1) throw ValidationError("sample_batch: batch size must be positive");
    if (static_cast<int>(w.size()) != inst.K()) throw ValidationError("sample_batch: allocation has wrong length");
    return sample_counts(truth, inst, largest_remainder(w, n), rng);
}

std::vector<std::vector<double>> sample_batch(int truth, const BanditClass& inst, std::span<const double> w, int n,
                                              std::uint64_t seed) {
    Rng rng(seed);
    return sample_batch(truth, inst, w, n, rng);
}

std::string policy_name(const Policy& p) {
    switch (p.index()) {
        case 0:
            return "static";
        case 1:
            return "approach";
        default:
            return "goap";
    }
}

namespace {

std::vector<double> batch_payoff(const BanditClass& inst, const std::vector<int>& counts,
                                 const std::vector<std::vector<double>>& Q) {
    const int n = std::accumulate(counts.begin(), counts.end(), 0);
    std::vector<double> w(counts.size());
    for (std::size_t a = 0; a < counts.size(); ++a) w[a] = double(counts[a]) / n;
    return payoff(inst, w, Q);
}

int batch_size(int T, int B, int b) { return b + 1 < B ? T / B : T - (T / B) * (B - 1); }

}  // namespace

TrialRecord run_trial(const Policy& policy, const BanditClass& inst, int truth, int T, int B, std::uint64_t seed) {
    if (B < 1 || T < B) throw ValidationError("run_trial: need 1 <= B <= T");
    if (truth < 0 || truth >= inst.m()) throw ValidationError("run_trial: truth index out of range");
    const int m = inst.m(), K = inst.K();
    TrialRecord rec;
    rec.truth = truth;
    rec.seed = seed;
    rec.degenerate = inst.has_duplicates();
    Rng rng(seed);

    if (const auto* ap = std::get_if<ApproachPolicy>(&policy)) {
        if (!ap->spec) throw ValidationError("run_trial: approachability policy without a B-set");
        BatchSampler sampler = [&](const std::vector<int>& counts) {
            auto Q = sample_counts(truth, inst, counts, rng);
            rec.counts.push_back(counts);
            rec.Q.push_back(Q);
            return Q;
        };
        ApproachRun run = approachability_run(*ap->spec, sampler, T, B);
        rec.x = run.x;
        rec.recursion_violation = run.recursion_violation;
        rec.M = run.M;
    } else {
        std::vector<double> x(m, 0.0);
        const auto* sp = std::get_if<StaticPolicy>(&policy);
        const auto* gp = std::get_if<GoapPolicy>(&policy);
        if (sp && static_cast<int>(sp->w.size()) != K) throw ValidationError("run_trial: allocation has wrong length");
        if (gp && (!gp->table || gp->table->spec().B != B))
            throw ValidationError("run_trial: GOAP table levels must match the batch count");
        for (int b = 0; b < B; ++b) {
            const int nb = batch_size(T, B, b);
            std::vector<int> counts;
            if (sp) {
                counts = largest_remainder(sp->w, nb);
            } else {
                // The game state at time b/B is the running sum of per-batch payoffs times dt.
                std::vector<double> state(m);
                for (int i = 0; i < m; ++i) state[i] = x[i] * b / B;
                counts.assign(K, 0);
                counts[goap_next_action(*gp->table, b, state)] = nb;
            }
            auto Q = sample_counts(truth, inst, counts, rng);
            auto f = batch_payoff(inst, counts, Q);
            for (int i = 0; i < m; ++i) x[i] = (b * x[i] + f[i]) / (b + 1);
            rec.counts.push_back(std::move(counts));
            rec.Q.push_back(std::move(Q));
        }
        rec.x = x;
    }
    rec.decision = static_cast<int>(std::min_element(rec.x.begin(), rec.x.end()) - rec.x.begin());
    rec.terminal_g = terminal_g(rec.x);
    return rec;
}

std::vector<double> recompute_state(const BanditClass& inst, const TrialRecord& rec) {
    std::vector<double> x(inst.m(), 0.0);
    for (std::size_t b = 0; b < rec.Q.size(); ++b) {
        auto f = batch_payoff(inst, rec.counts[b], rec.Q[b]);
        for (int i = 0; i < inst.m(); ++i) x[i] = (b * x[i] + f[i]) / (b + 1);
    }
    return x;
}

WilsonInterval wilson_interval(int errors, int trials, double z) {
    if (trials <= 0) throw ValidationError("wilson_interval: no trials");
    if (errors < 0 || errors > trials) throw ValidationError("wilson_interval: error count out of range");
    const double n = trials, p = errors / n, z2 = z * z;
    const double den = 1.0 + z2 / n;
    const double c = (p + z2 / (2.0 * n)) / den;
    const double h = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / den;
    return {std::max(0.0, c - h), std::min(1.0, c + h)};
}

namespace {

struct Fit {
    double slope = 0.0, intercept = 0.0;
};

// Weighted least squares y = slope t + intercept.
Fit weighted_fit(const std::vector<double>& t, const std::vector<double>& y, const std::vector<double>& w) {
    double sw = 0, st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        sw += w[k];
        st += w[k] * t[k];
        sy += w[k] * y[k];
        stt += w[k] * t[k] * t[k];
        sty += w[k] * t[k] * y[k];
    }
    const double den = sw * stt - st * st;
    Fit f;
    f.slope = (sw * sty - st * sy) / den;
    f.intercept = (sy - f.slope * st) / sw;
    return f;
}

int binomial_draw(Rng& rng, int n, double p) {
    int k = 0;
    for (int s = 0; s < n; ++s) k += rng.uniform() < p;
    return k;
}

}  // namespace

ExponentEstimate estimate_error_exponent(const Policy& policy, const BanditClass& inst, const std::vector<int>& T_grid,
                                         int trials, std::uint64_t seed, int batches) {
    if (trials < 1) throw ValidationError("estimate_error_exponent: trials must be positive");
    if (T_grid.empty()) throw ValidationError("estimate_error_exponent: empty T grid");
    const int m = inst.m();
    ExponentEstimate est;
    std::uint64_t cell = 0;
    std::vector<double> ts, ys, ws;
    std::vector<int> worst_errors;
    for (int T : T_grid) {
        ErrorRow worst;
        worst.errors = -1;
        for (int truth = 0; truth < m; ++truth, ++cell) {
            const std::uint64_t cell_seed = trial_seed(seed, cell);
            std::vector<int> errs(trials, 0);
            parallel_for(trials, [&](std::size_t lo, std::size_t hi) {
                for (std::size_t k = lo; k < hi; ++k) {
                    auto rec = run_trial(policy, inst, truth, T, batches, trial_seed(cell_seed, k));
                    errs[k] = rec.decision != truth;
                }
            });
            ErrorRow row;
            row.truth = truth;
            row.T = T;
            row.trials = trials;
            row.errors = std::accumulate(errs.begin(), errs.end(), 0);
            row.p_hat = double(row.errors) / trials;
            row.ci = wilson_interval(row.errors, trials);
            est.rows.push_back(row);
            if (row.errors > worst.errors) worst = row;
        }
        if (worst.errors < 10) {
            est.warnings.push_back("T = " + std::to_string(T) + " dropped: only " + std::to_string(worst.errors) +
                                   " errors in " + std::to_string(trials) + " trials");
            continue;
        }
        est.used_T.push_back(T);
        ts.push_back(T);
        // P_e ~ c T^{-1/2} exp(-R T): remove the polynomial prefactor before the linear fit.
        ys.push_back(-std::log(worst.p_hat) - 0.5 * std::log(double(T)));
        // Delta-method variance of -log p_hat is (1 - p) / (n p).
        ws.push_back(trials * worst.p_hat / std::max(1.0 - worst.p_hat, 1e-12));
        worst_errors.push_back(worst.errors);
    }
    if (ts.size() < 2)
        throw InsufficientDataError(
            "estimate_error_exponent: insufficient data, fewer than two T values observed 10 errors", est);
    Fit fit = weighted_fit(ts, ys, ws);
    est.slope = fit.slope;
    est.intercept = fit.intercept;
    // Parametric bootstrap of the worst-truth error counts.
    Rng rng(trial_seed(seed, ~std::uint64_t(0)));
    const int reps = 200;
    double s1 = 0.0, s2 = 0.0;
    for (int r = 0; r < reps; ++r) {
        std::vector<double> yb(ts.size()), wb(ts.size());
        for (std::size_t k = 0; k < ts.size(); ++k) {
            double p = double(worst_errors[k]) / trials;
            int e = std::max(1, binomial_draw(rng, trials, p));
            double pb = double(e) / trials;
            yb[k] = -std::log(pb) - 0.5 * std::log(ts[k]);
            wb[k] = trials * pb / std::max(1.0 - pb, 1e-12);
        }
        double s = weighted_fit(ts, yb, wb).slope;
        s1 += s;
        s2 += s * s;
    }
    const double mean = s1 / reps;
    est.stderr_ = std::sqrt(std::max(0.0, s2 / reps - mean * mean));
    return est;
}

}  // namespace asht
