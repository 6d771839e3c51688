#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "asht/core.hpp"
#include "asht/optim.hpp"

namespace asht {

struct Intercepts {
    double I = 0.0;  // min_a zeta(a, beta)
    double L = 0.0;  // max_a zeta(a, beta)
    int argmin_arm = 0;
    int argmax_arm = 0;
};

Intercepts intercepts(const BanditClass& inst, std::span<const double> beta);

// Point t e_i + (1 - t) e_j of the simplex edge between hypotheses i and j.
std::vector<double> edge_point(int m, int i, int j, double t);

struct EdgeSup {
    int i = 0, j = 0;
    double value = 0.0;  // sup over t of I on the edge
    double t = 0.0;      // maximizer
};

// Dense grid followed by golden refinement; I is concave along the edge.
EdgeSup edge_sup(const BanditClass& inst, int i, int j);
std::vector<EdgeSup> all_edge_sups(const BanditClass& inst);

struct GResult {
    double value = 0.0;  // +infinity when no pair is perturbed
    std::vector<std::pair<int, int>> pairs;
    std::vector<double> t;  // edge parameter of beta_tilde per pair
    DEResult de;
};

// inf over lambda in the simplex of L(sum_k lambda_k beta_k); grid start plus local descent.
double min_L_over_hull(const BanditClass& inst, const std::vector<std::vector<double>>& betas,
                       std::vector<double>* lambda_star = nullptr);

// G(R): sup over beta_tilde of inf over lambda of L(sum lambda beta_tilde), over the pairs with edge sup < R.
GResult g_of_r(const BanditClass& inst, double R, const DEOptions& opt = DEOptions{});

class BSetSpec {
public:
    BSetSpec() = default;
    BSetSpec(BanditClass inst, double R, std::vector<std::pair<int, int>> pairs, std::vector<double> t,
             std::vector<EdgeSup> edges);

    const BanditClass& instance() const { return inst_; }
    int m() const { return inst_.m(); }
    double R() const { return R_; }
    const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }
    const std::vector<std::vector<double>>& beta_tilde() const { return beta_tilde_; }
    const std::vector<double>& t() const { return t_; }
    const std::vector<EdgeSup>& edge_sups() const { return edges_; }

    double I(std::span<const double> beta) const;
    double L(std::span<const double> beta) const;
    // Upper concave envelope of the perturbed intercept.
    double I_concave(std::span<const double> beta) const;

    nlohmann::json to_json() const;

private:
    BanditClass inst_;
    double R_ = 0.0;
    std::vector<std::pair<int, int>> pairs_;
    std::vector<double> t_;
    std::vector<std::vector<double>> beta_tilde_;
    std::vector<EdgeSup> edges_;
};

struct ApproachResult {
    double value = 0.0;
    double g_at_value = 0.0;  // inf over lambda at the recorded beta_tilde
    BSetSpec spec;
};

// sup{R : R <= G(R)} via the sorted edge-sup breakpoints, on each of which G is constant.
ApproachResult r_approach(const BanditClass& inst, const DEOptions& opt = DEOptions{});

// min_beta <beta, x> - I(beta): a convex program solved by nested golden sections.
double halfspace_gap(const BSetSpec& spec, std::span<const double> x, std::vector<double>* beta_star = nullptr);

// l(x) = min(min over perturbed pairs of <beta_tilde, x> - R, halfspace_gap(x)); x is in the set iff l(x) >= 0.
double membership_l(const BSetSpec& spec, std::span<const double> x);

struct Projection {
    std::vector<double> y;
    std::vector<double> beta;  // (y - x) / |y - x|_1, the separating direction; empty when x is inside
    double distance = 0.0;
    double l_at_x = 0.0;
    double l_at_y = 0.0;
    int cuts = 0;
    int iterations = 0;
};

// Euclidean projection onto the set by cutting planes; the cut pool may be shared between calls.
class Projector {
public:
    explicit Projector(const BSetSpec& spec, double tol = 1e-10, int max_iterations = 500);
    Projection project(std::span<const double> x);
    const BSetSpec& spec() const { return *spec_; }

private:
    const BSetSpec* spec_;
    double tol_;
    int max_iter_;
    std::vector<std::vector<double>> G_;
    std::vector<double> h_;
};

Projection project_to_bset(const BSetSpec& spec, std::span<const double> x);

struct AllocationChoice {
    std::vector<double> beta_n;
    Allocation w;
    int arm_lo = 0, arm_hi = 0;  // w = theta e_hi + (1 - theta) e_lo
    double theta = 0.0;
    double target = 0.0;    // sum_a w_a zeta(a, beta_n)
    double residual = 0.0;  // target - <beta_n, y>
};

// Two-arm mixture with sum_a w_a zeta(a, beta_n) equal to the halfspace value of beta_n.
AllocationChoice allocation_from_projection(const BSetSpec& spec, const Projection& proj);

// Per-arm empirical distributions for the given counts; arms with zero count return an empty vector.
using BatchSampler = std::function<std::vector<std::vector<double>>(const std::vector<int>& counts)>;

// f_i(w, Q) = sum_a w_a D(Q_a || nu^i_a), skipping arms with zero weight.
std::vector<double> payoff(const BanditClass& inst, std::span<const double> w,
                           const std::vector<std::vector<double>>& Q);

struct ApproachStep {
    std::vector<double> x;  // state after the batch
    double l = 0.0;         // l of the state before the batch
    double distance = 0.0;  // distance of the state after the batch to the set
    double payoff_gap = 0.0;  // |f_n - projection of the previous state|
    std::vector<int> counts;
    Allocation w;
};

struct ApproachRun {
    int decision = 0;
    std::vector<ApproachStep> steps;
    std::vector<double> x;
    double terminal_g = 0.0;
    double M = 0.0;                   // largest observed payoff gap
    double recursion_violation = 0.0;  // max over steps of the distance recursion excess
};

// Batched approachability with T samples in B batches; the last batch absorbs any remainder.
ApproachRun approachability_run(const BSetSpec& spec, const BatchSampler& sampler, int T, int B);

struct BSetReport {
    int samples = 0;
    int inside = 0;  // sampled x already in the set, skipped
    double max_violation = 0.0;
    double max_residual = 0.0;
};

BSetReport verify_bset(const BSetSpec& spec, int n_samples, std::uint64_t seed);

}  // namespace asht
