#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "asht/core.hpp"
#include "asht/optim.hpp"

namespace asht {

struct HamiltonianValue {
    double value = 0.0;
    int arm = 0;  // smallest maximizing arm
};

// H(p) = max_a H_a(p) with H_a(p) = inf_Q sum_i p_i D(Q || nu^i_a).
HamiltonianValue hamiltonian(const BanditClass& inst, std::span<const double> p);
double arm_hamiltonian(const BanditClass& inst, int arm, std::span<const double> p);

// Second-smallest coordinate of x, i.e. max_j min_{i != j} x_i.
double terminal_g(std::span<const double> x);

struct SolverInfo {
    int iterations = 0;
    double tolerance = 0.0;
    bool converged = true;
};

double r_ub(const BanditClass& inst);

struct StaticResult {
    double value = 0.0;
    Allocation w_star;
    SolverInfo info;
};
StaticResult r_static(const BanditClass& inst, std::uint64_t seed = 0x57a71c);
// Objective of the static problem at a fixed allocation.
double static_exponent(const BanditClass& inst, std::span<const double> w);

struct GoResult {
    double value = 0.0;
    std::vector<std::vector<double>> argmin;  // Q for r_go_1, the pair weights for r_hopf
    SolverInfo info;
};
GoResult r_go_1(const BanditClass& inst, const DEOptions& opt = DEOptions{});
// Inner value sup_w max_j min_{i != j} sum_a w_a D(Q_a || nu^i_a) for a fixed Q.
double go1_inner(const BanditClass& inst, const std::vector<std::vector<double>>& Q);

GoResult r_hopf(const BanditClass& inst, const DEOptions& opt = DEOptions{});
// Inner value max_a sup_beta zeta_a(P(lambda, beta)) for fixed pair weights lambda.
double hopf_inner(const BanditClass& inst, std::span<const double> lambda);

struct BoundsReport {
    double r_static = 0.0, r_ub = 0.0, r_go_1 = 0.0, r_hopf = 0.0;
    std::optional<double> r_go_inf, r_approach;
    Allocation w_static;
    std::map<std::string, SolverInfo> meta;

    // Returns a list of violated ladder relations; empty when consistent.
    std::vector<std::string> check_ladder() const;
    nlohmann::json to_json() const;
};

BoundsReport compute_bounds(const BanditClass& inst, const DEOptions& de = DEOptions{});

}  // namespace asht
