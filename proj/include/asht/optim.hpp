#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace asht {

using Vec = std::vector<double>;
using Objective = std::function<double(const Vec&)>;

// Golden-section maximization of a unimodal function on [lo, hi].
double golden_max(const std::function<double(double)>& f, double lo, double hi, double tol,
                  double* argmax = nullptr);

struct NelderMeadResult {
    Vec x;
    double f = 0.0;
    int iterations = 0;
    bool converged = false;
};

NelderMeadResult nelder_mead_min(const Objective& f, Vec x0, double step, double ftol, double xtol,
                                 int max_iter);

struct DEOptions {
    int pop_per_dim = 15;
    int max_generations = 2000;
    double tol = 1e-7;
    double F = 0.6;
    double CR = 0.9;
    std::uint64_t seed = 0x5eed;
};

struct DEResult {
    Vec x;
    double f = 0.0;
    int generations = 0;
    double spread = 0.0;  // max - min objective over the final population
    bool converged = false;
};

// DE/rand/1/bin over the unit cube [0,1]^dim. Converges when the population's
// objective spread drops below tol. Deterministic for a given seed.
DEResult differential_evolution_min(const Objective& f, int dim, const DEOptions& opt);

// Euclidean projection onto the probability simplex.
Vec project_simplex(const Vec& v);

// Sorted-spacings map from [0,1]^d onto the (d+1)-simplex.
Vec cube_to_simplex(const Vec& u);

// Minimizes a convex function over the m-simplex by nested golden sections on
// the coordinates beta_1, ..., beta_{m-1}. Exact up to the golden tolerance.
double nested_golden_simplex_min(const Objective& f, int m, int iters_per_level, Vec* argmin);

// Same nesting for a concave function on the polytope {lambda >= 0, A lambda <= b}
// with A, b >= 0. Returns the maximum and its location.
double nested_golden_polytope_max(const Objective& f, const std::vector<Vec>& A, const Vec& b,
                                  int iters_per_level, Vec* argmax);

// Projected subgradient descent on the simplex with diminishing steps; returns the best value.
double projected_subgradient_simplex_min(const std::function<double(const Vec&, Vec&)>& f_and_g,
                                         Vec x0, int iterations, double step0, Vec* argmin);

// max c'y s.t. A y <= b, y >= 0, with b >= 0. Dense tableau simplex with Bland's rule.
struct LPResult {
    Vec y;
    Vec dual;  // multipliers of the A y <= b rows
    double value = 0.0;
};
LPResult lp_max_leq(const Vec& c, const std::vector<Vec>& A, const Vec& b);

// Value max_w min_i (C w)_i over w in the simplex, C given as rows.
double matrix_game_value(const std::vector<Vec>& C, Vec* w_star = nullptr);

// Lawson-Hanson non-negative least squares: min ||E u - f||, u >= 0. E is row-major (rows x cols).
Vec nnls(const std::vector<Vec>& E, const Vec& f);

// Least-distance program min ||z|| s.t. G z >= h. Returns false when infeasible.
bool least_distance(const std::vector<Vec>& G, const Vec& h, Vec& z);

}  // namespace asht
