#pragma once

#include <functional>
#include <span>
#include <vector>

#include "asht/core.hpp"

namespace asht {

struct UpwindGridSpec {
    int m = 0;
    double a_bound = 0.0;
    double eps = 0.0;
    int N_x = 0;  // cells per axis over [-3a/2, 3a/2]; even, so the origin is a node
    int N_t = 0;  // time steps over [0, 1]
    double dh = 0.0;
    double dt = 0.0;

    // dt = 1/N_t with N_t the smallest count satisfying dt <= cfl_fraction * cfl_max_dt.
    static UpwindGridSpec make(const BanditClass& inst, int N_x, double cfl_fraction = 0.9);
    static UpwindGridSpec make_fixed(const BanditClass& inst, int N_x, int N_t);

    double coord(int index) const { return -1.5 * a_bound + index * dh; }
    int origin_index() const { return N_x / 2; }
    // 1 - (m dt / dh) log(1/eps); nonnegative iff the scheme is monotone.
    double stability_margin() const;
    void validate() const;
};

double cfl_max_dt(int m, double eps, double dh);

// g(Pi_C(x)) (1 - 2 d_inf(x, C) / a) on [-a/2, 3a/2]^m, zero outside, with C = [0, a]^m.
double modified_terminal(std::span<const double> x, double a_bound);

// Dense values on the sub-box [lo, N_x]^m of the grid. lo = 0 is the full grid;
// lo = N_x/2 keeps only the closed nonnegative orthant, which the forward-difference
// stencil never reads outside of.
struct ValueSlice {
    int m = 0;
    int N_x = 0;
    int lo = 0;
    std::vector<double> v;

    int extent() const { return N_x - lo + 1; }
    std::size_t flat(std::span<const int> idx) const;
    double at(std::span<const int> idx) const { return v[flat(idx)]; }
    // Global multi-index of flat position k.
    void unflat(std::size_t k, int* idx) const;
};

ValueSlice initial_slice(const UpwindGridSpec& spec, int lo);
// One explicit step V <- V + dt H(forward differences / dh); boundary nodes stay 0.
ValueSlice upwind_step(const ValueSlice& s, const UpwindGridSpec& spec, const BanditClass& inst);

struct PdeResult {
    double value = 0.0;
    double refinement_estimate = 0.0;  // |V(h) - V(h/2)| with dt halved alongside dh
    double fine_value = 0.0;
    double max_value = 0.0;  // largest value seen over all steps
    double min_value = 0.0;
};

struct PdeOptions {
    bool orthant_only = true;
    bool refine = true;
    // Called after each step with (step index, slice); used for slice export.
    std::function<void(int, const ValueSlice&)> on_step;
};

// Runs N_t steps from g' and reads the value at the origin.
PdeResult solve_r_go_inf(const BanditClass& inst, const UpwindGridSpec& spec, const PdeOptions& opt = {});

}  // namespace asht
