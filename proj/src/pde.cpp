#include "asht/pde.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>
#include <utility>

#include "asht/bounds.hpp"
#include "asht/errors.hpp"
#include "asht/parallel.hpp"

namespace asht {

double cfl_max_dt(int m, double eps, double dh) {
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("cfl_max_dt: eps must lie in (0, 1)");
    if (!(dh > 0.0)) throw DomainError("cfl_max_dt: dh must be positive");
    return dh / (m * std::log(1.0 / eps));
}

UpwindGridSpec UpwindGridSpec::make_fixed(const BanditClass& inst, int N_x, int N_t) {
    UpwindGridSpec s;
    s.m = inst.m();
    s.a_bound = inst.a_bound();
    s.eps = inst.eps();
    s.N_x = N_x;
    s.N_t = N_t;
    s.dh = 3.0 * s.a_bound / N_x;
    s.dt = 1.0 / N_t;
    return s;
}

UpwindGridSpec UpwindGridSpec::make(const BanditClass& inst, int N_x, double cfl_fraction) {
    if (!(cfl_fraction > 0.0 && cfl_fraction <= 1.0)) throw DomainError("cfl fraction must lie in (0, 1]");
    double dh = 3.0 * inst.a_bound() / N_x;
    double dt_max = cfl_fraction * cfl_max_dt(inst.m(), inst.eps(), dh);
    int N_t = static_cast<int>(std::ceil(1.0 / dt_max - 1e-12));
    return make_fixed(inst, N_x, std::max(N_t, 2));
}

double UpwindGridSpec::stability_margin() const { return 1.0 - (m * dt / dh) * std::log(1.0 / eps); }

void UpwindGridSpec::validate() const {
    if (N_x < 2 || N_t < 2) throw DomainError("upwind grid needs N_x, N_t >= 2");
    if (N_x % 2) throw DomainError("N_x must be even so the origin is a grid node");
    if (stability_margin() < 0.0) {
        double need = cfl_max_dt(m, eps, dh);
        throw DomainError("CFL violated: dt = " + std::to_string(dt) + " exceeds dh/(m log(1/eps)) = " +
                          std::to_string(need) + "; need N_t >= " + std::to_string(int(std::ceil(1.0 / need))));
    }
}

double modified_terminal(std::span<const double> x, double a) {
    double d = 0.0;
    std::vector<double> px(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (x[k] < -0.5 * a || x[k] > 1.5 * a) return 0.0;
        px[k] = std::clamp(x[k], 0.0, a);
        d = std::max(d, std::abs(x[k] - px[k]));
    }
    return terminal_g(px) * (1.0 - 2.0 * d / a);
}

std::size_t ValueSlice::flat(std::span<const int> idx) const {
    std::size_t k = 0;
    const int n = extent();
    for (int j = 0; j < m; ++j) k = k * n + (idx[j] - lo);
    return k;
}

void ValueSlice::unflat(std::size_t k, int* idx) const {
    const int n = extent();
    for (int j = m - 1; j >= 0; --j) {
        idx[j] = static_cast<int>(k % n) + lo;
        k /= n;
    }
}

ValueSlice initial_slice(const UpwindGridSpec& spec, int lo) {
    ValueSlice s{spec.m, spec.N_x, lo, {}};
    std::size_t total = 1;
    for (int j = 0; j < spec.m; ++j) total *= s.extent();
    s.v.assign(total, 0.0);
    std::vector<int> idx(spec.m);
    std::vector<double> x(spec.m);
    for (std::size_t k = 0; k < total; ++k) {
        s.unflat(k, idx.data());
        bool boundary = false;
        for (int j = 0; j < spec.m; ++j) {
            boundary = boundary || idx[j] == 0 || idx[j] == spec.N_x;
            x[j] = spec.coord(idx[j]);
        }
        s.v[k] = boundary ? 0.0 : modified_terminal(x, spec.a_bound);
    }
    return s;
}

ValueSlice upwind_step(const ValueSlice& s, const UpwindGridSpec& spec, const BanditClass& inst) {
    spec.validate();
    if (s.m != spec.m || s.N_x != spec.N_x) throw ValidationError("upwind_step: slice does not match the grid");
    ValueSlice out = s;
    const int m = s.m, n = s.extent();
    std::vector<std::size_t> stride(m);
    std::size_t st = 1;
    for (int j = m - 1; j >= 0; --j) {
        stride[j] = st;
        st *= n;
    }
    const double inv_dh = 1.0 / spec.dh;
    parallel_for(s.v.size(), [&](std::size_t begin, std::size_t end) {
        std::vector<int> idx(m);
        std::vector<double> p(m);
        for (std::size_t k = begin; k < end; ++k) {
            s.unflat(k, idx.data());
            bool boundary = false;
            for (int j = 0; j < m; ++j) boundary = boundary || idx[j] == 0 || idx[j] == spec.N_x;
            if (boundary) {
                out.v[k] = 0.0;
                continue;
            }
            const double v0 = s.v[k];
            // Forward neighbour has index <= N_x, always inside the stored box.
            for (int j = 0; j < m; ++j) p[j] = (s.v[k + stride[j]] - v0) * inv_dh;
            out.v[k] = v0 + spec.dt * hamiltonian(inst, p).value;
        }
    });
    return out;
}

namespace {

// One step restricted to the indices in [s.lo, hi]^m whose offsets from s.lo sum to at most
// budget, written into out; other entries of out are left as they are. Returns the value range
// over the updated indices.
std::pair<double, double> step_box(const ValueSlice& s, ValueSlice& out, const UpwindGridSpec& spec,
                                   const BanditClass& inst, int hi, int budget) {
    const int m = s.m, n = s.extent(), lo = s.lo, w = hi - lo + 1;
    std::vector<std::size_t> stride(m);
    std::size_t st = 1;
    for (int j = m - 1; j >= 0; --j) {
        stride[j] = st;
        st *= n;
    }
    std::size_t rows = 1;
    for (int j = 0; j < m - 1; ++j) rows *= w;
    const double inv_dh = 1.0 / spec.dh, dt = spec.dt;
    std::vector<double> row_lo(rows, INFINITY), row_hi(rows, -INFINITY);
    parallel_for(rows, [&](std::size_t begin, std::size_t end) {
        std::vector<int> idx(m);
        std::vector<double> p(m);
        for (std::size_t r = begin; r < end; ++r) {
            std::size_t q = r, k0 = 0;
            bool boundary = false;
            int used = 0;
            for (int j = m - 2; j >= 0; --j) {
                idx[j] = lo + static_cast<int>(q % w);
                q /= w;
                used += idx[j] - lo;
                k0 += (idx[j] - lo) * stride[j];
                boundary = boundary || idx[j] == 0 || idx[j] == spec.N_x;
            }
            double vlo = INFINITY, vhi = -INFINITY;
            const int last = std::min(hi, lo + budget - used);
            for (int t = lo; t <= last; ++t) {
                const std::size_t k = k0 + (t - lo);
                double v = 0.0;
                if (!boundary && t != 0 && t != spec.N_x) {
                    const double v0 = s.v[k];
                    for (int j = 0; j < m; ++j) p[j] = (s.v[k + stride[j]] - v0) * inv_dh;
                    v = v0 + dt * hamiltonian(inst, p).value;
                }
                out.v[k] = v;
                vlo = std::min(vlo, v);
                vhi = std::max(vhi, v);
            }
            row_lo[r] = vlo;
            row_hi[r] = vhi;
        }
    });
    return {*std::min_element(row_lo.begin(), row_lo.end()), *std::max_element(row_hi.begin(), row_hi.end())};
}

PdeResult run(const BanditClass& inst, const UpwindGridSpec& spec, const PdeOptions& opt) {
    spec.validate();
    ValueSlice cur = initial_slice(spec, opt.orthant_only ? spec.origin_index() : 0);
    PdeResult r;
    r.max_value = *std::max_element(cur.v.begin(), cur.v.end());
    r.min_value = *std::min_element(cur.v.begin(), cur.v.end());
    // Without slice export only the origin's domain of dependence is advanced: each step moves one
    // index along one axis, so after step n the origin reads offsets summing to at most N_t - n.
    const bool trim = opt.orthant_only && !opt.on_step;
    ValueSlice next = cur;
    for (int n = 0; n < spec.N_t; ++n) {
        double lo, hi;
        if (trim) {
            const int reach = std::min(spec.N_x, spec.origin_index() + spec.N_t - n - 1);
            std::tie(lo, hi) = step_box(cur, next, spec, inst, reach, spec.N_t - n - 1);
            std::swap(cur, next);
        } else {
            cur = upwind_step(cur, spec, inst);
            auto [a, b] = std::minmax_element(cur.v.begin(), cur.v.end());
            lo = *a;
            hi = *b;
        }
        if (!std::isfinite(lo) || !std::isfinite(hi))
            throw SolverError("upwind scheme produced a non-finite value at step " + std::to_string(n + 1), 0.0,
                              INFINITY);
        r.max_value = std::max(r.max_value, hi);
        r.min_value = std::min(r.min_value, lo);
        if (opt.on_step) opt.on_step(n + 1, cur);
    }
    std::vector<int> origin(spec.m, spec.origin_index());
    r.value = cur.at(origin);
    return r;
}

}  // namespace

PdeResult solve_r_go_inf(const BanditClass& inst, const UpwindGridSpec& spec, const PdeOptions& opt) {
    PdeResult r = run(inst, spec, opt);
    if (opt.refine) {
        PdeOptions fine_opt = opt;
        fine_opt.refine = false;
        fine_opt.on_step = nullptr;
        auto fine = UpwindGridSpec::make_fixed(inst, 2 * spec.N_x, 2 * spec.N_t);
        r.fine_value = run(inst, fine, fine_opt).value;
        r.refinement_estimate = std::abs(r.value - r.fine_value);
    }
    return r;
}

}  // namespace asht
