#include "asht/blackwell.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "asht/bounds.hpp"
#include "asht/errors.hpp"
#include "asht/rng.hpp"

namespace asht {

namespace {

constexpr int kGoldenIters = 48;

Intercepts intercepts_unchecked(const BanditClass& inst, std::span<const double> beta) {
    Intercepts r{INFINITY, -INFINITY, 0, 0};
    for (int a = 0; a < inst.K(); ++a) {
        double z = log_partition_unchecked(inst, a, beta);
        if (z < r.I) {
            r.I = z;
            r.argmin_arm = a;
        }
        if (z > r.L) {
            r.L = z;
            r.argmax_arm = a;
        }
    }
    return r;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

// Lattice points of the (n-1)-simplex with denominator r.
void simplex_lattice(int n, int r, std::vector<std::vector<double>>& out) {
    std::vector<int> c(n, 0);
    std::function<void(int, int)> rec = [&](int k, int left) {
        if (k == n - 1) {
            c[k] = left;
            std::vector<double> lam(n);
            for (int j = 0; j < n; ++j) lam[j] = double(c[j]) / r;
            out.push_back(std::move(lam));
            return;
        }
        for (int v = 0; v <= left; ++v) {
            c[k] = v;
            rec(k + 1, left - v);
        }
    };
    rec(0, r);
}

double binom(int n, int k) {
    double v = 1.0;
    for (int j = 1; j <= k; ++j) v = v * (n - k + j) / j;
    return v;
}

}  // namespace

Intercepts intercepts(const BanditClass& inst, std::span<const double> beta) {
    auto b = checked_simplex(beta, "intercepts");
    return intercepts_unchecked(inst, b);
}

std::vector<double> edge_point(int m, int i, int j, double t) {
    std::vector<double> b(m, 0.0);
    b[i] = t;
    b[j] = 1.0 - t;
    return b;
}

EdgeSup edge_sup(const BanditClass& inst, int i, int j) {
    if (i == j) throw ValidationError("edge_sup: the pair must consist of two distinct hypotheses");
    const int m = inst.m();
    if (i < 0 || j < 0 || i >= m || j >= m) throw ValidationError("edge_sup: hypothesis index out of range");
    auto I_at = [&](double t) { return intercepts_unchecked(inst, edge_point(m, i, j, t)).I; };
    const int n = 200;
    int best = 0;
    double best_v = -INFINITY;
    for (int k = 0; k <= n; ++k) {
        double v = I_at(double(k) / n);
        if (v > best_v) {
            best_v = v;
            best = k;
        }
    }
    double lo = std::max(0.0, (best - 1.0) / n), hi = std::min(1.0, (best + 1.0) / n);
    double t_star = double(best) / n;
    double v = golden_max(I_at, lo, hi, 1e-12, &t_star);
    EdgeSup e{i, j, best_v, double(best) / n};
    if (v > best_v) {
        e.value = v;
        e.t = t_star;
    }
    return e;
}

std::vector<EdgeSup> all_edge_sups(const BanditClass& inst) {
    std::vector<EdgeSup> out;
    for (auto [i, j] : all_pairs(inst.m())) out.push_back(edge_sup(inst, i, j));
    return out;
}

double min_L_over_hull(const BanditClass& inst, const std::vector<std::vector<double>>& betas,
                       std::vector<double>* lambda_star) {
    const int n = static_cast<int>(betas.size());
    if (n == 0) throw DomainError("min_L_over_hull: empty generator set");
    const int m = inst.m();
    std::vector<double> beta(m);
    auto L_of = [&](const std::vector<double>& lam) {
        std::fill(beta.begin(), beta.end(), 0.0);
        for (int k = 0; k < n; ++k)
            for (int c = 0; c < m; ++c) beta[c] += lam[k] * betas[k][c];
        return intercepts_unchecked(inst, beta).L;
    };
    if (n == 1) {
        if (lambda_star) *lambda_star = {1.0};
        return L_of({1.0});
    }
    // Coarse lattice over the whole simplex, then zooming local grids around the incumbent.
    int r = 1;
    while (binom(r + 1 + n - 1, n - 1) <= 600.0) ++r;
    std::vector<std::vector<double>> pts;
    simplex_lattice(n, r, pts);
    std::vector<double> best_lam = pts[0];
    double best = INFINITY;
    for (const auto& p : pts) {
        double v = L_of(p);
        if (v < best) {
            best = v;
            best_lam = p;
        }
    }
    const int side = n <= 3 ? 4 : 2;
    double h = 1.0 / r;
    std::vector<int> off(n - 1);
    std::vector<double> cand(n);
    for (int level = 0; level < 40 && h > 1e-11; ++level) {
        const std::vector<double> center = best_lam;
        std::fill(off.begin(), off.end(), -side);
        while (true) {
            double rest = 1.0;
            bool ok = true;
            for (int k = 0; k + 1 < n; ++k) {
                cand[k] = center[k] + off[k] * h / side;
                if (cand[k] < 0.0) ok = false;
                rest -= cand[k];
            }
            cand[n - 1] = rest;
            if (ok && rest >= 0.0) {
                double v = L_of(cand);
                if (v < best) {
                    best = v;
                    best_lam = cand;
                }
            }
            int k = 0;
            while (k < n - 1 && off[k] == side) off[k++] = -side;
            if (k == n - 1) break;
            ++off[k];
        }
        h *= 0.5;
    }
    if (lambda_star) *lambda_star = best_lam;
    return best;
}

GResult g_of_r(const BanditClass& inst, double R, const DEOptions& opt) {
    if (!(R >= 0.0)) throw DomainError("g_of_r: R must be nonnegative");
    const int m = inst.m();
    GResult res;
    for (const auto& e : all_edge_sups(inst))
        if (e.value < R) res.pairs.emplace_back(e.i, e.j);
    if (res.pairs.empty()) {
        res.value = INFINITY;
        return res;
    }
    const int d = static_cast<int>(res.pairs.size());
    std::vector<std::vector<double>> betas(d);
    auto obj = [&](const Vec& t) {
        for (int k = 0; k < d; ++k) betas[k] = edge_point(m, res.pairs[k].first, res.pairs[k].second, t[k]);
        return -min_L_over_hull(inst, betas);
    };
    res.de = differential_evolution_min(obj, d, opt);
    res.value = -res.de.f;
    res.t = res.de.x;
    if (!res.de.converged)
        throw SolverError("g_of_r: differential evolution did not converge", res.value - res.de.spread, res.value);
    return res;
}

BSetSpec::BSetSpec(BanditClass inst, double R, std::vector<std::pair<int, int>> pairs, std::vector<double> t,
                   std::vector<EdgeSup> edges)
    : inst_(std::move(inst)), R_(R), pairs_(std::move(pairs)), t_(std::move(t)), edges_(std::move(edges)) {
    if (pairs_.size() != t_.size()) throw ValidationError("BSetSpec: one edge parameter per perturbed pair");
    for (std::size_t k = 0; k < pairs_.size(); ++k) {
        if (!(t_[k] >= 0.0 && t_[k] <= 1.0)) throw ValidationError("BSetSpec: edge parameter outside [0, 1]");
        beta_tilde_.push_back(edge_point(inst_.m(), pairs_[k].first, pairs_[k].second, t_[k]));
    }
}

double BSetSpec::I(std::span<const double> beta) const { return intercepts_unchecked(inst_, beta).I; }
double BSetSpec::L(std::span<const double> beta) const { return intercepts_unchecked(inst_, beta).L; }

double BSetSpec::I_concave(std::span<const double> beta) const {
    const int m = inst_.m(), d = static_cast<int>(pairs_.size());
    if (d == 0) return I(beta);
    // Maximize R sum(lambda) + lambda_b I(rest / lambda_b) over lambda >= 0 with
    // sum(lambda) <= 1 and sum_k lambda_k beta_tilde_k <= beta; the perspective is concave.
    std::vector<Vec> A(1 + m, Vec(d, 0.0));
    Vec b(1 + m);
    A[0].assign(d, 1.0);
    b[0] = 1.0;
    for (int c = 0; c < m; ++c) {
        for (int k = 0; k < d; ++k) A[1 + c][k] = beta_tilde_[k][c];
        b[1 + c] = beta[c];
    }
    Vec rest(m);
    auto f = [&](const Vec& lam) {
        double s = 0.0;
        for (double v : lam) s += v;
        double lb = 1.0 - s, mass = 0.0;
        for (int c = 0; c < m; ++c) {
            double r = beta[c];
            for (int k = 0; k < d; ++k) r -= lam[k] * beta_tilde_[k][c];
            rest[c] = std::max(r, 0.0);
            mass += rest[c];
        }
        double v = R_ * s;
        if (lb > 1e-14 && mass > 0.0) {
            for (auto& r : rest) r /= mass;
            v += lb * I(rest);
        }
        return v;
    };
    return nested_golden_polytope_max(f, A, b, 40, nullptr);
}

nlohmann::json BSetSpec::to_json() const {
    nlohmann::json j;
    j["R"] = round_sig(R_);
    j["pairs"] = nlohmann::json::array();
    for (std::size_t k = 0; k < pairs_.size(); ++k) {
        nlohmann::json bt = nlohmann::json::array();
        for (double v : beta_tilde_[k]) bt.push_back(round_sig(v));
        j["pairs"].push_back({{"i", pairs_[k].first}, {"j", pairs_[k].second}, {"t", round_sig(t_[k])},
                              {"beta_tilde", bt}});
    }
    j["edge_sups"] = nlohmann::json::array();
    for (const auto& e : edges_)
        j["edge_sups"].push_back({{"i", e.i}, {"j", e.j}, {"value", round_sig(e.value)}, {"t", round_sig(e.t)}});
    return j;
}

ApproachResult r_approach(const BanditClass& inst, const DEOptions& opt) {
    auto edges = all_edge_sups(inst);
    std::vector<EdgeSup> sorted = edges;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const EdgeSup& a, const EdgeSup& b) { return a.value < b.value; });
    const int P = static_cast<int>(sorted.size());
    ApproachResult best;
    // R up to the smallest edge sup needs no perturbation (G is +infinity there).
    best.value = sorted.empty() ? 0.0 : sorted[0].value;
    best.g_at_value = INFINITY;
    best.spec = BSetSpec(inst, best.value, {}, {}, edges);
    if (P == 0) return best;
    int s = 0;
    while (s < P) {
        int e = s;
        while (e + 1 < P && sorted[e + 1].value == sorted[s].value) ++e;
        // R in (a_s, a_{e+1}] perturbs the pairs sorted[0..e].
        const double lower = sorted[s].value;
        const double upper = e + 1 < P ? sorted[e + 1].value : INFINITY;
        std::vector<std::pair<int, int>> pairs;
        for (int k = 0; k <= e; ++k) pairs.emplace_back(sorted[k].i, sorted[k].j);
        const int d = static_cast<int>(pairs.size());
        std::vector<std::vector<double>> betas(d);
        auto obj = [&](const Vec& t) {
            for (int k = 0; k < d; ++k) betas[k] = edge_point(inst.m(), pairs[k].first, pairs[k].second, t[k]);
            return -min_L_over_hull(inst, betas);
        };
        DEResult de = differential_evolution_min(obj, d, opt);
        if (!de.converged)
            throw SolverError("r_approach: differential evolution did not converge", -de.f - de.spread, -de.f);
        const double G = -de.f;
        if (!(G > lower)) break;  // G is non-increasing, later intervals cannot qualify
        const double cand = std::min(upper, G);
        if (cand > best.value) {
            best.value = cand;
            best.g_at_value = G;
            best.spec = BSetSpec(inst, cand, pairs, de.x, edges);
        }
        s = e + 1;
    }
    return best;
}

double halfspace_gap(const BSetSpec& spec, std::span<const double> x, std::vector<double>* beta_star) {
    const int m = spec.m();
    std::vector<double> xv(x.begin(), x.end());
    auto f = [&](const Vec& beta) { return dot(beta, xv) - spec.I(beta); };
    return nested_golden_simplex_min(f, m, kGoldenIters, beta_star);
}

double membership_l(const BSetSpec& spec, std::span<const double> x) {
    if (static_cast<int>(x.size()) != spec.m()) throw ValidationError("membership_l: state has wrong length");
    double l = halfspace_gap(spec, x);
    for (const auto& bt : spec.beta_tilde()) l = std::min(l, dot(bt, x) - spec.R());
    return l;
}

Projector::Projector(const BSetSpec& spec, double tol, int max_iterations)
    : spec_(&spec), tol_(tol), max_iter_(max_iterations) {
    const int m = spec.m();
    for (int k = 0; k < m; ++k) {
        std::vector<double> e(m, 0.0);
        e[k] = 1.0;
        G_.push_back(e);
        h_.push_back(0.0);
    }
    for (const auto& bt : spec.beta_tilde()) {
        G_.push_back(bt);
        h_.push_back(spec.R());
    }
}

Projection Projector::project(std::span<const double> x) {
    const int m = spec_->m();
    if (static_cast<int>(x.size()) != m) throw ValidationError("project_to_bset: state has wrong length");
    Projection p;
    p.y.assign(x.begin(), x.end());
    p.l_at_x = membership_l(*spec_, x);
    p.l_at_y = p.l_at_x;
    if (p.l_at_x >= 0.0) return p;
    std::vector<double> beta_cut;
    for (int it = 1; it <= max_iter_; ++it) {
        p.iterations = it;
        Vec rhs(G_.size()), z;
        for (std::size_t r = 0; r < G_.size(); ++r) rhs[r] = h_[r] - dot(G_[r], x);
        if (!least_distance(G_, rhs, z)) throw SolverError("project_to_bset: cutting-plane program infeasible", 0, 0);
        for (int k = 0; k < m; ++k) p.y[k] = x[k] + z[k];
        double gap = halfspace_gap(*spec_, p.y, &beta_cut);
        double pair_gap = INFINITY;
        for (const auto& bt : spec_->beta_tilde()) pair_gap = std::min(pair_gap, dot(bt, p.y) - spec_->R());
        p.l_at_y = std::min(gap, pair_gap);
        if (gap >= -tol_) break;
        if (it == max_iter_)
            throw SolverError("project_to_bset: cutting planes did not converge", p.l_at_y, 0.0);
        G_.push_back(beta_cut);
        h_.push_back(spec_->I(beta_cut));
        ++p.cuts;
    }
    double d1 = 0.0, d2 = 0.0;
    p.beta.assign(m, 0.0);
    for (int k = 0; k < m; ++k) {
        double diff = p.y[k] - x[k];
        p.beta[k] = std::max(diff, 0.0);
        d1 += p.beta[k];
        d2 += diff * diff;
    }
    p.distance = std::sqrt(d2);
    if (d1 > 0.0)
        for (auto& b : p.beta) b /= d1;
    return p;
}

Projection project_to_bset(const BSetSpec& spec, std::span<const double> x) {
    Projector pr(spec);
    return pr.project(x);
}

AllocationChoice allocation_from_projection(const BSetSpec& spec, const Projection& proj) {
    if (proj.beta.empty()) throw DomainError("allocation_from_projection: the state is already in the set");
    AllocationChoice c;
    c.beta_n = proj.beta;
    Intercepts in = intercepts_unchecked(spec.instance(), c.beta_n);
    // At the projection l(y) = <beta_n, y> - I'_concave(beta_n), so the halfspace value is
    // recovered from l(y); lifting to <beta_n, y> keeps the separation exact when l(y) > 0.
    const double by = dot(c.beta_n, proj.y);
    double target = by + std::max(-proj.l_at_y, 0.0);
    if (target < in.I - 1e-7 || target > in.L + 1e-7)
        throw std::logic_error("allocation_from_projection: halfspace value " + std::to_string(target) +
                               " outside [I, L] = [" + std::to_string(in.I) + ", " + std::to_string(in.L) + "]");
    target = std::clamp(target, in.I, in.L);
    c.arm_lo = in.argmin_arm;
    c.arm_hi = in.argmax_arm;
    c.theta = in.L - in.I > 1e-15 ? (target - in.I) / (in.L - in.I) : 0.0;
    c.w.assign(spec.instance().K(), 0.0);
    c.w[c.arm_lo] += 1.0 - c.theta;
    c.w[c.arm_hi] += c.theta;
    c.target = (1.0 - c.theta) * in.I + c.theta * in.L;
    c.residual = c.target - by;
    return c;
}

std::vector<double> payoff(const BanditClass& inst, std::span<const double> w,
                           const std::vector<std::vector<double>>& Q) {
    std::vector<double> f(inst.m(), 0.0);
    for (int a = 0; a < inst.K(); ++a) {
        if (w[a] == 0.0) continue;
        if (Q[a].empty()) throw ValidationError("payoff: arm with positive weight has no samples");
        for (int i = 0; i < inst.m(); ++i) f[i] += w[a] * kl_divergence(Q[a], inst.nu(i, a).probs());
    }
    return f;
}

ApproachRun approachability_run(const BSetSpec& spec, const BatchSampler& sampler, int T, int B) {
    if (B < 1 || T < B) throw ValidationError("approachability_run: need 1 <= B <= T");
    const int m = spec.m(), K = spec.instance().K();
    Projector projector(spec);
    ApproachRun run;
    std::vector<double> x(m, 0.0);
    Projection cur = projector.project(x);
    double d_prev = cur.distance;
    const int base = T / B;
    for (int n = 0; n < B; ++n) {
        const int nb = n + 1 < B ? base : T - base * (B - 1);
        ApproachStep st;
        st.l = cur.l_at_x;
        const std::vector<double>& y_prev = cur.y;
        if (cur.beta.empty()) {
            std::vector<double> uni(K, 1.0 / K);
            st.counts = largest_remainder(uni, nb);
        } else {
            AllocationChoice c = allocation_from_projection(spec, cur);
            // Rounding the mixture toward the larger-intercept arm keeps the realized
            // allocation's intercept at or above the target.
            st.counts.assign(K, 0);
            int hi = static_cast<int>(std::ceil(c.theta * nb - 1e-9));
            hi = std::clamp(hi, 0, nb);
            st.counts[c.arm_hi] += hi;
            st.counts[c.arm_lo] += nb - hi;
        }
        st.w.resize(K);
        for (int a = 0; a < K; ++a) st.w[a] = double(st.counts[a]) / nb;
        auto Q = sampler(st.counts);
        auto f = payoff(spec.instance(), st.w, Q);
        double gap2 = 0.0;
        for (int k = 0; k < m; ++k) gap2 += (f[k] - y_prev[k]) * (f[k] - y_prev[k]);
        st.payoff_gap = std::sqrt(gap2);
        run.M = std::max(run.M, st.payoff_gap);
        for (int k = 0; k < m; ++k) x[k] = (n * x[k] + f[k]) / (n + 1);
        cur = projector.project(x);
        st.distance = cur.distance;
        // (n+1)^2 d_{n+1}^2 <= n^2 d_n^2 + |f_{n+1} - y_n|^2
        double lhs = double(n + 1) * (n + 1) * st.distance * st.distance;
        double rhs = double(n) * n * d_prev * d_prev + gap2;
        run.recursion_violation = std::max(run.recursion_violation, lhs - rhs);
        d_prev = st.distance;
        st.x = x;
        run.steps.push_back(std::move(st));
    }
    run.x = x;
    run.decision = static_cast<int>(std::min_element(x.begin(), x.end()) - x.begin());
    run.terminal_g = terminal_g(x);
    return run;
}

BSetReport verify_bset(const BSetSpec& spec, int n_samples, std::uint64_t seed) {
    const BanditClass& inst = spec.instance();
    const int m = inst.m(), K = inst.K(), X = inst.support_size();
    BSetReport rep;
    rep.max_violation = -INFINITY;
    if (spec.pairs().empty() && spec.R() <= 0.0) rep.max_violation = 0.0;
    Projector projector(spec);
    Rng rng(seed);
    const double scale = 4.0 * std::max(spec.R(), 1e-3);
    std::vector<double> x(m);
    for (int s = 0; s < n_samples; ++s) {
        ++rep.samples;
        for (auto& v : x) v = scale * rng.uniform();
        Projection p = projector.project(x);
        if (p.beta.empty()) {
            ++rep.inside;
            continue;
        }
        AllocationChoice c = allocation_from_projection(spec, p);
        rep.max_residual = std::max(rep.max_residual, std::abs(c.residual));
        // Adversary: random empirical laws, or the arm laws of a random hypothesis.
        std::vector<std::vector<double>> Q(K);
        if (rng.uniform() < 0.5) {
            for (int a = 0; a < K; ++a) Q[a] = rng.dirichlet_ones(X);
        } else {
            int i = static_cast<int>(rng.below(m));
            for (int a = 0; a < K; ++a) Q[a] = inst.nu(i, a).probs();
        }
        auto f = payoff(inst, c.w, Q);
        double v = 0.0;
        for (int k = 0; k < m; ++k) v += (x[k] - p.y[k]) * (f[k] - p.y[k]);
        rep.max_violation = std::max(rep.max_violation, v);
    }
    if (rep.samples == rep.inside) rep.max_violation = 0.0;
    return rep;
}

}  // namespace asht
