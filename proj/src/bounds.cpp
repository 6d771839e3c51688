#include "asht/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "asht/errors.hpp"
#include "asht/rng.hpp"

namespace asht {

double arm_hamiltonian(const BanditClass& inst, int a, std::span<const double> p) {
    const int m = inst.m(), X = inst.support_size();
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += p[i];
    double e[64];
    std::vector<double> big;
    double* ex = e;
    if (X > 64) {
        big.resize(X);
        ex = big.data();
    }
    double emax = -INFINITY;
    int xmax = 0;
    for (int x = 0; x < X; ++x) {
        const double* L = inst.log_column(a, x);
        double v = 0.0;
        for (int i = 0; i < m; ++i) v += p[i] * L[i];
        ex[x] = v;
        if (v > emax) emax = v, xmax = x;
    }
    // Sum p <= 0: min_x -sum_i p_i log nu^i_a(x) = -emax.
    if (!(s > 0.0)) return -emax;
    // Sum p > 0: -s log sum_x exp(e_x / s), shifted by emax; the largest term is exactly 1.
    double acc = 0.0;
    for (int x = 0; x < X; ++x)
        if (x != xmax) acc += std::exp((ex[x] - emax) / s);
    return -emax - s * std::log1p(acc);
}

HamiltonianValue hamiltonian(const BanditClass& inst, std::span<const double> p) {
    const int m = inst.m(), K = inst.K(), X = inst.support_size();
    if (static_cast<int>(p.size()) != m) throw ValidationError("hamiltonian: momentum has wrong length");
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += p[i];
    HamiltonianValue h{-INFINITY, 0};
    if (!(s > 0.0) || K > 64) {
        for (int a = 0; a < K; ++a) {
            double v = arm_hamiltonian(inst, a, p);
            if (v > h.value) h = {v, a};
        }
        return h;
    }
    // -emax_a bounds arm a's value from above, so arms below the incumbent skip the exp and log.
    double ub[64];
    for (int a = 0; a < K; ++a) {
        double emax = -INFINITY;
        for (int x = 0; x < X; ++x) {
            const double* L = inst.log_column(a, x);
            double v = 0.0;
            for (int i = 0; i < m; ++i) v += p[i] * L[i];
            emax = std::max(emax, v);
        }
        ub[a] = -emax;
    }
    for (int a = 0; a < K; ++a) {
        if (ub[a] <= h.value) continue;
        double v = arm_hamiltonian(inst, a, p);
        if (v > h.value) h = {v, a};
    }
    return h;
}

double terminal_g(std::span<const double> x) {
    if (x.size() < 2) throw DomainError("terminal_g: need at least two coordinates");
    double lo = INFINITY, second = INFINITY;
    for (double v : x) {
        if (v < lo) {
            second = lo;
            lo = v;
        } else if (v < second) {
            second = v;
        }
    }
    return second;
}

double r_ub(const BanditClass& inst) {
    double best = INFINITY;
    for (int i = 0; i < inst.m(); ++i)
        for (int j = i + 1; j < inst.m(); ++j) {
            double mx = 0.0;
            for (int a = 0; a < inst.K(); ++a)
                mx = std::max(mx, chernoff_information(inst.nu(i, a), inst.nu(j, a)));
            best = std::min(best, mx);
        }
    return best;
}

double static_exponent(const BanditClass& inst, std::span<const double> w) {
    const int m = inst.m(), K = inst.K();
    double worst = INFINITY;
    std::vector<double> beta(m, 0.0);
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
            auto f = [&](double s) {
                beta[i] = 1.0 - s;
                beta[j] = s;
                double v = 0.0;
                for (int a = 0; a < K; ++a)
                    if (w[a] > 0.0) v += w[a] * log_partition_unchecked(inst, a, beta);
                return v;
            };
            double v = golden_max(f, 0.0, 1.0, 1e-10);
            beta[i] = beta[j] = 0.0;
            worst = std::min(worst, v);
        }
    return worst;
}

namespace {

Vec weights_from_free(const Vec& z) {
    Vec v(z.size() + 1);
    double s = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
        v[k] = z[k];
        s += z[k];
    }
    v[z.size()] = 1.0 - s;
    return project_simplex(v);
}

}  // namespace

StaticResult r_static(const BanditClass& inst, std::uint64_t seed) {
    const int K = inst.K();
    StaticResult res;
    if (K == 1) {
        res.w_star = {1.0};
        res.value = static_exponent(inst, res.w_star);
        return res;
    }
    Rng rng(seed);
    auto obj = [&](const Vec& z) { return -static_exponent(inst, weights_from_free(z)); };
    double best = INFINITY;
    Vec best_z;
    int total_iter = 0;
    bool any_converged = false;
    std::vector<double> finals;
    for (int start = 0; start < 20; ++start) {
        Vec w0 = rng.dirichlet_ones(K);
        Vec z0(w0.begin(), w0.end() - 1);
        auto nm = nelder_mead_min(obj, z0, 0.1, 1e-13, 1e-9, 4000);
        total_iter += nm.iterations;
        any_converged = any_converged || nm.converged;
        finals.push_back(-nm.f);
        if (nm.f < best) {
            best = nm.f;
            best_z = nm.x;
        }
    }
    res.value = -best;
    res.w_star = weights_from_free(best_z);
    res.info.iterations = total_iter;
    // Achieved tolerance: gap between the best start and the runner-up that landed in the same basin.
    double tol = 0.0;
    for (double f : finals)
        if (res.value - f < 1e-6) tol = std::max(tol, res.value - f);
    res.info.tolerance = std::max(tol, 1e-10);
    res.info.converged = any_converged;
    if (!any_converged)
        throw SolverError("r_static: Nelder-Mead did not converge in any start", res.value, r_ub(inst));
    return res;
}

double go1_inner(const BanditClass& inst, const std::vector<std::vector<double>>& Q) {
    const int m = inst.m(), K = inst.K();
    std::vector<Vec> D(m, Vec(K));
    for (int i = 0; i < m; ++i)
        for (int a = 0; a < K; ++a)
            D[i][a] = kl_divergence(std::span<const double>(Q[a]), std::span<const double>(inst.nu(i, a).probs()));
    double best = 0.0;
    std::vector<Vec> C;
    for (int j = 0; j < m; ++j) {
        C.clear();
        for (int i = 0; i < m; ++i)
            if (i != j) C.push_back(D[i]);
        double v;
        if (C.size() == 1)
            v = *std::max_element(C[0].begin(), C[0].end());
        else
            v = matrix_game_value(C);
        best = std::max(best, v);
    }
    return best;
}

namespace {

std::vector<std::vector<double>> q_from_cube(const Vec& u, int K, int X) {
    std::vector<std::vector<double>> Q(K);
    for (int a = 0; a < K; ++a) {
        Vec part(u.begin() + a * (X - 1), u.begin() + (a + 1) * (X - 1));
        Q[a] = cube_to_simplex(part);
    }
    return Q;
}

}  // namespace

GoResult r_go_1(const BanditClass& inst, const DEOptions& opt) {
    const int K = inst.K(), X = inst.support_size();
    auto obj = [&](const Vec& u) { return go1_inner(inst, q_from_cube(u, K, X)); };
    DEResult de = differential_evolution_min(obj, K * (X - 1), opt);
    GoResult res;
    res.value = de.f;
    res.argmin = q_from_cube(de.x, K, X);
    res.info = {de.generations, std::max(de.spread, 0.0), de.converged};
    if (!de.converged) {
        double lo = r_static(inst).value;
        throw SolverError("r_go_1: differential evolution exhausted its generation budget", lo, de.f);
    }
    return res;
}

double hopf_inner(const BanditClass& inst, std::span<const double> lambda) {
    const int m = inst.m();
    const auto S = all_pairs(m);
    const int ns = static_cast<int>(S.size());
    auto P_of = [&](const Vec& beta) {
        Vec P(m, 0.0);
        for (int k = 0; k < ns; ++k) {
            P[S[k].first] += lambda[k] * beta[k];
            P[S[k].second] += lambda[k] * (1.0 - beta[k]);
        }
        return P;
    };
    double best = 0.0;
    Vec gP, g(ns);
    for (int a = 0; a < inst.K(); ++a) {
        // Projected gradient ascent with backtracking; the objective is concave in beta.
        Vec beta(ns, 0.5);
        double f = zeta_and_grad(inst, a, P_of(beta), gP);
        double t = 1.0;
        for (int it = 0; it < 500; ++it) {
            for (int k = 0; k < ns; ++k) g[k] = lambda[k] * (gP[S[k].first] - gP[S[k].second]);
            bool moved = false;
            for (int bt = 0; bt < 60; ++bt) {
                Vec nb(ns);
                double lin = 0.0, step = 0.0;
                for (int k = 0; k < ns; ++k) {
                    nb[k] = std::clamp(beta[k] + t * g[k], 0.0, 1.0);
                    lin += g[k] * (nb[k] - beta[k]);
                    step = std::max(step, std::abs(nb[k] - beta[k]));
                }
                if (step < 1e-13) break;
                Vec ngP;
                double nf = zeta_and_grad(inst, a, P_of(nb), ngP);
                if (nf >= f + 1e-4 * lin) {
                    beta = nb;
                    f = nf;
                    gP = ngP;
                    moved = step > 1e-12;
                    t = std::min(t * 2.0, 1e6);
                    break;
                }
                t *= 0.5;
            }
            if (!moved) break;
        }
        best = std::max(best, f);
    }
    return best;
}

GoResult r_hopf(const BanditClass& inst, const DEOptions& opt) {
    const int ns = inst.m() * (inst.m() - 1) / 2;
    auto obj = [&](const Vec& u) {
        Vec lam = cube_to_simplex(u);
        return hopf_inner(inst, lam);
    };
    DEResult de = differential_evolution_min(obj, ns - 1, opt);
    GoResult res;
    res.value = de.f;
    res.argmin = {cube_to_simplex(de.x)};
    res.info = {de.generations, std::max(de.spread, 0.0), de.converged};
    if (!de.converged) throw SolverError("r_hopf: differential evolution exhausted its generation budget", 0.0, de.f);
    return res;
}

std::vector<std::string> BoundsReport::check_ladder() const {
    std::vector<std::string> bad;
    if (r_static > r_go_1 + 1e-6) bad.push_back("r_static > r_go_1");
    if (r_go_1 > r_ub + 1e-6) bad.push_back("r_go_1 > r_ub");
    if (r_go_inf) {
        if (r_static - 1e-6 > *r_go_inf) bad.push_back("r_static > r_go_inf");
        if (*r_go_inf > r_go_1 + 1e-6) bad.push_back("r_go_inf > r_go_1");
    }
    return bad;
}

nlohmann::json BoundsReport::to_json() const {
    nlohmann::json j;
    j["r_static"] = round_sig(r_static);
    j["r_ub"] = round_sig(r_ub);
    j["r_go_1"] = round_sig(r_go_1);
    j["r_hopf"] = round_sig(r_hopf);
    j["r_go_inf"] = r_go_inf ? nlohmann::json(round_sig(*r_go_inf)) : nlohmann::json(nullptr);
    j["r_approach"] = r_approach ? nlohmann::json(round_sig(*r_approach)) : nlohmann::json(nullptr);
    nlohmann::json w = nlohmann::json::array();
    for (double v : w_static) w.push_back(round_sig(v));
    j["w_static"] = w;
    for (const auto& [name, info] : meta)
        j["solver"][name] = {{"iterations", info.iterations},
                             {"tolerance", round_sig(info.tolerance)},
                             {"converged", info.converged}};
    return j;
}

BoundsReport compute_bounds(const BanditClass& inst, const DEOptions& de) {
    BoundsReport rep;
    rep.r_ub = r_ub(inst);
    rep.meta["r_ub"] = {0, 1e-10, true};
    auto st = r_static(inst);
    rep.r_static = st.value;
    rep.w_static = st.w_star;
    rep.meta["r_static"] = st.info;
    auto g1 = r_go_1(inst, de);
    rep.r_go_1 = g1.value;
    rep.meta["r_go_1"] = g1.info;
    auto hp = r_hopf(inst, de);
    rep.r_hopf = hp.value;
    rep.meta["r_hopf"] = hp.info;
    return rep;
}

}  // namespace asht
