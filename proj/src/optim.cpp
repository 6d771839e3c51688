#include "asht/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "asht/errors.hpp"
#include "asht/rng.hpp"

namespace asht {

namespace {
constexpr double kInvPhi = 0.6180339887498949;
}

double golden_max(const std::function<double(double)>& f, double lo, double hi, double tol, double* argmax) {
    double a = lo, b = hi;
    double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
        }
    }
    double best_x = fc >= fd ? c : d, best = std::max(fc, fd);
    // Endpoints catch maxima sitting exactly on the boundary.
    for (double x : {lo, hi}) {
        double v = f(x);
        if (v > best) {
            best = v;
            best_x = x;
        }
    }
    if (argmax) *argmax = best_x;
    return best;
}

NelderMeadResult nelder_mead_min(const Objective& f, Vec x0, double step, double ftol, double xtol,
                                 int max_iter) {
    const int n = static_cast<int>(x0.size());
    NelderMeadResult res;
    if (n == 0) {
        res.x = x0;
        res.f = f(x0);
        res.converged = true;
        return res;
    }
    std::vector<Vec> s(n + 1, x0);
    for (int k = 0; k < n; ++k) s[k + 1][k] += step;
    Vec fv(n + 1);
    for (int k = 0; k <= n; ++k) fv[k] = f(s[k]);
    std::vector<int> idx(n + 1);
    int it = 0;
    for (; it < max_iter; ++it) {
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
        int best = idx[0], worst = idx[n], second = idx[n - 1];
        double size = 0.0;
        for (int k = 0; k <= n; ++k)
            for (int d = 0; d < n; ++d) size = std::max(size, std::abs(s[k][d] - s[best][d]));
        if (fv[worst] - fv[best] <= ftol && size <= xtol) {
            res.converged = true;
            break;
        }
        Vec cen(n, 0.0);
        for (int k = 0; k <= n; ++k)
            if (k != worst)
                for (int d = 0; d < n; ++d) cen[d] += s[k][d] / n;
        auto along = [&](double t) {
            Vec p(n);
            for (int d = 0; d < n; ++d) p[d] = cen[d] + t * (s[worst][d] - cen[d]);
            return p;
        };
        Vec xr = along(-1.0);
        double fr = f(xr);
        if (fr < fv[best]) {
            Vec xe = along(-2.0);
            double fe = f(xe);
            if (fe < fr) {
                s[worst] = xe;
                fv[worst] = fe;
            } else {
                s[worst] = xr;
                fv[worst] = fr;
            }
        } else if (fr < fv[second]) {
            s[worst] = xr;
            fv[worst] = fr;
        } else {
            Vec xc = fr < fv[worst] ? along(-0.5) : along(0.5);
            double fc = f(xc);
            if (fc < std::min(fr, fv[worst])) {
                s[worst] = xc;
                fv[worst] = fc;
            } else {
                for (int k = 0; k <= n; ++k) {
                    if (k == best) continue;
                    for (int d = 0; d < n; ++d) s[k][d] = s[best][d] + 0.5 * (s[k][d] - s[best][d]);
                    fv[k] = f(s[k]);
                }
            }
        }
    }
    int b = static_cast<int>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    res.x = s[b];
    res.f = fv[b];
    res.iterations = it;
    return res;
}

DEResult differential_evolution_min(const Objective& f, int dim, const DEOptions& opt) {
    DEResult res;
    if (dim == 0) {
        res.f = f(Vec{});
        res.converged = true;
        return res;
    }
    const int np = std::max(opt.pop_per_dim * dim, 5);
    Rng rng(opt.seed);
    std::vector<Vec> pop(np, Vec(dim));
    Vec fit(np);
    for (int k = 0; k < np; ++k) {
        for (auto& v : pop[k]) v = rng.uniform();
        fit[k] = f(pop[k]);
    }
    Vec trial(dim);
    int gen = 0;
    for (; gen < opt.max_generations; ++gen) {
        auto [lo, hi] = std::minmax_element(fit.begin(), fit.end());
        if (*hi - *lo < opt.tol) {
            res.converged = true;
            break;
        }
        for (int k = 0; k < np; ++k) {
            int r1, r2, r3;
            do r1 = static_cast<int>(rng.below(np)); while (r1 == k);
            do r2 = static_cast<int>(rng.below(np)); while (r2 == k || r2 == r1);
            do r3 = static_cast<int>(rng.below(np)); while (r3 == k || r3 == r1 || r3 == r2);
            int jr = static_cast<int>(rng.below(dim));
            for (int d = 0; d < dim; ++d) {
                if (d == jr || rng.uniform() < opt.CR) {
                    double v = pop[r1][d] + opt.F * (pop[r2][d] - pop[r3][d]);
                    // Bounce back halfway toward the violated face.
                    if (v < 0.0) v = 0.5 * pop[k][d];
                    if (v > 1.0) v = 0.5 * (pop[k][d] + 1.0);
                    trial[d] = v;
                } else {
                    trial[d] = pop[k][d];
                }
            }
            double ft = f(trial);
            if (ft <= fit[k]) {
                pop[k] = trial;
                fit[k] = ft;
            }
        }
    }
    auto [lo, hi] = std::minmax_element(fit.begin(), fit.end());
    res.x = pop[lo - fit.begin()];
    res.f = *lo;
    res.spread = *hi - *lo;
    res.generations = gen;
    return res;
}

Vec project_simplex(const Vec& v) {
    Vec u = v;
    std::sort(u.begin(), u.end(), std::greater<>());
    double css = 0.0, theta = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        css += u[k];
        double t = (css - 1.0) / static_cast<double>(k + 1);
        if (u[k] - t > 0.0) theta = t;
    }
    Vec out(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) out[k] = std::max(v[k] - theta, 0.0);
    return out;
}

Vec cube_to_simplex(const Vec& u) {
    Vec s = u;
    std::sort(s.begin(), s.end());
    Vec out(u.size() + 1);
    double prev = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        out[k] = s[k] - prev;
        prev = s[k];
    }
    out[u.size()] = 1.0 - prev;
    return out;
}

namespace {

// Golden-section minimization with a fixed iteration count; tracks the best point seen.
template <class F>
double golden_min_fixed(F&& f, double lo, double hi, int iters) {
    double a = lo, b = hi;
    double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
    double fc = f(c), fd = f(d);
    double best = std::min({fc, fd, f(lo), f(hi)});
    for (int k = 0; k < iters; ++k) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
            best = std::min(best, fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
            best = std::min(best, fd);
        }
    }
    return best;
}

}  // namespace

double nested_golden_simplex_min(const Objective& f, int m, int iters, Vec* argmin) {
    Vec beta(m, 0.0), best_beta;
    double best = INFINITY;
    std::function<double(int, double)> solve = [&](int k, double rem) -> double {
        if (k == m - 1) {
            beta[k] = rem;
            double v = f(beta);
            if (v < best) {
                best = v;
                best_beta = beta;
            }
            return v;
        }
        return golden_min_fixed(
            [&](double t) {
                beta[k] = t;
                for (int j = k + 1; j < m; ++j) beta[j] = 0.0;
                return solve(k + 1, std::max(rem - t, 0.0));
            },
            0.0, rem, iters);
    };
    solve(0, 1.0);
    if (argmin) *argmin = best_beta;
    return best;
}

double nested_golden_polytope_max(const Objective& f, const std::vector<Vec>& A, const Vec& b, int iters,
                                  Vec* argmax) {
    const int d = A.empty() ? 0 : static_cast<int>(A[0].size());
    Vec lam(d, 0.0), best_lam(d, 0.0);
    double best = -INFINITY;
    auto record = [&]() {
        double v = f(lam);
        if (v > best) {
            best = v;
            best_lam = lam;
        }
        return v;
    };
    std::function<double(int)> solve = [&](int k) -> double {
        if (k == d) return record();
        double ub = INFINITY;
        for (std::size_t r = 0; r < A.size(); ++r) {
            if (A[r][k] <= 0.0) continue;
            double used = 0.0;
            for (int j = 0; j < k; ++j) used += A[r][j] * lam[j];
            ub = std::min(ub, std::max(b[r] - used, 0.0) / A[r][k]);
        }
        if (!std::isfinite(ub)) throw DomainError("nested_golden_polytope_max: unbounded coordinate");
        return -golden_min_fixed(
            [&](double t) {
                lam[k] = t;
                for (int j = k + 1; j < d; ++j) lam[j] = 0.0;
                return -solve(k + 1);
            },
            0.0, ub, iters);
    };
    solve(0);
    if (argmax) *argmax = best_lam;
    return best;
}

double projected_subgradient_simplex_min(const std::function<double(const Vec&, Vec&)>& f_and_g, Vec x,
                                         int iterations, double step0, Vec* argmin) {
    Vec g(x.size()), best_x = x;
    double best = INFINITY;
    for (int t = 0; t < iterations; ++t) {
        double v = f_and_g(x, g);
        if (v < best) {
            best = v;
            best_x = x;
        }
        double gn = 0.0;
        for (double gi : g) gn += gi * gi;
        gn = std::sqrt(gn);
        if (gn == 0.0) break;
        double eta = step0 / std::sqrt(t + 1.0) / gn;
        for (std::size_t k = 0; k < x.size(); ++k) x[k] -= eta * g[k];
        x = project_simplex(x);
    }
    if (argmin) *argmin = best_x;
    return best;
}

LPResult lp_max_leq(const Vec& c, const std::vector<Vec>& A, const Vec& b) {
    const int n = static_cast<int>(c.size()), rows = static_cast<int>(A.size());
    const int cols = n + rows;
    // Tableau rows 0..rows-1 are constraints, row `rows` is z_j - c_j.
    std::vector<Vec> T(rows + 1, Vec(cols + 1, 0.0));
    std::vector<int> basis(rows);
    for (int r = 0; r < rows; ++r) {
        if (b[r] < 0.0) throw DomainError("lp_max_leq: right-hand side must be nonnegative");
        for (int j = 0; j < n; ++j) T[r][j] = A[r][j];
        T[r][n + r] = 1.0;
        T[r][cols] = b[r];
        basis[r] = n + r;
    }
    for (int j = 0; j < n; ++j) T[rows][j] = -c[j];
    const double eps = 1e-12;
    for (int iter = 0; iter < 10000; ++iter) {
        int enter = -1;
        for (int j = 0; j < cols; ++j)
            if (T[rows][j] < -eps) {
                enter = j;
                break;
            }
        if (enter < 0) break;
        int leave = -1;
        double best = INFINITY;
        for (int r = 0; r < rows; ++r) {
            if (T[r][enter] <= eps) continue;
            double ratio = T[r][cols] / T[r][enter];
            if (ratio < best - eps || (ratio <= best + eps && leave >= 0 && basis[r] < basis[leave])) {
                best = ratio;
                leave = r;
            }
        }
        if (leave < 0) throw SolverError("lp_max_leq: unbounded", -INFINITY, INFINITY);
        double piv = T[leave][enter];
        for (auto& v : T[leave]) v /= piv;
        for (int r = 0; r <= rows; ++r) {
            if (r == leave || T[r][enter] == 0.0) continue;
            double fac = T[r][enter];
            for (int j = 0; j <= cols; ++j) T[r][j] -= fac * T[leave][j];
        }
        basis[leave] = enter;
    }
    LPResult res;
    res.y.assign(n, 0.0);
    for (int r = 0; r < rows; ++r)
        if (basis[r] < n) res.y[basis[r]] = T[r][cols];
    res.dual.resize(rows);
    for (int r = 0; r < rows; ++r) res.dual[r] = T[rows][n + r];
    res.value = T[rows][cols];
    return res;
}

double matrix_game_value(const std::vector<Vec>& C, Vec* w_star) {
    const int R = static_cast<int>(C.size());
    const int K = static_cast<int>(C[0].size());
    double cmin = INFINITY;
    for (const auto& row : C)
        for (double v : row) cmin = std::min(cmin, v);
    const double shift = 1.0 - cmin;
    // Dual of min 1'u s.t. C' u >= 1: max 1'y s.t. C'^T y <= 1.
    std::vector<Vec> At(K, Vec(R));
    for (int a = 0; a < K; ++a)
        for (int i = 0; i < R; ++i) At[a][i] = C[i][a] + shift;
    LPResult lp = lp_max_leq(Vec(R, 1.0), At, Vec(K, 1.0));
    double su = std::accumulate(lp.dual.begin(), lp.dual.end(), 0.0);
    if (w_star) {
        w_star->resize(K);
        for (int a = 0; a < K; ++a) (*w_star)[a] = std::max(lp.dual[a], 0.0) / su;
    }
    return 1.0 / lp.value - shift;
}

Vec nnls(const std::vector<Vec>& E, const Vec& f) {
    const int rows = static_cast<int>(E.size());
    const int n = rows ? static_cast<int>(E[0].size()) : 0;
    Eigen::MatrixXd M(rows, n);
    Eigen::VectorXd rhs(rows);
    for (int r = 0; r < rows; ++r) {
        for (int j = 0; j < n; ++j) M(r, j) = E[r][j];
        rhs(r) = f[r];
    }
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<bool> passive(n, false);
    const double tol = 1e-13 * std::max(1.0, M.cwiseAbs().maxCoeff());
    auto solve_passive = [&]() {
        std::vector<int> P;
        for (int j = 0; j < n; ++j)
            if (passive[j]) P.push_back(j);
        Eigen::MatrixXd Mp(rows, P.size());
        for (std::size_t k = 0; k < P.size(); ++k) Mp.col(k) = M.col(P[k]);
        Eigen::VectorXd zp = Mp.colPivHouseholderQr().solve(rhs);
        Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
        for (std::size_t k = 0; k < P.size(); ++k) z(P[k]) = zp(k);
        return z;
    };
    for (int outer = 0; outer < 3 * n + 10; ++outer) {
        Eigen::VectorXd w = M.transpose() * (rhs - M * x);
        int t = -1;
        double wmax = tol;
        for (int j = 0; j < n; ++j)
            if (!passive[j] && w(j) > wmax) {
                wmax = w(j);
                t = j;
            }
        if (t < 0) break;
        passive[t] = true;
        for (int inner = 0; inner < 3 * n + 10; ++inner) {
            Eigen::VectorXd z = solve_passive();
            bool ok = true;
            for (int j = 0; j < n; ++j)
                if (passive[j] && z(j) <= 0.0) ok = false;
            if (ok) {
                x = z;
                break;
            }
            double alpha = INFINITY;
            for (int j = 0; j < n; ++j)
                if (passive[j] && z(j) <= 0.0) alpha = std::min(alpha, x(j) / (x(j) - z(j)));
            x += alpha * (z - x);
            for (int j = 0; j < n; ++j)
                if (passive[j] && x(j) <= tol) {
                    passive[j] = false;
                    x(j) = 0.0;
                }
        }
    }
    return Vec(x.data(), x.data() + n);
}

bool least_distance(const std::vector<Vec>& G, const Vec& h, Vec& z) {
    const int k = static_cast<int>(G.size());
    const int n = k ? static_cast<int>(G[0].size()) : 0;
    // Lawson-Hanson reduction: E = [G^T; h^T], f = e_{n+1}.
    std::vector<Vec> E(n + 1, Vec(k));
    for (int j = 0; j < n; ++j)
        for (int r = 0; r < k; ++r) E[j][r] = G[r][j];
    for (int r = 0; r < k; ++r) E[n][r] = h[r];
    Vec f(n + 1, 0.0);
    f[n] = 1.0;
    Vec u = nnls(E, f);
    Vec res(n + 1);
    for (int j = 0; j <= n; ++j) {
        double s = -f[j];
        for (int r = 0; r < k; ++r) s += E[j][r] * u[r];
        res[j] = s;
    }
    if (std::abs(res[n]) < 1e-14) return false;
    z.resize(n);
    for (int j = 0; j < n; ++j) z[j] = -res[j] / res[n];
    return true;
}

}  // namespace asht
