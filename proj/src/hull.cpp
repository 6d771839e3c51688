#include "asht/hull.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>

#include <Eigen/Dense>

#include "asht/errors.hpp"

namespace asht {

namespace {

constexpr int kMaxDim = 6;
using i128 = __int128;

// Laplace expansion; exact for the small integer matrices used by the hull predicates.
i128 det_exact(const i128 a[kMaxDim][kMaxDim], int n) {
    if (n == 1) return a[0][0];
    if (n == 2) return a[0][0] * a[1][1] - a[0][1] * a[1][0];
    i128 det = 0;
    i128 sub[kMaxDim][kMaxDim];
    for (int c = 0; c < n; ++c) {
        if (a[0][c] == 0) continue;
        for (int r = 1; r < n; ++r) {
            int cc = 0;
            for (int k = 0; k < n; ++k)
                if (k != c) sub[r - 1][cc++] = a[r][k];
        }
        i128 minor = det_exact(sub, n - 1);
        det += (c % 2 ? -a[0][c] : a[0][c]) * minor;
    }
    return det;
}

struct HullFacet {
    int v[kMaxDim];
    i128 n[kMaxDim];  // outward normal, exact
    bool alive;
};

// Incremental (beneath-beyond) convex hull of integer points in dimension d. All
// predicates are exact, so coplanar and cospherical inputs are handled consistently.
class Hull {
public:
    Hull(const std::vector<std::int64_t>& P, int N, int d) : P_(P), N_(N), d_(d) {}

    bool build() {
        std::vector<int> simplex;
        if (!initial_simplex(simplex)) return false;
        // interior_ is (d+1) times the centroid of the initial simplex, kept integral.
        for (int k = 0; k < d_; ++k) interior_[k] = 0;
        for (int s : simplex)
            for (int k = 0; k < d_; ++k) interior_[k] += pt(s)[k];
        for (int omit = 0; omit <= d_; ++omit) {
            int vs[kMaxDim];
            int c = 0;
            for (int k = 0; k <= d_; ++k)
                if (k != omit) vs[c++] = simplex[k];
            add_facet(vs);
        }
        std::vector<bool> used(N_, false);
        for (int s : simplex) used[s] = true;
        for (int q = 0; q < N_; ++q)
            if (!used[q]) insert(q);
        return true;
    }

    const std::vector<HullFacet>& facets() const { return F_; }

private:
    const std::int64_t* pt(int i) const { return &P_[static_cast<std::size_t>(i) * d_]; }

    i128 side(const HullFacet& f, const std::int64_t* q) const {
        const std::int64_t* p0 = pt(f.v[0]);
        i128 s = 0;
        for (int j = 0; j < d_; ++j) s += f.n[j] * static_cast<i128>(q[j] - p0[j]);
        return s;
    }

    bool initial_simplex(std::vector<int>& out) {
        // Greedy farthest-point selection in floating point, confirmed by an exact rank test.
        int i0 = 0;
        for (int i = 1; i < N_; ++i)
            if (std::lexicographical_compare(pt(i), pt(i) + d_, pt(i0), pt(i0) + d_)) i0 = i;
        out = {i0};
        std::vector<std::vector<double>> basis;
        for (int k = 0; k < d_; ++k) {
            std::vector<std::pair<double, int>> cand;
            for (int i = 0; i < N_; ++i) {
                double r[kMaxDim];
                for (int j = 0; j < d_; ++j) r[j] = double(pt(i)[j] - pt(i0)[j]);
                for (const auto& b : basis) {
                    double dot = 0.0;
                    for (int j = 0; j < d_; ++j) dot += r[j] * b[j];
                    for (int j = 0; j < d_; ++j) r[j] -= dot * b[j];
                }
                double nr = 0.0;
                for (int j = 0; j < d_; ++j) nr += r[j] * r[j];
                cand.emplace_back(-nr, i);
            }
            std::sort(cand.begin(), cand.end());
            int best = -1;
            for (const auto& [negd, i] : cand) {
                if (negd == 0.0) break;
                out.push_back(i);
                if (independent(out)) {
                    best = i;
                    break;
                }
                out.pop_back();
            }
            if (best < 0) return false;
            std::vector<double> r(d_);
            for (int j = 0; j < d_; ++j) r[j] = double(pt(best)[j] - pt(i0)[j]);
            for (const auto& b : basis) {
                double dot = 0.0;
                for (int j = 0; j < d_; ++j) dot += r[j] * b[j];
                for (int j = 0; j < d_; ++j) r[j] -= dot * b[j];
            }
            double nr = 0.0;
            for (double v : r) nr += v * v;
            nr = std::sqrt(nr);
            for (auto& v : r) v /= nr;
            basis.push_back(r);
        }
        i128 E[kMaxDim][kMaxDim];
        for (int r = 0; r < d_; ++r)
            for (int j = 0; j < d_; ++j) E[r][j] = pt(out[r + 1])[j] - pt(out[0])[j];
        return det_exact(E, d_) != 0;
    }

    // Exact affine independence: some k x k minor of the edge matrix is nonzero.
    bool independent(const std::vector<int>& ids) const {
        const int k = static_cast<int>(ids.size()) - 1;
        i128 E[kMaxDim][kMaxDim];
        for (int r = 0; r < k; ++r)
            for (int j = 0; j < d_; ++j) E[r][j] = pt(ids[r + 1])[j] - pt(ids[0])[j];
        for (unsigned mask = 0; mask < (1u << d_); ++mask) {
            if (__builtin_popcount(mask) != k) continue;
            i128 M[kMaxDim][kMaxDim];
            for (int r = 0; r < k; ++r) {
                int c = 0;
                for (int j = 0; j < d_; ++j)
                    if (mask >> j & 1) M[r][c++] = E[r][j];
            }
            if (det_exact(M, k) != 0) return true;
        }
        return false;
    }

    void add_facet(const int* vs) {
        HullFacet f;
        f.alive = true;
        for (int k = 0; k < d_; ++k) f.v[k] = vs[k];
        i128 E[kMaxDim][kMaxDim];
        for (int r = 1; r < d_; ++r)
            for (int j = 0; j < d_; ++j) E[r - 1][j] = pt(vs[r])[j] - pt(vs[0])[j];
        for (int j = 0; j < d_; ++j) {
            i128 minor[kMaxDim][kMaxDim];
            for (int r = 0; r < d_ - 1; ++r) {
                int cc = 0;
                for (int k = 0; k < d_; ++k)
                    if (k != j) minor[r][cc++] = E[r][k];
            }
            i128 dm = det_exact(minor, d_ - 1);
            f.n[j] = (j % 2) ? -dm : dm;
        }
        // Orient away from the interior point: n . ((d+1) p0 - interior) > 0.
        i128 s = 0;
        for (int j = 0; j < d_; ++j) s += f.n[j] * (static_cast<i128>(pt(vs[0])[j]) * (d_ + 1) - interior_[j]);
        if (s < 0)
            for (int j = 0; j < d_; ++j) f.n[j] = -f.n[j];
        F_.push_back(f);
    }

    void insert(int q) {
        std::vector<int> visible;
        for (int f = 0; f < static_cast<int>(F_.size()); ++f)
            if (F_[f].alive && side(F_[f], pt(q)) > 0) visible.push_back(f);
        if (visible.empty()) return;
        std::map<std::vector<int>, int> ridges;
        for (int f : visible) {
            for (int omit = 0; omit < d_; ++omit) {
                std::vector<int> key;
                for (int k = 0; k < d_; ++k)
                    if (k != omit) key.push_back(F_[f].v[k]);
                std::sort(key.begin(), key.end());
                ++ridges[key];
            }
            F_[f].alive = false;
        }
        for (const auto& [key, count] : ridges) {
            if (count != 1) continue;
            int vs[kMaxDim];
            for (int k = 0; k < d_ - 1; ++k) vs[k] = key[k];
            vs[d_ - 1] = q;
            add_facet(vs);
        }
        if (F_.size() > 4 * static_cast<std::size_t>(alive_count()) + 64)
            F_.erase(std::remove_if(F_.begin(), F_.end(), [](const HullFacet& f) { return !f.alive; }), F_.end());
    }

    int alive_count() const {
        int c = 0;
        for (const auto& f : F_) c += f.alive;
        return c;
    }

    const std::vector<std::int64_t>& P_;
    int N_, d_;
    i128 interior_[kMaxDim];
    std::vector<HullFacet> F_;
};

}  // namespace

double EnvelopeModel::eval(const double* z) const {
    double v = -INFINITY;
    for (const auto& f : facets) v = std::max(v, f(z));
    return v;
}

double EnvelopeModel::dominance_violation() const {
    double worst = -INFINITY;
    for (std::size_t i = 0; i < points.size(); ++i) worst = std::max(worst, eval(points[i].data()) - values[i]);
    return worst;
}

EnvelopeModel lower_convex_envelope(const std::vector<std::vector<double>>& points,
                                    const std::vector<double>& values) {
    if (points.empty()) throw DomainError("lower_convex_envelope: empty point set");
    if (points.size() != values.size()) throw ValidationError("lower_convex_envelope: size mismatch");
    const int m = static_cast<int>(points[0].size());
    const int N = static_cast<int>(points.size());
    if (m + 1 > kMaxDim) throw DomainError("lower_convex_envelope: dimension too large");
    EnvelopeModel env;
    env.m = m;
    env.points = points;
    env.values = values;
    env.vertex_facets.assign(N, {});

    // Normalize space by a reference point and a power-of-two scale so that integer
    // (lattice) inputs stay exact; spatially coplanar lattice facets then have an
    // exactly vertical normal. Values are centred and scaled to unit size.
    const std::vector<double>& z0 = points[0];
    double v0 = 0.0;
    for (int i = 0; i < N; ++i) v0 += values[i] / N;
    double sz = 0.0, sv = 0.0;
    for (int i = 0; i < N; ++i) {
        for (int k = 0; k < m; ++k) sz = std::max(sz, std::abs(points[i][k] - z0[k]));
        sv = std::max(sv, std::abs(values[i] - v0));
    }
    sz = sz > 0.0 ? std::exp2(std::ceil(std::log2(sz))) : 1.0;
    if (sv == 0.0) sv = 1.0;

    // Spatial affine basis.
    Eigen::MatrixXd Z(N, m);
    for (int i = 0; i < N; ++i)
        for (int k = 0; k < m; ++k) Z(i, k) = (points[i][k] - z0[k]) / sz;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Z, Eigen::ComputeThinV);
    const auto& sing = svd.singularValues();
    int rank = 0;
    for (int k = 0; k < sing.size(); ++k)
        if (sing(k) > 1e-9 * std::max(1.0, sing(0))) ++rank;
    Eigen::MatrixXd U;  // m x rank, maps reduced coordinates back to space
    if (rank == m)
        U = Eigen::MatrixXd::Identity(m, m);
    else
        U = svd.matrixV().leftCols(rank);
    Eigen::MatrixXd Xi = Z * U;  // N x rank

    auto emit = [&](const Eigen::VectorXd& sigma, double c_tilde, std::vector<int> verts) {
        Facet f;
        Eigen::VectorXd g = (sv / sz) * (U * sigma);
        f.grad.assign(g.data(), g.data() + m);
        f.intercept = v0 + sv * c_tilde;
        for (int k = 0; k < m; ++k) f.intercept -= f.grad[k] * z0[k];
        int id = static_cast<int>(env.facets.size());
        for (int v : verts) env.vertex_facets[v].push_back(id);
        f.vertices = std::move(verts);
        env.facets.push_back(std::move(f));
    };

    const int d = rank + 1;
    // Quantize the lifted points to integers: space to 2^20 (2^16 above three dimensions)
    // units over its extent, values to 2^50 (2^32) units over their range. Both fit the
    // 128-bit predicates. The hull's
    // combinatorics are exact for the quantized points; facet planes are then refit on
    // the original coordinates.
    const double space_units = rank <= 3 ? 1048576.0 : 65536.0;
    const double value_units = rank <= 3 ? 1125899906842624.0 : 4294967296.0;
    double xi_max = 0.0;
    for (int i = 0; i < N; ++i)
        for (int k = 0; k < rank; ++k) xi_max = std::max(xi_max, std::abs(Xi(i, k)));
    // Power-of-two spatial scale keeps integer lattice inputs exact.
    const double qs = xi_max > 0.0 ? std::exp2(std::floor(std::log2(space_units / xi_max))) : 1.0;
    std::vector<std::int64_t> Q(static_cast<std::size_t>(N) * d);
    for (int i = 0; i < N; ++i) {
        for (int k = 0; k < rank; ++k) Q[i * d + k] = std::llround(Xi(i, k) * qs);
        Q[i * d + rank] = std::llround((values[i] - v0) / sv * value_units);
    }

    Hull hull(Q, N, d);
    if (rank == 0 || !hull.build()) {
        // Lifted points lie in a hyperplane: the envelope is their affine interpolant.
        env.degenerate = true;
        Eigen::MatrixXd A(N, rank + 1);
        Eigen::VectorXd b(N);
        for (int i = 0; i < N; ++i) {
            A(i, 0) = 1.0;
            for (int k = 0; k < rank; ++k) A(i, k + 1) = Xi(i, k);
            b(i) = (values[i] - v0) / sv;
        }
        Eigen::VectorXd sol = A.colPivHouseholderQr().solve(b);
        if (rank == 0) sol(0) = (*std::min_element(values.begin(), values.end()) - v0) / sv;
        std::vector<int> all(N);
        for (int i = 0; i < N; ++i) all[i] = i;
        emit(sol.tail(rank), sol(0), all);
        return env;
    }
    for (const auto& hf : hull.facets()) {
        if (!hf.alive || hf.n[rank] >= 0) continue;  // keep strictly downward facets
        Eigen::MatrixXd A(d, d);
        Eigen::VectorXd b(d);
        for (int r = 0; r < d; ++r) {
            A(r, 0) = 1.0;
            for (int k = 0; k < rank; ++k) A(r, k + 1) = Xi(hf.v[r], k);
            b(r) = (values[hf.v[r]] - v0) / sv;
        }
        Eigen::VectorXd sol = A.partialPivLu().solve(b);
        std::vector<int> verts(hf.v, hf.v + d);
        emit(sol.tail(rank), sol(0), verts);
    }
    return env;
}

EnvelopeModel local_convex_envelope(const std::vector<std::vector<double>>& points,
                                    const std::vector<double>& values, const std::vector<double>& center,
                                    double radius) {
    std::vector<std::vector<double>> pin;
    std::vector<double> vin;
    const double r2 = radius * radius * (1.0 + 1e-12);
    for (std::size_t i = 0; i < points.size(); ++i) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < center.size(); ++k) d2 += (points[i][k] - center[k]) * (points[i][k] - center[k]);
        if (d2 <= r2) {
            pin.push_back(points[i]);
            vin.push_back(values[i]);
        }
    }
    if (pin.empty()) throw DomainError("local_convex_envelope: no points inside the ball");
    return lower_convex_envelope(pin, vin);
}

}  // namespace asht
