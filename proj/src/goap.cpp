#include "asht/goap.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>

#include "asht/bounds.hpp"
#include "asht/errors.hpp"
#include "asht/parallel.hpp"
#include "asht/pde.hpp"

namespace asht {

double ConeGridSpec::section_radius(int l) const {
    double t = l * dt;
    return std::sqrt(double(m)) * a_bound * t + kappa * t * t;
}

double ConeGridSpec::stored_radius(int l) const {
    return std::min(section_radius(l), l * (radius + std::sqrt(double(m)) * dh));
}

int ConeGridSpec::stored_cells(int l) const { return static_cast<int>(std::floor(stored_radius(l) / dh + 1e-9)); }

std::size_t ConeGridSpec::lattice_points_within(double rad) const {
    // Count n in Z^m with |n| dh <= rad by recursing on the leading coordinates.
    const double r2 = (rad / dh) * (rad / dh) * (1.0 + 1e-12);
    std::function<std::size_t(int, double)> count = [&](int dims, double budget) -> std::size_t {
        if (budget < 0.0) return 0;
        long top = static_cast<long>(std::floor(std::sqrt(budget)));
        if (dims == 1) return static_cast<std::size_t>(2 * top + 1);
        std::size_t c = 0;
        for (long n = -top; n <= top; ++n) c += count(dims - 1, budget - double(n) * n);
        return c;
    };
    return count(m, r2);
}

std::size_t ConeGridSpec::stored_bytes() const {
    std::size_t total = 0;
    for (int l = 0; l <= B; ++l) {
        std::size_t side = 2 * static_cast<std::size_t>(stored_cells(l)) + 1, box = 1;
        for (int k = 0; k < m; ++k) box *= side;
        total += box * (sizeof(double) + 1);
    }
    return total;
}

ConeGridSpec build_grids(const BanditClass& inst, int B, double kappa, std::size_t memory_cap_bytes) {
    if (B < 2) throw DomainError("build_grids: need B >= 2");
    if (!(kappa > 0.0)) throw DomainError("build_grids: kappa must be positive");
    ConeGridSpec s;
    s.m = inst.m();
    s.a_bound = inst.a_bound();
    s.eps = inst.eps();
    s.kappa = kappa;
    s.B = B;
    s.dt = 1.0 / B;
    const double bound = kappa * s.dt * s.dt / std::sqrt(double(s.m));
    const double half = std::sqrt(double(s.m)) * s.a_bound + kappa;
    s.half_cells = static_cast<int>(std::floor(half / bound)) + 1;
    s.dh = half / s.half_cells;
    s.radius = std::sqrt(double(s.m)) * s.a_bound * s.dt;
    const std::size_t bytes = s.stored_bytes();
    if (bytes > memory_cap_bytes)
        throw ResourceError("value table needs " + std::to_string(bytes) + " bytes, above the memory cap of " +
                            std::to_string(memory_cap_bytes) + " bytes (dh = " + std::to_string(s.dh) +
                            ", ball radius = " + std::to_string(s.radius / s.dh) + " cells)");
    return s;
}

ValueTable::ValueTable(const ConeGridSpec& spec) : spec_(spec) {
    const int m = spec.m;
    R_.resize(spec.B + 1);
    val_.resize(spec.B + 1);
    act_.resize(spec.B + 1);
    for (int l = 0; l <= spec.B; ++l) {
        R_[l] = spec.stored_cells(l);
        std::size_t side = 2 * R_[l] + 1, box = 1;
        for (int k = 0; k < m; ++k) box *= side;
        val_[l].assign(box, NAN);
        act_[l].assign(box, 0);
    }
}

std::size_t ValueTable::flat(int l, std::span<const int> idx) const {
    const int side = 2 * R_[l] + 1;
    std::size_t k = 0;
    for (int j = 0; j < spec_.m; ++j) k = k * side + (idx[j] + R_[l]);
    return k;
}

void ValueTable::unflat(int l, std::size_t k, int* idx) const {
    const int side = 2 * R_[l] + 1;
    for (int j = spec_.m - 1; j >= 0; --j) {
        idx[j] = static_cast<int>(k % side) - R_[l];
        k /= side;
    }
}

bool ValueTable::has(int l, std::span<const int> idx) const {
    for (int j = 0; j < spec_.m; ++j)
        if (idx[j] < -R_[l] || idx[j] > R_[l]) return false;
    return !std::isnan(val_[l][flat(l, idx)]);
}

double ValueTable::value(int l, std::span<const int> idx) const {
    if (!has(l, idx)) throw DomainError("ValueTable: grid point outside the stored section");
    return val_[l][flat(l, idx)];
}

int ValueTable::action(int l, std::span<const int> idx) const {
    if (!has(l, idx)) throw DomainError("ValueTable: grid point outside the stored section");
    return act_[l][flat(l, idx)];
}

void ValueTable::set(int l, std::span<const int> idx, double v, int a) {
    std::size_t k = flat(l, idx);
    val_[l][k] = v;
    act_[l][k] = static_cast<std::uint8_t>(a);
}

double ValueTable::interpolate(int l, std::span<const double> x) const {
    const int m = spec_.m;
    std::vector<int> base(m), vtx(m), order(m);
    std::vector<double> f(m);
    for (int j = 0; j < m; ++j) {
        double u = x[j] / spec_.dh;
        double r = std::round(u);
        if (std::abs(u - r) < 1e-9) u = r;
        base[j] = static_cast<int>(std::floor(u));
        f[j] = u - base[j];
    }
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return f[a] > f[b]; });
    // Kuhn simplex: v_0 = base, v_k = v_{k-1} + e_{order[k-1]}.
    double out = 0.0;
    vtx = base;
    for (int k = 0; k <= m; ++k) {
        double w;
        if (k == 0)
            w = 1.0 - f[order[0]];
        else if (k == m)
            w = f[order[m - 1]];
        else
            w = f[order[k - 1]] - f[order[k]];
        if (k > 0) ++vtx[order[k - 1]];
        if (w == 0.0) continue;
        if (!has(l, vtx))
            throw std::logic_error("interpolation query left the stored section (grid consistency violated)");
        out += w * val_[l][flat(l, vtx)];
    }
    return out;
}

nlohmann::json ValueTable::to_json() const {
    nlohmann::json j;
    j["m"] = spec_.m;
    j["a_bound"] = spec_.a_bound;
    j["eps"] = spec_.eps;
    j["kappa"] = spec_.kappa;
    j["B"] = spec_.B;
    j["dh"] = spec_.dh;
    j["half_cells"] = spec_.half_cells;
    nlohmann::json lv = nlohmann::json::array();
    for (int l = 0; l <= spec_.B; ++l) {
        nlohmann::json v = nlohmann::json::array(), a = nlohmann::json::array();
        for (std::size_t k = 0; k < val_[l].size(); ++k) {
            if (std::isnan(val_[l][k])) {
                v.push_back(nullptr);
                a.push_back(nullptr);
            } else {
                v.push_back(val_[l][k]);
                a.push_back(int(act_[l][k]));
            }
        }
        lv.push_back({{"cells", R_[l]}, {"values", v}, {"actions", a}});
    }
    j["levels"] = lv;
    return j;
}

ValueTable ValueTable::from_json(const nlohmann::json& j) {
    ConeGridSpec s;
    s.m = j.at("m");
    s.a_bound = j.at("a_bound");
    s.eps = j.at("eps");
    s.kappa = j.at("kappa");
    s.B = j.at("B");
    s.dt = 1.0 / s.B;
    s.dh = j.at("dh");
    s.half_cells = j.at("half_cells");
    s.radius = std::sqrt(double(s.m)) * s.a_bound * s.dt;
    ValueTable t(s);
    const auto& lv = j.at("levels");
    for (int l = 0; l <= s.B; ++l) {
        if (lv[l].at("cells").get<int>() != t.R_[l]) throw ValidationError("value table dump: level size mismatch");
        const auto& v = lv[l].at("values");
        const auto& a = lv[l].at("actions");
        if (v.size() != t.val_[l].size()) throw ValidationError("value table dump: level size mismatch");
        for (std::size_t k = 0; k < v.size(); ++k)
            if (!v[k].is_null()) {
                t.val_[l][k] = v[k].get<double>();
                t.act_[l][k] = static_cast<std::uint8_t>(a[k].get<int>());
            }
    }
    return t;
}

bool ValueTable::operator==(const ValueTable& o) const {
    if (R_ != o.R_) return false;
    for (std::size_t l = 0; l < val_.size(); ++l) {
        if (act_[l] != o.act_[l]) return false;
        for (std::size_t k = 0; k < val_[l].size(); ++k) {
            double a = val_[l][k], b = o.val_[l][k];
            if (std::isnan(a) != std::isnan(b)) return false;
            if (!std::isnan(a) && std::memcmp(&a, &b, sizeof a) != 0) return false;
        }
    }
    return true;
}

namespace {

// Lattice offsets inside the ball of the operator, in a fixed order.
std::vector<std::vector<int>> ball_offsets(const ConeGridSpec& s) {
    const int m = s.m;
    const int R = static_cast<int>(std::floor(s.radius / s.dh + 1e-9));
    const double r2 = (s.radius / s.dh) * (s.radius / s.dh) * (1.0 + 1e-12);
    std::vector<std::vector<int>> out;
    std::vector<int> o(m, -R);
    while (true) {
        double d2 = 0.0;
        for (int v : o) d2 += double(v) * v;
        if (d2 <= r2) out.push_back(o);
        int j = m - 1;
        while (j >= 0 && o[j] == R) o[j--] = -R;
        if (j < 0) break;
        ++o[j];
    }
    return out;
}

}  // namespace

void ball_vertex_set(const ValueTable& table, int l, std::span<const int> idx,
                     std::vector<std::vector<double>>& pts, std::vector<double>& vals, bool axis_points) {
    const auto& s = table.spec();
    const int m = s.m;
    static thread_local std::vector<std::vector<int>> offsets;
    static thread_local double cached_key[3] = {0, 0, 0};
    if (offsets.empty() || cached_key[0] != s.radius || cached_key[1] != s.dh || cached_key[2] != m) {
        offsets = ball_offsets(s);
        cached_key[0] = s.radius;
        cached_key[1] = s.dh;
        cached_key[2] = m;
    }
    pts.clear();
    vals.clear();
    std::vector<int> y(m);
    for (const auto& o : offsets) {
        for (int j = 0; j < m; ++j) y[j] = idx[j] + o[j];
        if (!table.has(l + 1, y))
            throw std::logic_error("ball point missing from the next level (grid consistency violated)");
        pts.emplace_back(o.begin(), o.end());
        vals.push_back(table.value(l + 1, y));
    }
    if (!axis_points) return;
    // Axis offsets are rounded inward to a multiple of 1/1024 cell so the envelope's exact
    // predicates see them without rounding.
    const double rc = std::floor(s.radius / s.dh * 1024.0) / 1024.0;
    if (rc == std::floor(rc)) return;  // axis points are lattice points already
    for (int k = 0; k < m; ++k)
        for (double sign : {-1.0, 1.0}) {
            std::vector<double> p(m), local(m, 0.0);
            for (int j = 0; j < m; ++j) p[j] = idx[j] * s.dh;
            p[k] += sign * rc * s.dh;
            local[k] = sign * rc;
            vals.push_back(table.interpolate(l + 1, p));
            pts.push_back(std::move(local));
        }
}

OperatorValue evaluate_operator(const EnvelopeModel& env, const std::vector<double>& x, double dt,
                                const BanditClass& inst, double grad_scale) {
    const int K = inst.K();
    std::vector<double> best(K, -INFINITY), s(env.m);
    for (const auto& f : env.facets) {
        // For a lower facet, -g*(s_f) is its intercept, so the bracket is the facet evaluated at x plus dt H_a.
        double base = f(x.data());
        for (int k = 0; k < env.m; ++k) s[k] = f.grad[k] * grad_scale;
        for (int a = 0; a < K; ++a) best[a] = std::max(best[a], base + dt * arm_hamiltonian(inst, a, s));
    }
    OperatorValue out{best[0], 0};
    for (int a = 1; a < K; ++a)
        if (best[a] > out.value) out = {best[a], a};
    return out;
}

OperatorValue time_step_operator(const ValueTable& table, int l, std::span<const int> idx, const BanditClass& inst) {
    if (l < 0 || l >= table.spec().B) throw DomainError("time_step_operator: level out of range");
    std::vector<std::vector<double>> pts;
    std::vector<double> vals;
    ball_vertex_set(table, l, idx, pts, vals);
    EnvelopeModel env = lower_convex_envelope(pts, vals);
    if (double viol = env.dominance_violation(); viol > 1e-9)
        throw std::logic_error("lower convex envelope exceeds an input value by " + std::to_string(viol));
    std::vector<double> centre(table.spec().m, 0.0);
    return evaluate_operator(env, centre, table.spec().dt, inst, 1.0 / table.spec().dh);
}

ValueTable backward_induction(const BanditClass& inst, const ConeGridSpec& spec) {
    ValueTable table(spec);
    const int m = spec.m, B = spec.B;
    auto in_ball = [&](int l, const std::vector<int>& idx) {
        double d2 = 0.0;
        for (int v : idx) d2 += double(v) * v;
        double rc = spec.stored_radius(l) / spec.dh;
        return d2 <= rc * rc * (1.0 + 1e-12);
    };
    {
        std::vector<int> idx(m);
        std::vector<double> x(m);
        for (std::size_t k = 0; k < table.size(B); ++k) {
            table.unflat(B, k, idx.data());
            if (!in_ball(B, idx)) continue;
            for (int j = 0; j < m; ++j) x[j] = idx[j] * spec.dh;
            table.set(B, idx, modified_terminal(x, spec.a_bound), 0);
        }
    }
    for (int l = B - 1; l >= 0; --l) {
        const std::size_t n = table.size(l);
        std::vector<double> v(n, NAN);
        std::vector<int> act(n, 0);
        parallel_for(n, [&](std::size_t begin, std::size_t end) {
            std::vector<int> idx(m);
            for (std::size_t k = begin; k < end; ++k) {
                table.unflat(l, k, idx.data());
                if (!in_ball(l, idx)) continue;
                auto r = time_step_operator(table, l, idx, inst);
                v[k] = r.value;
                act[k] = r.action;
            }
        });
        std::vector<int> idx(m);
        for (std::size_t k = 0; k < n; ++k) {
            if (std::isnan(v[k])) continue;
            table.unflat(l, k, idx.data());
            table.set(l, idx, v[k], act[k]);
        }
    }
    return table;
}

std::vector<int> project_to_level(const ValueTable& table, int l, std::span<const double> state) {
    const auto& s = table.spec();
    const int m = s.m;
    std::vector<int> idx(m);
    for (int j = 0; j < m; ++j) {
        double u = state[j] / s.dh;
        double fl = std::floor(u);
        // Exact half-way ties go to the smaller index.
        idx[j] = static_cast<int>(u - fl > 0.5 ? fl + 1 : fl);
    }
    if (table.has(l, idx)) return idx;
    // Outside the stored section: exhaustive nearest search in lexicographic order.
    std::vector<int> best, cur(m);
    double bestd = INFINITY;
    for (std::size_t k = 0; k < table.size(l); ++k) {
        if (std::isnan(table.raw_value(l, k))) continue;
        table.unflat(l, k, cur.data());
        double d2 = 0.0;
        for (int j = 0; j < m; ++j) d2 += (cur[j] * s.dh - state[j]) * (cur[j] * s.dh - state[j]);
        if (d2 < bestd) {
            bestd = d2;
            best = cur;
        }
    }
    return best;
}

int goap_next_action(const ValueTable& table, int l, std::span<const double> state) {
    if (l < 0 || l >= table.spec().B) throw DomainError("goap_next_action: level out of range");
    return table.action(l, project_to_level(table, l, state));
}

double lipschitz_scan(const ValueTable& table, int l) {
    const int m = table.spec().m;
    double worst = 0.0;
    std::vector<int> idx(m), nb(m);
    for (std::size_t k = 0; k < table.size(l); ++k) {
        if (std::isnan(table.raw_value(l, k))) continue;
        table.unflat(l, k, idx.data());
        for (int j = 0; j < m; ++j) {
            nb = idx;
            ++nb[j];
            if (!table.has(l, nb)) continue;
            worst = std::max(worst, std::abs(table.value(l, nb) - table.value(l, idx)) / table.spec().dh);
        }
    }
    // Kuhn-simplex gradients have axis-difference components, so sqrt(m) times the
    // largest axis quotient bounds the Lipschitz constant of the interpolant.
    return std::sqrt(double(m)) * worst;
}

}  // namespace asht
