#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "asht/core.hpp"
#include "asht/hull.hpp"

namespace asht {

struct ConeGridSpec {
    int m = 0;
    double a_bound = 0.0;
    double eps = 0.0;
    double kappa = 1.0;
    int B = 0;
    double dt = 0.0;
    double dh = 0.0;
    int half_cells = 0;   // the hypercube [-(sqrt(m) a + kappa), sqrt(m) a + kappa]^m spans 2*half_cells cells
    double radius = 0.0;  // ball radius sqrt(m) a dt of the time-step operator

    // Radius sqrt(m) a t_l + kappa t_l^2 of the cone section D_l.
    double section_radius(int l) const;
    // Radius of the part of D_l that can influence the value at the origin: l (radius + sqrt(m) dh).
    double stored_radius(int l) const;
    int stored_cells(int l) const;
    // Exact count of lattice points in a ball of the given radius.
    std::size_t lattice_points_within(double rad) const;
    std::size_t section_size(int l) const { return lattice_points_within(section_radius(l)); }
    std::size_t stored_bytes() const;
};

constexpr std::size_t kDefaultMemoryCap = std::size_t(2) << 30;

// dh is the largest value below kappa dt^2 / sqrt(m) that divides the hypercube half-width.
ConeGridSpec build_grids(const BanditClass& inst, int B, double kappa,
                         std::size_t memory_cap_bytes = kDefaultMemoryCap);

// Per-level dense boxes of side 2R+1 around the origin; entries outside the stored ball are NaN.
class ValueTable {
public:
    ValueTable() = default;
    explicit ValueTable(const ConeGridSpec& spec);

    const ConeGridSpec& spec() const { return spec_; }
    int levels() const { return spec_.B + 1; }
    int cells(int l) const { return R_[l]; }

    bool has(int l, std::span<const int> idx) const;
    double value(int l, std::span<const int> idx) const;
    int action(int l, std::span<const int> idx) const;
    void set(int l, std::span<const int> idx, double v, int a);

    std::size_t size(int l) const { return val_[l].size(); }
    // Multi-index of flat slot k at level l.
    void unflat(int l, std::size_t k, int* idx) const;
    double raw_value(int l, std::size_t k) const { return val_[l][k]; }

    // Piecewise-linear interpolation on the Kuhn triangulation; throws if a needed vertex is missing.
    double interpolate(int l, std::span<const double> x) const;

    nlohmann::json to_json() const;
    static ValueTable from_json(const nlohmann::json& j);
    bool operator==(const ValueTable& o) const;

private:
    std::size_t flat(int l, std::span<const int> idx) const;

    ConeGridSpec spec_;
    std::vector<int> R_;
    std::vector<std::vector<double>> val_;
    std::vector<std::vector<std::uint8_t>> act_;
};

struct OperatorValue {
    double value = 0.0;
    int action = 0;
};

// Vertex set of the operator's ball around grid point idx: the level-(l+1) grid points in the
// ball plus the 2m axis points x +- radius e_k with interpolated values. Points are returned in
// local coordinates (y - x) / dh, so lattice points are exact integers.
void ball_vertex_set(const ValueTable& table, int l, std::span<const int> idx,
                     std::vector<std::vector<double>>& pts, std::vector<double>& vals,
                     bool axis_points = true);

// Evaluates max_a max_f [dt H_a(s_f) - g*(s_f) + <s_f, x>] over the lower facets f of the envelope.
// Facet gradients are multiplied by grad_scale before entering H (1/dh for local coordinates).
OperatorValue evaluate_operator(const EnvelopeModel& env, const std::vector<double>& x, double dt,
                                const BanditClass& inst, double grad_scale = 1.0);

OperatorValue time_step_operator(const ValueTable& table, int l, std::span<const int> idx,
                                 const BanditClass& inst);

// Fills level B with g' and levels B-1..0 with the time-step operator.
ValueTable backward_induction(const BanditClass& inst, const ConeGridSpec& spec);

// Nearest stored grid point of level l (smallest lexicographic index on ties) and its action.
std::vector<int> project_to_level(const ValueTable& table, int l, std::span<const double> state);
int goap_next_action(const ValueTable& table, int l, std::span<const double> state);

// Largest |V(x) - V(y)| / |x - y| over neighbouring stored points of level l.
double lipschitz_scan(const ValueTable& table, int l);

}  // namespace asht
