#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "asht/bounds.hpp"
#include "asht/errors.hpp"
#include "asht/goap.hpp"
#include "asht/hull.hpp"
#include "asht/pde.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace asht;
using namespace asht::oracle;

namespace {

std::vector<std::vector<double>> random_points(Rng& rng, int n, int m) {
    std::vector<std::vector<double>> pts(n, std::vector<double>(m));
    for (auto& p : pts)
        for (auto& v : p) v = 2.0 * rng.uniform() - 1.0;
    return pts;
}

const ValueTable& coarse_table() {
    static const ValueTable table = [] {
        auto inst = test::table1();
        return backward_induction(inst, build_grids(inst, 10, 40.0));
    }();
    return table;
}

}  // namespace

TEST_CASE("envelope matches brute-force lower hull on small point sets") {
    Rng rng(77);
    for (int t = 0; t < 30; ++t) {
        const int n = 6 + static_cast<int>(rng.below(10));
        auto pts = random_points(rng, n, 3);
        std::vector<double> vals(n);
        for (auto& v : vals) v = rng.uniform();
        auto env = lower_convex_envelope(pts, vals);
        CHECK_FALSE(env.degenerate);
        CHECK(env.dominance_violation() <= 1e-12);
        auto planes = supporting_planes(pts, vals);
        for (int i = 0; i < n; ++i) CHECK(std::abs(env.eval(pts[i].data()) - brute_envelope(planes, pts[i])) < 1e-9);
        // Interior queries: convex combinations of the points.
        for (int q = 0; q < 20; ++q) {
            auto w = rng.dirichlet_ones(n);
            std::vector<double> z(3, 0.0);
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < 3; ++k) z[k] += w[i] * pts[i][k];
            CHECK(std::abs(env.eval(z.data()) - brute_envelope(planes, z)) < 1e-9);
        }
    }
}

TEST_CASE("convex data is reproduced exactly") {
    Rng rng(3);
    auto pts = random_points(rng, 14, 3);
    std::vector<double> p{0.3, -1.2, 0.8}, vals;
    for (const auto& x : pts) vals.push_back(0.5 + p[0] * x[0] + p[1] * x[1] + p[2] * x[2]);
    auto env = lower_convex_envelope(pts, vals);
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(std::abs(env.eval(pts[i].data()) - vals[i]) < 1e-12);
    for (const auto& f : env.facets)
        for (int k = 0; k < 3; ++k) CHECK(std::abs(f.grad[k] - p[k]) < 1e-9);
}

TEST_CASE("a lowered value becomes a hull vertex and the envelope is idempotent") {
    Rng rng(9);
    auto pts = random_points(rng, 15, 3);
    std::vector<double> vals;
    for (const auto& x : pts) vals.push_back(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    vals[4] -= 2.0;
    auto env = lower_convex_envelope(pts, vals);
    CHECK_FALSE(env.vertex_facets[4].empty());
    CHECK(std::abs(env.eval(pts[4].data()) - vals[4]) < 1e-12);

    std::vector<double> again;
    for (const auto& x : pts) again.push_back(env.eval(x.data()));
    auto env2 = lower_convex_envelope(pts, again);
    for (const auto& x : pts) CHECK(std::abs(env2.eval(x.data()) - env.eval(x.data())) < 1e-12);
}

TEST_CASE("degenerate and empty inputs") {
    // Spatially flat points are handled in their spanned plane.
    std::vector<std::vector<double>> flat{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {0.5, 0.2, 0}};
    std::vector<double> vals{0.0, 1.0, 2.0, 3.0, 0.5};
    auto env = lower_convex_envelope(flat, vals);
    CHECK(env.dominance_violation() <= 1e-12);
    std::vector<double> mid{0.5, 0.2, 0.0}, centre{0.5, 0.5, 0.0};
    CHECK(std::abs(env.eval(mid.data()) - 0.5) < 1e-12);
    CHECK(env.eval(centre.data()) < 1.5 - 1e-3);
    // Affine values on lattice points lift into a hyperplane.
    std::vector<std::vector<double>> cube;
    std::vector<double> affine;
    for (int k = 0; k < 8; ++k) {
        cube.push_back({double(k & 1), double((k >> 1) & 1), double(k >> 2)});
        affine.push_back(1.0 + cube.back()[0] - 2.0 * cube.back()[1] + 0.5 * cube.back()[2]);
    }
    auto aff = lower_convex_envelope(cube, affine);
    CHECK(aff.degenerate);
    CHECK(aff.dominance_violation() <= 1e-12);
    std::vector<double> cc{0.5, 0.5, 0.5};
    CHECK(std::abs(aff.eval(cc.data()) - 0.75) < 1e-12);
    CHECK_THROWS_AS(lower_convex_envelope({}, {}), DomainError);
    CHECK_THROWS_AS(local_convex_envelope(flat, vals, {5, 5, 5}, 1.0), DomainError);
    auto local = local_convex_envelope(flat, vals, {0, 0, 0}, 1.0);
    CHECK(local.points.size() == 4);
}

TEST_CASE("grid construction") {
    auto inst = test::table1();
    auto s = build_grids(inst, 10, 1.0, std::size_t(1) << 40);
    CHECK(s.dh < 0.01 / std::sqrt(3.0));
    CHECK(s.dh > 0.0057);
    CHECK(std::abs(s.dh * s.half_cells - (std::sqrt(3.0) * s.a_bound + 1.0)) < 1e-12);
    CHECK(s.section_size(0) == 1);
    CHECK(s.section_radius(10) == doctest::Approx(std::sqrt(3.0) * s.a_bound + 1.0));
    try {
        build_grids(inst, 10, 1.0);
        FAIL("expected the memory cap to refuse");
    } catch (const ResourceError& e) {
        CHECK(std::string(e.what()).find("memory cap") != std::string::npos);
    }
    CHECK_THROWS_AS(build_grids(inst, 1, 1.0), DomainError);
    CHECK_THROWS_AS(build_grids(inst, 10, 0.0), DomainError);
}

TEST_CASE("operator on constant and linear data") {
    auto inst = test::table1();
    const auto& table = coarse_table();
    const auto& s = table.spec();
    std::vector<std::vector<double>> pts;
    std::vector<double> vals;
    std::vector<int> origin(3, 0);
    ball_vertex_set(table, 4, origin, pts, vals);
    for (auto& v : vals) v = 0.25;
    auto c = evaluate_operator(lower_convex_envelope(pts, vals), {0, 0, 0}, s.dt, inst, 1.0 / s.dh);
    CHECK(std::abs(c.value - 0.25) < 1e-12);

    std::vector<double> p{0.4, -0.7, 0.1};
    for (std::size_t i = 0; i < pts.size(); ++i) {
        vals[i] = 0.0;
        for (int k = 0; k < 3; ++k) vals[i] += p[k] * pts[i][k] * s.dh;
    }
    auto lin = evaluate_operator(lower_convex_envelope(pts, vals), {0, 0, 0}, s.dt, inst, 1.0 / s.dh);
    CHECK(std::abs(lin.value - s.dt * hamiltonian(inst, p).value) < 1e-9);
    CHECK(lin.action == hamiltonian(inst, p).arm);
}

TEST_CASE("operator matches exhaustive enumeration on small balls") {
    auto inst = test::table1();
    const auto& table = coarse_table();
    const auto& s = table.spec();
    Rng rng(5);
    std::vector<std::vector<double>> pts;
    std::vector<double> vals;
    for (int t = 0; t < 40; ++t) {
        const int l = static_cast<int>(rng.below(s.B));
        std::vector<int> idx(3);
        do {
            for (auto& v : idx) v = static_cast<int>(rng.below(2 * table.cells(l) + 1)) - table.cells(l);
        } while (!table.has(l, idx));
        ball_vertex_set(table, l, idx, pts, vals);
        REQUIRE(pts.size() <= 15);
        const double want = brute_operator(pts, vals, s.dt, s.dh, inst);
        CHECK(std::abs(time_step_operator(table, l, idx, inst).value - want) < 1e-9);
        for (auto& v : vals) v += 0.05 * rng.uniform();
        auto env = lower_convex_envelope(pts, vals);
        CHECK(std::abs(evaluate_operator(env, {0, 0, 0}, s.dt, inst, 1.0 / s.dh).value -
                       brute_operator(pts, vals, s.dt, s.dh, inst)) < 1e-9);
    }
}

TEST_CASE("backward induction") {
    auto inst = test::table1();
    const auto& table = coarse_table();
    const auto& s = table.spec();
    std::vector<int> idx(3);
    std::vector<double> x(3);
    for (std::size_t k = 0; k < table.size(s.B); ++k) {
        if (std::isnan(table.raw_value(s.B, k))) continue;
        table.unflat(s.B, k, idx.data());
        for (int j = 0; j < 3; ++j) x[j] = idx[j] * s.dh;
        CHECK(table.raw_value(s.B, k) == modified_terminal(x, s.a_bound));
    }
    SUBCASE("deterministic") {
        auto again = backward_induction(inst, s);
        CHECK(again == table);
    }
    SUBCASE("json round trip") {
        CHECK(ValueTable::from_json(table.to_json()) == table);
    }
    SUBCASE("Lipschitz constants stay bounded by the terminal one") {
        const double top = lipschitz_scan(table, s.B);
        CHECK(top <= 4.0);
        for (int l = 0; l < s.B; ++l) CHECK(lipschitz_scan(table, l) <= std::sqrt(3.0) * top + 1e-9);
    }
    SUBCASE("identical hypotheses") {
        auto dup = BanditClass::from_bernoulli({{0.6, 0.3, 0.23}, {0.6, 0.3, 0.23}, {0.2, 0.3, 0.75}}, true);
        auto t = backward_induction(dup, build_grids(dup, 10, 40.0));
        CHECK(std::abs(t.value(0, std::vector<int>(3, 0))) < 1e-9);
    }
}

TEST_CASE("policy lookup") {
    const auto& table = coarse_table();
    const auto& s = table.spec();
    std::vector<double> zero(3, 0.0);
    CHECK(goap_next_action(table, 0, zero) == table.action(0, std::vector<int>(3, 0)));
    std::vector<int> idx{1, 0, -1};
    REQUIRE(table.has(3, idx));
    std::vector<double> on{s.dh, 0.0, -s.dh};
    CHECK(goap_next_action(table, 3, on) == table.action(3, idx));
    std::vector<double> tie{0.5 * s.dh, 0.0, 0.0};
    CHECK(project_to_level(table, 3, tie) == std::vector<int>{0, 0, 0});
    std::vector<double> neg_tie{-0.5 * s.dh, 0.0, 0.0};
    CHECK(project_to_level(table, 3, neg_tie) == std::vector<int>{-1, 0, 0});
    CHECK_THROWS_AS(goap_next_action(table, s.B, zero), DomainError);
}
