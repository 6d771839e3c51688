#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "asht/blackwell.hpp"
#include "asht/bounds.hpp"
#include "asht/errors.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace asht;
using namespace asht::oracle;

namespace {

// Infimum over a dense grid of binary Q of sum_i beta_i D(Q || nu^i_a).
double zeta_grid(const BanditClass& inst, int a, const std::vector<double>& beta) {
    double best = INFINITY;
    for (int k = 1; k < 100000; ++k) {
        const double q[2] = {k * 1e-5, 1.0 - k * 1e-5};
        double s = 0.0;
        for (int i = 0; i < inst.m(); ++i)
            for (int x = 0; x < 2; ++x) s += beta[i] * q[x] * std::log(q[x] / inst.nu(i, a)[x]);
        best = std::min(best, s);
    }
    return best;
}

double dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

const ApproachResult& table1_approach() {
    static const ApproachResult r = r_approach(test::table1());
    return r;
}

}  // namespace

TEST_CASE("intercepts at vertices and against a dense infimum") {
    auto inst = test::table2();
    for (int i = 0; i < 3; ++i) {
        std::vector<double> e(3, 0.0);
        e[i] = 1.0;
        auto c = intercepts(inst, e);
        CHECK(std::abs(c.I) < 1e-15);
        CHECK(std::abs(c.L) < 1e-15);
    }
    std::vector<double> u{1.0 / 3, 1.0 / 3, 1.0 / 3};
    auto c = intercepts(inst, u);
    double lo = INFINITY, hi = -INFINITY;
    for (int a = 0; a < 3; ++a) {
        const double z = zeta_grid(inst, a, u);
        lo = std::min(lo, z);
        hi = std::max(hi, z);
    }
    CHECK(std::abs(c.I - lo) < 1e-6);
    CHECK(std::abs(c.L - hi) < 1e-6);
    CHECK(c.I <= c.L);

    auto single = BanditClass::from_bernoulli({{0.7}, {0.2}, {0.4}});
    auto s = intercepts(single, u);
    CHECK(s.I == s.L);
    CHECK(s.argmin_arm == 0);
}

TEST_CASE("edge suprema match a dense edge scan") {
    auto inst = test::table1();
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            double best = -INFINITY;
            for (int k = 0; k <= 10000; ++k)
                best = std::max(best, intercepts(inst, edge_point(3, i, j, k * 1e-4)).I);
            auto e = edge_sup(inst, i, j);
            CHECK(std::abs(e.value - best) < 1e-6);
            CHECK(e.value >= best - 1e-12);
            CHECK(std::abs(intercepts(inst, edge_point(3, i, j, e.t)).I - e.value) < 1e-12);
        }
    CHECK(all_edge_sups(inst).size() == 3);
    auto dup = BanditClass::from_bernoulli({{0.7, 0.4}, {0.7, 0.4}, {0.2, 0.6}}, true);
    CHECK(std::abs(edge_sup(dup, 0, 1).value) < 1e-12);
}

TEST_CASE("perturbed value function") {
    auto inst = test::table1();
    auto edges = all_edge_sups(inst);
    double smallest = INFINITY;
    for (const auto& e : edges) smallest = std::min(smallest, e.value);
    auto below = g_of_r(inst, 0.5 * smallest);
    CHECK(std::isinf(below.value));
    CHECK(below.pairs.empty());
    // G is non-increasing in R.
    double prev = INFINITY;
    for (double R : {0.9 * smallest, 1.1 * smallest, 0.12, 0.14, 0.2}) {
        auto g = g_of_r(inst, R);
        CHECK(g.value <= prev + 1e-7);
        prev = g.value;
        for (std::size_t k = 0; k < g.pairs.size(); ++k) CHECK(g.t[k] >= 0.0);
    }
}

TEST_CASE("approachability exponent on reference instances") {
    auto t2 = test::table2();
    CHECK(std::abs(r_approach(t2).value - 0.0073001) < 1e-5);
    auto bin = BanditClass::from_bernoulli({{0.7, 0.4}, {0.2, 0.5}});
    CHECK(std::abs(r_approach(bin).value - r_ub(bin)) < 1e-6);
    const auto& r1 = table1_approach();
    CHECK(r1.value >= r_static(test::table1()).value - 1e-6);
    CHECK(r1.value <= r_ub(test::table1()) + 1e-9);
    CHECK(r1.value <= r1.g_at_value + 1e-9);
    Rng rng(41);
    for (int t = 0; t < 3; ++t) {
        auto inst = test::random_bernoulli(rng, 3, 3);
        CHECK(r_approach(inst).value >= r_static(inst).value - 1e-6);
    }
}

TEST_CASE("concave envelope lies above the intercept and reaches R at the perturbed points") {
    const auto& spec = table1_approach().spec;
    REQUIRE_FALSE(spec.pairs().empty());
    Rng rng(9);
    for (int t = 0; t < 300; ++t) {
        auto beta = rng.dirichlet_ones(3);
        CHECK(spec.I_concave(beta) >= spec.I(beta) - 1e-9);
        CHECK(spec.I(beta) <= spec.L(beta));
    }
    for (const auto& bt : spec.beta_tilde()) CHECK(spec.I_concave(bt) >= spec.R() - 1e-9);
}

TEST_CASE("membership function against a grid minimum") {
    const auto& spec = table1_approach().spec;
    Rng rng(15);
    for (int t = 0; t < 25; ++t) {
        std::vector<double> x(3);
        for (auto& v : x) v = 0.5 * rng.uniform();
        CHECK(std::abs(membership_l(spec, x) - membership_grid(spec, x)) < 1e-4);
    }
    std::vector<double> huge{50.0, 50.0, 50.0}, zero{0.0, 0.0, 0.0};
    CHECK(membership_l(spec, huge) > 0.0);
    CHECK(membership_l(spec, zero) <= -spec.R() + 1e-9);
    std::vector<double> shortx{1.0, 1.0};
    CHECK_THROWS_AS(membership_l(spec, shortx), ValidationError);
}

TEST_CASE("projection onto the set") {
    const auto& spec = table1_approach().spec;
    Projector proj(spec);
    std::vector<double> inside{5.0, 5.0, 5.0};
    auto pin = proj.project(inside);
    CHECK(pin.beta.empty());
    CHECK(pin.distance == 0.0);
    CHECK(dist(pin.y, inside) == 0.0);

    Rng rng(27);
    std::vector<std::vector<double>> members;
    while (members.size() < 200) {
        std::vector<double> z(3);
        for (auto& v : z) v = 0.6 * rng.uniform();
        if (membership_l(spec, z) >= 0.0) members.push_back(z);
    }
    for (int t = 0; t < 40; ++t) {
        std::vector<double> x(3);
        for (auto& v : x) v = 0.3 * rng.uniform();
        auto p = proj.project(x);
        CHECK(p.l_at_y >= -1e-9);
        CHECK(std::abs(p.distance - dist(p.y, x)) < 1e-12);
        auto again = proj.project(p.y);
        CHECK(dist(again.y, p.y) < 1e-7);
        for (const auto& z : members) CHECK(p.distance <= dist(x, z) + 1e-7);
    }
}

TEST_CASE("allocation meets the halfspace for every adversary") {
    const auto& spec = table1_approach().spec;
    const auto& inst = spec.instance();
    Rng rng(33);
    for (int t = 0; t < 30; ++t) {
        std::vector<double> x(3);
        for (auto& v : x) v = 0.3 * rng.uniform();
        auto p = project_to_bset(spec, x);
        if (p.beta.empty()) continue;
        auto c = allocation_from_projection(spec, p);
        CHECK(std::abs(c.residual) < 1e-7);
        double wsum = 0.0;
        for (double w : c.w) {
            CHECK(w >= 0.0);
            wsum += w;
        }
        CHECK(std::abs(wsum - 1.0) < 1e-12);
        for (int s = 0; s < 50; ++s) {
            std::vector<std::vector<double>> Q(3);
            for (auto& q : Q) q = test::positive_simplex(rng, 2, 1e-6);
            CHECK(dot(c.beta_n, payoff(inst, c.w, Q)) >= c.target - 1e-9);
        }
    }
}

TEST_CASE("set verification") {
    const auto& spec = table1_approach().spec;
    auto rep = verify_bset(spec, 300, 5);
    CHECK(rep.samples == 300);
    CHECK(rep.max_violation <= 1e-9);
    CHECK(rep.max_residual <= 1e-7);
    // Without perturbed pairs only the halfspace constraints remain.
    BSetSpec plain(test::table1(), 0.0, {}, {}, all_edge_sups(test::table1()));
    auto rp = verify_bset(plain, 100, 1);
    CHECK(rp.max_violation <= 1e-9);
    CHECK(rp.max_residual <= 1e-7);
}
