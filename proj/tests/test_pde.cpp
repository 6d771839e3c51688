#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "asht/bounds.hpp"
#include "asht/errors.hpp"
#include "asht/pde.hpp"
#include "test_util.hpp"

using namespace asht;

TEST_CASE("cfl bound") {
    CHECK(std::abs(cfl_max_dt(3, 0.2, 0.1) - 0.020711) < 1e-6);
    CHECK(cfl_max_dt(3, 0.2, 0.2) == doctest::Approx(2.0 * cfl_max_dt(3, 0.2, 0.1)).epsilon(1e-15));
    CHECK_THROWS_AS(cfl_max_dt(3, 1.0, 0.1), DomainError);
    CHECK_THROWS_AS(cfl_max_dt(3, 0.2, 0.0), DomainError);

    auto inst = test::table1();
    auto spec = UpwindGridSpec::make_fixed(inst, 24, 10);
    spec.dt = cfl_max_dt(3, inst.eps(), spec.dh);
    CHECK(std::abs(spec.stability_margin()) < 1e-15);
}

TEST_CASE("tapered terminal cost") {
    const double a = std::log(5.0);
    std::vector<double> inside{0.3, 1.0, 0.7};
    CHECK(modified_terminal(inside, a) == terminal_g(inside));
    std::vector<double> far{-0.51 * a, 0.2, 0.3}, high{0.2, 1.51 * a, 0.3};
    CHECK(modified_terminal(far, a) == 0.0);
    CHECK(modified_terminal(high, a) == 0.0);
    std::vector<double> taper{-a / 4, a / 2, a / 2};
    CHECK(std::abs(modified_terminal(taper, a) - (a / 2) * 0.5) < 1e-15);
}

TEST_CASE("upwind step on constant and linear data") {
    auto inst = test::table1();
    auto spec = UpwindGridSpec::make(inst, 12);
    const int m = 3;
    auto s = initial_slice(spec, 0);
    std::vector<int> idx(m);
    auto interior = [&](int margin) {
        for (int v : idx)
            if (v < 1 || v > spec.N_x - 1 - margin) return false;
        return true;
    };

    SUBCASE("constant") {
        for (auto& v : s.v) v = 0.7;
        auto out = upwind_step(s, spec, inst);
        for (std::size_t k = 0; k < s.v.size(); ++k) {
            s.unflat(k, idx.data());
            if (interior(1)) CHECK(out.v[k] == 0.7);
        }
    }
    SUBCASE("linear") {
        std::vector<double> p{0.4, -0.9, 0.25};
        for (std::size_t k = 0; k < s.v.size(); ++k) {
            s.unflat(k, idx.data());
            double v = 0.0;
            for (int j = 0; j < m; ++j) v += p[j] * spec.coord(idx[j]);
            s.v[k] = v;
        }
        const double h = hamiltonian(inst, p).value;
        auto out = upwind_step(s, spec, inst);
        for (std::size_t k = 0; k < s.v.size(); ++k) {
            s.unflat(k, idx.data());
            if (interior(1)) CHECK(std::abs(out.v[k] - (s.v[k] + spec.dt * h)) < 1e-12);
        }
    }
}

TEST_CASE("upwind step is monotone under the cfl condition") {
    auto inst = test::table1();
    auto spec = UpwindGridSpec::make(inst, 10, 0.999);
    Rng rng(12);
    auto s = initial_slice(spec, 0);
    for (auto& v : s.v) v = rng.uniform();
    auto base = upwind_step(s, spec, inst);
    for (int t = 0; t < 200; ++t) {
        auto bumped = s;
        bumped.v[rng.below(s.v.size())] += 0.5 * rng.uniform();
        auto out = upwind_step(bumped, spec, inst);
        for (std::size_t k = 0; k < s.v.size(); ++k) CHECK(out.v[k] >= base.v[k] - 1e-15);
    }
}

TEST_CASE("cfl violation is refused with the required step count") {
    auto inst = test::table1();
    auto spec = UpwindGridSpec::make_fixed(inst, 24, 3);
    auto s = initial_slice(spec, 0);
    try {
        upwind_step(s, spec, inst);
        FAIL("expected a refusal");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("need N_t >=") != std::string::npos);
    }
    CHECK_THROWS_AS(solve_r_go_inf(inst, spec), DomainError);
}

TEST_CASE("orthant window gives the full-grid origin value") {
    auto inst = test::table2();
    auto spec = UpwindGridSpec::make(inst, 16);
    PdeOptions full, window;
    full.orthant_only = false;
    full.refine = window.refine = false;
    CHECK(solve_r_go_inf(inst, spec, full).value == solve_r_go_inf(inst, spec, window).value);
}

TEST_CASE("values stay within the terminal range") {
    auto inst = test::table1();
    auto spec = UpwindGridSpec::make(inst, 24);
    PdeOptions opt;
    opt.refine = false;
    auto init = initial_slice(spec, 0);
    const double top = *std::max_element(init.v.begin(), init.v.end());
    auto r = solve_r_go_inf(inst, spec, opt);
    CHECK(r.min_value >= 0.0);
    CHECK(r.max_value <= top + 1e-12);
}

TEST_CASE("identical hypotheses give a vanishing value") {
    auto inst = BanditClass::from_bernoulli({{0.6, 0.3}, {0.6, 0.3}, {0.2, 0.7}}, true);
    PdeOptions opt;
    opt.refine = false;
    auto r = solve_r_go_inf(inst, UpwindGridSpec::make(inst, 24), opt);
    CHECK(std::abs(r.value) < 1e-12);
}

TEST_CASE("origin value is invariant under hypothesis permutation") {
    auto t1 = test::table1();
    auto h = t1.hypotheses();
    std::swap(h[0], h[2]);
    BanditClass perm(h);
    PdeOptions opt;
    opt.refine = false;
    const double a = solve_r_go_inf(t1, UpwindGridSpec::make(t1, 24), opt).value;
    const double b = solve_r_go_inf(perm, UpwindGridSpec::make(perm, 24), opt).value;
    CHECK(std::abs(a - b) <= 1e-12);
}

TEST_CASE("grid refinement shrinks the change in the origin value") {
    auto inst = test::table1();
    PdeOptions opt;
    opt.refine = false;
    double v[3];
    int nx = 24;
    for (double& x : v) {
        x = solve_r_go_inf(inst, UpwindGridSpec::make(inst, nx), opt).value;
        nx *= 2;
    }
    CHECK(std::abs(v[1] - v[2]) < std::abs(v[0] - v[1]));
    auto r = solve_r_go_inf(inst, UpwindGridSpec::make(inst, 24));
    CHECK(r.refinement_estimate == std::abs(r.value - r.fine_value));
    CHECK(std::abs(r.fine_value - v[1]) < 5e-3);
}

TEST_CASE("step callback sees every slice") {
    auto inst = test::table2();
    auto spec = UpwindGridSpec::make(inst, 12);
    PdeOptions opt;
    opt.refine = false;
    int calls = 0, last = 0;
    opt.on_step = [&](int step, const ValueSlice&) {
        ++calls;
        last = step;
    };
    solve_r_go_inf(inst, spec, opt);
    CHECK(calls == spec.N_t);
    CHECK(last == spec.N_t);
}
