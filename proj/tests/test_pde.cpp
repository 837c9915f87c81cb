#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gexp/drivers.hpp"
#include "gexp/pde.hpp"

#include <cmath>
#include <stdexcept>

using namespace gexp;

namespace {

PdeProblem problem_from(const Driver& driver, double sigma, double drift,
                        double span) {
    PdeProblem prob;
    prob.f = [driver](double, double u, double v) {
        const double z = v;
        return driver.eval(0.0, u, &z, 1);
    };
    prob.sigma = [sigma](double) { return sigma; };
    prob.b = [drift](double) { return drift; };
    prob.lip_f = driver.mu;
    prob.span = span;
    return prob;
}

double u_at(const PdeSolution& sol, double s0) {
    const double ds = sol.s[1] - sol.s[0];
    const int m = static_cast<int>(sol.s.size()) - 1;
    const int j = std::min(std::max(static_cast<int>((s0 - sol.s[0]) / ds), 0), m - 1);
    const double w = (s0 - sol.s[j]) / ds;
    return (1.0 - w) * sol.u0[j] + w * sol.u0[j + 1];
}

} // namespace

TEST_CASE("grid construction and validation") {
    const auto phi = [](double s) { return s; };
    const PdeGrid grid = make_pde_grid(20.0, 500.0, 100, phi);
    CHECK(grid.terminal.size() == 101);
    CHECK(grid.terminal.front() == 20.0);
    CHECK(grid.boundary_hi == 500.0);
    CHECK_THROWS_AS(make_pde_grid(500.0, 20.0, 100, phi), std::invalid_argument);
    CHECK_THROWS_AS(make_pde_grid(20.0, 500.0, 1, phi), std::invalid_argument);
    CHECK_THROWS_AS(make_pde_grid(20.0, 500.0, 100, phi, -1), std::invalid_argument);
    CHECK_THROWS_AS(make_pde_grid(20.0, 500.0, 100, nullptr), std::invalid_argument);
    CHECK_THROWS_AS(
        make_pde_grid(20.0, 500.0, 100, [](double) { return std::nan(""); }),
        std::invalid_argument);
}

TEST_CASE("driftless heat march preserves linear profiles") {
    const PdeProblem prob = problem_from(make_zero(), 0.2, 0.0, 1.0);
    const PdeGrid grid = make_pde_grid(20.0, 500.0, 100, [](double s) { return s; });
    const PdeSolution sol = solve_feynman_kac(prob, grid);
    for (std::size_t j = 0; j < sol.s.size(); ++j)
        CHECK(sol.u0[j] == doctest::Approx(sol.s[j]).epsilon(1e-12));
}

TEST_CASE("constant terminal data is a fixed point") {
    const PdeProblem prob = problem_from(make_zero(), 0.2, 0.05, 1.0);
    const PdeGrid grid = make_pde_grid(20.0, 500.0, 64, [](double) { return 7.5; });
    const PdeSolution sol = solve_feynman_kac(prob, grid);
    for (double v : sol.u0) CHECK(v == 7.5);
}

TEST_CASE("lognormal closed form") {
    CHECK(black_scholes_closed_form(100.0, 100.0, 0.05, 0.2, 1.0, true) ==
          doctest::Approx(10.450583572185565).epsilon(1e-12));
    // put-call parity
    const double call = black_scholes_closed_form(100.0, 90.0, 0.05, 0.2, 1.0, true);
    const double put = black_scholes_closed_form(100.0, 90.0, 0.05, 0.2, 1.0, false);
    CHECK(call - put ==
          doctest::Approx(100.0 - 90.0 * std::exp(-0.05)).epsilon(1e-12));
    // deep in the money the call is a forward
    CHECK(black_scholes_closed_form(100.0, 0.01, 0.05, 0.2, 1.0, true) ==
          doctest::Approx(100.0 - 0.01 * std::exp(-0.05)).epsilon(1e-9));
    // vanishing horizon recovers the payoff
    CHECK(black_scholes_closed_form(100.0, 90.0, 0.05, 0.2, 1e-10, true) ==
          doctest::Approx(10.0).epsilon(1e-6));
    CHECK_THROWS_AS(black_scholes_closed_form(-1.0, 90.0, 0.05, 0.2, 1.0, true),
                    std::invalid_argument);
    CHECK_THROWS_AS(black_scholes_closed_form(100.0, 0.0, 0.05, 0.2, 1.0, true),
                    std::invalid_argument);
    CHECK_THROWS_AS(black_scholes_closed_form(100.0, 90.0, 0.05, 0.0, 1.0, true),
                    std::invalid_argument);
    CHECK_THROWS_AS(black_scholes_closed_form(100.0, 90.0, 0.05, 0.2, 0.0, true),
                    std::invalid_argument);
}

TEST_CASE("march converges to the lognormal price at second order in ds") {
    const Driver drv = make_black_scholes(0.05, 0.05, 0.2);
    const double cf = black_scholes_closed_form(100.0, 100.0, 0.05, 0.2, 1.0, true);
    const PdeProblem prob = problem_from(drv, 0.2, 0.05, 1.0);
    const auto phi = [](double s) { return std::max(s - 100.0, 0.0); };

    const PdeSolution coarse =
        solve_feynman_kac(prob, make_pde_grid(20.0, 500.0, 100, phi));
    const PdeSolution fine =
        solve_feynman_kac(prob, make_pde_grid(20.0, 500.0, 200, phi));
    const double e_coarse = u_at(coarse, 100.0) - cf;
    const double e_fine = u_at(fine, 100.0) - cf;
    CHECK(std::abs(e_fine) < 0.02);
    CHECK(std::abs(e_coarse) / std::abs(e_fine) >= 3.0);
    CHECK(std::abs(e_coarse) / std::abs(e_fine) <= 5.0);
}

TEST_CASE("stability bound is enforced") {
    const PdeProblem prob = problem_from(make_black_scholes(0.05, 0.05, 0.2),
                                         0.2, 0.05, 1.0);
    const auto phi = [](double s) { return std::max(s - 100.0, 0.0); };
    const int n_min = min_stable_time_steps(prob, make_pde_grid(20.0, 500.0, 100, phi));
    CHECK(n_min > 1);

    const PdeGrid low = make_pde_grid(20.0, 500.0, 100, phi, n_min - 1);
    CHECK_THROWS_WITH(solve_feynman_kac(prob, low),
                      doctest::Contains("below the stability bound"));
    CHECK_THROWS_WITH(solve_feynman_kac(prob, low),
                      doctest::Contains(std::to_string(n_min).c_str()));

    const PdeGrid auto_grid = make_pde_grid(20.0, 500.0, 100, phi, 0);
    const PdeSolution sol = solve_feynman_kac(prob, auto_grid);
    CHECK(sol.n_t_used == n_min);

    const PdeGrid ok = make_pde_grid(20.0, 500.0, 100, phi, n_min + 5);
    CHECK(solve_feynman_kac(prob, ok).n_t_used == n_min + 5);
}

TEST_CASE("comparison principle under a nonlinear generator") {
    const PdeProblem prob = problem_from(make_gmu(0.5), 0.2, 0.05, 0.5);
    const auto lo_phi = [](double s) { return std::max(100.0 - s, 0.0); };
    const auto hi_phi = [lo_phi](double s) {
        return lo_phi(s) + 0.2 + 0.1 * std::sin(s);
    };
    const PdeSolution lo = solve_feynman_kac(prob, make_pde_grid(20.0, 500.0, 128, lo_phi));
    const PdeSolution hi = solve_feynman_kac(prob, make_pde_grid(20.0, 500.0, 128, hi_phi));
    for (std::size_t j = 0; j < lo.u0.size(); ++j)
        CHECK(hi.u0[j] >= lo.u0[j] - 1e-10);
}

TEST_CASE("saved slices") {
    const PdeProblem prob = problem_from(make_zero(), 0.2, 0.0, 1.0);
    const PdeGrid grid =
        make_pde_grid(20.0, 500.0, 100, [](double s) { return std::max(s - 100.0, 0.0); });
    const PdeSolution sol = solve_feynman_kac(prob, grid);
    REQUIRE(!sol.slices.empty());
    CHECK(sol.slices.front().first == 0.0);
    CHECK(sol.slices.front().second == grid.terminal);
    const int stride = std::max(1, sol.n_t_used / 100);
    CHECK(static_cast<int>(sol.slices.size()) <= 2 + sol.n_t_used / stride);
    for (std::size_t i = 1; i < sol.slices.size(); ++i)
        CHECK(sol.slices[i].first > sol.slices[i - 1].first);
    CHECK(sol.slices.back().first == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sol.slices.back().second == sol.u0);
}

TEST_CASE("cross check agrees across the two engines") {
    SUBCASE("constants are exact under the zero generator") {
        const LatticeModel model =
            make_lattice(build_time_grid(0.0, 1.0, 16), 1, {100.0}, {0.2}, {0.05});
        const auto res =
            cross_check(model, make_zero(), make_constant(4.2, 1.0), 64);
        CHECK(res.gap == 0.0);
        CHECK(res.lattice_price == 4.2);
        CHECK(res.pde_price == 4.2);
    }
    SUBCASE("replication driver prices a call consistently") {
        const LatticeModel model =
            make_lattice(build_time_grid(0.0, 1.0, 500), 1, {100.0}, {0.2}, {0.05});
        const auto res = cross_check(model, make_black_scholes(0.05, 0.05, 0.2),
                                     make_call(100.0, 1.0), 200);
        CHECK(std::abs(res.gap) <= 0.02);
        CHECK(res.lattice_steps == 500);
        CHECK(res.pde_time_steps > 0);
        const double cf = black_scholes_closed_form(100.0, 100.0, 0.05, 0.2, 1.0, true);
        CHECK(std::abs(res.lattice_price - cf) <= 0.02);
        CHECK(std::abs(res.pde_price - cf) <= 0.02);
    }
    SUBCASE("nonlinear generator, put payoff") {
        const LatticeModel model =
            make_lattice(build_time_grid(0.0, 1.0, 500), 1, {100.0}, {0.2}, {0.05});
        const auto res =
            cross_check(model, make_gmu(0.5), make_put(100.0, 1.0), 200);
        CHECK(std::abs(res.gap) <= 0.1);
    }
    SUBCASE("validation") {
        const LatticeModel m2 = make_lattice(build_time_grid(0.0, 1.0, 4), 2,
                                             {100.0, 100.0}, {0.2, 0.2}, {0.0, 0.0});
        CHECK_THROWS_WITH(cross_check(m2, make_gmu(1.0, 2), make_call(100.0, 1.0), 32),
                          doctest::Contains("one-dimensional"));
        const LatticeModel m1 =
            make_lattice(build_time_grid(0.0, 1.0, 4), 1, {100.0}, {0.2}, {0.0});
        CHECK_THROWS_WITH(
            cross_check(m1, make_zero(), make_linear_in_B({1.0, 0.0, 0.0}, 1.0), 32),
            doctest::Contains("terminal spot"));
    }
}
