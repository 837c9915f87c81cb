#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gexp/drivers.hpp"
#include "gexp/pde.hpp"
#include "gexp/solver.hpp"

#include <cmath>
#include <stdexcept>

using namespace gexp;

namespace {

// y-independent driver g(z) = mu * sum |z_k|; the toy-model fixture
Driver make_abs_z(double mu, int dim_z = 1) {
    Driver drv;
    drv.name = "abs_z";
    drv.dim_z = dim_z;
    drv.mu = mu;
    drv.depends_on_y = false;
    drv.eval = [mu](double, double, const double* z, int d) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) s += std::abs(z[k]);
        return mu * s;
    };
    drv.traits.zero_at_origin = true;
    drv.traits.zero_for_zero_z = true;
    drv.traits.shape = DriverTraits::Shape::convex;
    drv.traits.positively_homogeneous = true;
    drv.traits.subadditive = true;
    return drv;
}

LatticeModel unit_lattice(int n, double T = 1.0) {
    return make_lattice(build_time_grid(0.0, T, n), 1, {100.0}, {0.2}, {0.05});
}

} // namespace

TEST_CASE("min_steps_for") {
    CHECK(min_steps_for(25.0, 0.0, 1.0, 0.5) == 50);
    CHECK(min_steps_for(3.0, 0.0, 1.0, 0.5) == 6);
    CHECK(min_steps_for(1.0, 0.0, 1.0, 0.5) == 2);
    CHECK(min_steps_for(0.0, 0.0, 1.0, 0.5) == 1);
    CHECK(min_steps_for(2.0, 0.5, 1.5, 0.5) == 4);
    CHECK_THROWS_AS(min_steps_for(1.0, 0.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("zero driver prices the martingale payoff at zero") {
    for (int n : {4, 9, 16}) {
        const auto sol = solve_bsde(unit_lattice(n), make_zero(),
                                    make_linear_in_B({1.0, 0.0, 0.0}, 1.0), {});
        CHECK(std::abs(sol.root_price) <= 1e-13);
    }
}

TEST_CASE("linear -r*y driver on a constant payoff telescopes") {
    // r = b makes the replication driver collapse to -r*y
    const Driver drv = make_black_scholes(0.05, 0.05, 0.2);
    const auto sol =
        solve_bsde(unit_lattice(10), drv, make_constant(1.0, 1.0), {});
    const double expected = std::pow(1.0 + 0.05 * 0.1, -10);
    CHECK(sol.root_price == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(0.951348).epsilon(1e-6));
}

TEST_CASE("toy model telescopes to mu*|zbar|*T exactly") {
    const Driver drv = make_abs_z(3.0);
    for (int n : {10, 16, 25}) {
        const auto sol = solve_bsde(unit_lattice(n), drv,
                                    make_linear_in_B({2.0, 0.0, 0.0}, 1.0), {});
        CHECK(sol.root_price == doctest::Approx(6.0).epsilon(1e-12));
    }
}

TEST_CASE("z field is exactly zbar on linear payoffs") {
    const Driver drv = make_abs_z(3.0);
    const LatticeModel model = unit_lattice(8);
    const auto sol =
        solve_bsde(model, drv, make_linear_in_B({2.0, 0.0, 0.0}, 1.0), {});
    for (int i = 0; i < 8; ++i)
        for (double z : sol.z[i])
            CHECK(z == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("terminal field equals the sampled payoff bit for bit") {
    const LatticeModel model = unit_lattice(12);
    const Payoff payoff = make_call(95.0, 1.0);
    SolverConfig cfg;
    const auto expected = sample_terminal(model, payoff, cfg.sampling);
    const auto sol = solve_bsde(model, make_gmu(3.0), payoff, cfg);
    REQUIRE(sol.y[12].size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i)
        CHECK(sol.y[12][i] == expected[i]);
}

TEST_CASE("implicit step fixed points") {
    SolverConfig cfg;
    SUBCASE("zero driver converges immediately") {
        const double z = 0.3;
        const auto [y, it] = implicit_step(1.7, &z, 1, 0.0, make_zero(), 0.1, cfg);
        CHECK(y == 1.7);
        CHECK(it == 1);
    }
    SUBCASE("linear -r*y fixed point") {
        const Driver drv = make_black_scholes(0.05, 0.05, 0.2);
        const double z = 0.0;
        const auto [y, it] = implicit_step(1.0, &z, 1, 0.0, drv, 0.1, cfg);
        CHECK(y == doctest::Approx(1.0 / 1.005).epsilon(1e-12));
        CHECK(it >= 2);
    }
    SUBCASE("y-independent driver needs one correction") {
        const Driver drv = make_abs_z(3.0);
        const double z = 2.0;
        const auto [y, it] = implicit_step(5.0, &z, 1, 0.0, drv, 0.1, cfg);
        CHECK(y == doctest::Approx(5.0 + 3.0 * 2.0 * 0.1).epsilon(1e-14));
        CHECK(it <= 2);
    }
    SUBCASE("contraction precondition") {
        const double z = 0.0;
        CHECK_THROWS_AS(implicit_step(1.0, &z, 1, 0.0, make_gmu(25.0), 0.05, cfg),
                        std::invalid_argument);
    }
}

TEST_CASE("courant violations name the minimal compliant step count") {
    const Driver drv = make_gmu(25.0);
    CHECK_THROWS_WITH(solve_bsde(unit_lattice(10), drv, make_call(100.0, 1.0), {}),
                      doctest::Contains("minimal compliant n = 50"));
    CHECK_NOTHROW(solve_bsde(unit_lattice(50), drv, make_call(100.0, 1.0), {}));
}

TEST_CASE("solver input validation") {
    SolverConfig cfg;
    SUBCASE("dimension mismatch") {
        const LatticeModel m2 =
            make_lattice(build_time_grid(0.0, 1.0, 4), 2, {100.0, 100.0},
                         {0.2, 0.2}, {0.0, 0.0});
        CHECK_THROWS_AS(solve_bsde(m2, make_gmu(1.0, 1), make_constant(1.0, 1.0), cfg),
                        std::invalid_argument);
    }
    SUBCASE("maturity mismatch") {
        CHECK_THROWS_AS(
            solve_bsde(unit_lattice(4), make_zero(), make_constant(1.0, 0.5), cfg),
            std::invalid_argument);
    }
    SUBCASE("bad config") {
        cfg.picard_tol = 0.0;
        CHECK_THROWS_AS(
            solve_bsde(unit_lattice(4), make_zero(), make_constant(1.0, 1.0), cfg),
            std::invalid_argument);
        cfg.picard_tol = 1e-12;
        cfg.courant_cap = 1.0;
        CHECK_THROWS_AS(
            solve_bsde(unit_lattice(4), make_zero(), make_constant(1.0, 1.0), cfg),
            std::invalid_argument);
    }
    SUBCASE("wrong terminal size") {
        CHECK_THROWS_AS(solve_bsde_terminal(unit_lattice(4), make_zero(),
                                            std::vector<double>(3, 0.0), cfg),
                        std::invalid_argument);
    }
    SUBCASE("non-finite terminal") {
        std::vector<double> bad(5, 0.0);
        bad[2] = std::nan("");
        CHECK_THROWS_AS(solve_bsde_terminal(unit_lattice(4), make_zero(), bad, cfg),
                        std::invalid_argument);
    }
}

TEST_CASE("zero payoff short-circuits only for self-financing drivers") {
    const LatticeModel model = unit_lattice(10);
    const std::vector<double> zero(node_count(10, 1), 0.0);
    const auto sol = solve_bsde_terminal(model, make_gmu(3.0), zero, {});
    for (const auto& level : sol.y)
        for (double v : level) CHECK(v == 0.0);
    CHECK(sol.root_price == 0.0);

    // g = 1 integrates to T even on the zero payoff
    const auto grow = solve_bsde_terminal(model, make_constant_driver(1.0), zero, {});
    CHECK(grow.root_price == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("explicit scheme matches implicit on y-independent drivers") {
    const Driver drv = make_abs_z(3.0);
    SolverConfig imp;
    SolverConfig exp = imp;
    exp.scheme = Scheme::explicit_euler;
    const auto a = solve_bsde(unit_lattice(16), drv, make_call(100.0, 1.0), imp);
    const auto b = solve_bsde(unit_lattice(16), drv, make_call(100.0, 1.0), exp);
    CHECK(a.root_price == doctest::Approx(b.root_price).epsilon(1e-12));

    // and differs only at O(dt) on y-dependent ones
    const Driver bs = make_black_scholes(0.05, 0.05, 0.2);
    const auto c = solve_bsde(unit_lattice(100), bs, make_call(100.0, 1.0), imp);
    const auto d = solve_bsde(unit_lattice(100), bs, make_call(100.0, 1.0), exp);
    CHECK(std::abs(c.root_price - d.root_price) < 0.05);
    CHECK(c.root_price != d.root_price);
}

TEST_CASE("serial and parallel execution are bit identical") {
    const Driver drv = make_gmu(3.0, 2);
    const LatticeModel model =
        make_lattice(build_time_grid(0.0, 0.5, 24), 2, {100.0, 90.0},
                     {0.2, 0.3}, {0.05, 0.0});
    std::vector<double> terminal(node_count(24, 2));
    for (std::size_t i = 0; i < terminal.size(); ++i)
        terminal[i] = 50.0 * std::sin(static_cast<double>(i));
    SolverConfig ser, par;
    ser.exec = Exec::serial;
    par.exec = Exec::parallel;
    const auto a = solve_bsde_terminal(model, drv, terminal, ser);
    const auto b = solve_bsde_terminal(model, drv, terminal, par);
    REQUIRE(a.y.size() == b.y.size());
    for (std::size_t i = 0; i < a.y.size(); ++i) {
        REQUIRE(a.y[i].size() == b.y[i].size());
        for (std::size_t j = 0; j < a.y[i].size(); ++j)
            CHECK(a.y[i][j] == b.y[i][j]);
    }
    for (std::size_t i = 0; i < a.z.size(); ++i)
        for (std::size_t j = 0; j < a.z[i].size(); ++j)
            CHECK(a.z[i][j] == b.z[i][j]);
}

TEST_CASE("cell averages match numerical integration") {
    const LatticeModel model = unit_lattice(6);
    const double sq = std::sqrt(model.grid.dt);

    const auto numeric_mean = [&](const Payoff& payoff, double Wc) {
        const double t = 6 * model.grid.dt;
        const auto value_at = [&](double w) {
            NodeState node;
            node.d = 1;
            node.S[0] = model.s0[0] *
                        std::exp((model.drift[0] - 0.02) * t + model.vol[0] * w);
            return payoff_value(payoff, node);
        };
        const auto simpson = [&](double a, double b) {
            const int steps = 2000;
            const double h = (b - a) / steps;
            double acc = 0.0;
            for (int i = 0; i <= steps; ++i) {
                const double weight = (i == 0 || i == steps) ? 1.0
                                      : (i % 2 == 1)         ? 4.0
                                                             : 2.0;
                acc += weight * value_at(a + i * h);
            }
            return acc * h / 3.0;
        };
        // split at the strike's kink so each Simpson piece is smooth
        const double lo = Wc - sq, hi = Wc + sq;
        const double wk = (std::log(payoff.strike / model.s0[0]) -
                           (model.drift[0] - 0.02) * t) /
                          model.vol[0];
        const double integral = (wk > lo && wk < hi)
                                    ? simpson(lo, wk) + simpson(wk, hi)
                                    : simpson(lo, hi);
        return integral / (hi - lo);
    };

    for (double strike : {80.0, 100.0, 104.0, 130.0}) {
        for (int u : {2, 3, 4}) {
            int up[] = {u};
            const double Wc = node_brownian_value(model, 6, up)[0];
            for (bool call : {true, false}) {
                const Payoff p = call ? make_call(strike, 1.0) : make_put(strike, 1.0);
                const auto field =
                    sample_terminal(model, p, TerminalSampling::cell_average);
                CHECK(field[u] ==
                      doctest::Approx(numeric_mean(p, Wc)).epsilon(1e-8));
            }
        }
    }

    // short positions are exact negations of the averaged long positions
    const auto longf =
        sample_terminal(model, make_call(100.0, 1.0), TerminalSampling::cell_average);
    const auto shortf = sample_terminal(model, make_short_call(100.0, 1.0),
                                        TerminalSampling::cell_average);
    for (std::size_t i = 0; i < longf.size(); ++i)
        CHECK(shortf[i] == -longf[i]);
}

TEST_CASE("cell averaging leaves non-vanilla payoffs pointwise") {
    const LatticeModel model = unit_lattice(6);
    for (const Payoff& p :
         {make_constant(3.0, 1.0), make_linear_in_B({1.5, 0.0, 0.0}, 1.0)}) {
        const auto a = sample_terminal(model, p, TerminalSampling::cell_average);
        const auto b = sample_terminal(model, p, TerminalSampling::pointwise);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    }
    // zero volatility disables averaging as well
    const LatticeModel flat =
        make_lattice(build_time_grid(0.0, 1.0, 6), 1, {100.0}, {0.0}, {0.05});
    const auto a = sample_terminal(flat, make_call(90.0, 1.0),
                                   TerminalSampling::cell_average);
    const auto b =
        sample_terminal(flat, make_call(90.0, 1.0), TerminalSampling::pointwise);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("lattice convergence to the lognormal closed form is first order") {
    const Driver drv = make_black_scholes(0.05, 0.05, 0.2);
    const double cf = black_scholes_closed_form(100.0, 100.0, 0.05, 0.2, 1.0, true);
    const double e100 =
        solve_bsde(unit_lattice(100), drv, make_call(100.0, 1.0), {}).root_price - cf;
    const double e200 =
        solve_bsde(unit_lattice(200), drv, make_call(100.0, 1.0), {}).root_price - cf;
    CHECK(std::abs(e200) < 0.02);
    CHECK(e200 / e100 == doctest::Approx(0.5).epsilon(0.35));
}

TEST_CASE("g_expectation restricts the field") {
    const Driver drv = make_zero();
    const LatticeModel model = unit_lattice(6);
    const Payoff payoff = make_linear_in_B({2.0, 0.0, 0.0}, 1.0);
    const auto field = g_expectation(model, drv, payoff, 3, {});
    REQUIRE(field.size() == 4);
    for (int u = 0; u <= 3; ++u) {
        int up[] = {u};
        const double W = node_brownian_value(model, 3, up)[0];
        CHECK(field[u] == doctest::Approx(2.0 * W).epsilon(1e-12));
    }
    const auto terminal = g_expectation(model, drv, payoff, 6, {});
    const auto sampled = sample_terminal(model, payoff, SolverConfig{}.sampling);
    for (std::size_t i = 0; i < sampled.size(); ++i)
        CHECK(terminal[i] == sampled[i]);
    CHECK_THROWS_AS(g_expectation(model, drv, payoff, 7, {}),
                    std::invalid_argument);
    CHECK_THROWS_AS(g_expectation(model, drv, payoff, -1, {}),
                    std::invalid_argument);
}

TEST_CASE("picard iteration counts are recorded") {
    const auto sol =
        solve_bsde(unit_lattice(10), make_gmu(3.0), make_call(100.0, 1.0), {});
    REQUIRE(sol.picard_iterations.size() == 10);
    for (int it : sol.picard_iterations) {
        CHECK(it >= 1);
        CHECK(it <= 100);
    }
}
