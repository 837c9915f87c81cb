#include "gexp/drivers.hpp"
#include "gexp/market.hpp"
#include "gexp/pde.hpp"
#include "gexp/solver.hpp"

#include <chrono>
#include <cstdio>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace gexp;
using clock_type = std::chrono::steady_clock;

double time_once(const std::function<void()>& fn) {
    const auto start = clock_type::now();
    fn();
    return std::chrono::duration<double>(clock_type::now() - start).count();
}

double best_of(int reps, const std::function<void()>& fn) {
    double best = time_once(fn);
    for (int i = 1; i < reps; ++i) best = std::min(best, time_once(fn));
    return best;
}

void report(const char* name, double serial_s, double parallel_s) {
    std::printf("%-24s serial %8.3fs  parallel %8.3fs  speedup %5.2fx\n", name,
                serial_s, parallel_s, serial_s / parallel_s);
}

void bench_lattice() {
    const Driver driver = make_gmu(3.0, 2);
    const LatticeModel model = make_lattice(build_time_grid(0.0, 0.15, 500), 2,
                                            {100.0, 100.0}, {0.2, 0.25},
                                            {0.05, 0.03});
    const Payoff payoff = make_call(100.0, 0.15);
    SolverConfig cfg;
    double sink = 0.0;
    cfg.exec = Exec::serial;
    const double ts = best_of(
        2, [&] { sink += solve_bsde(model, driver, payoff, cfg).root_price; });
    cfg.exec = Exec::parallel;
    const double tp = best_of(
        2, [&] { sink += solve_bsde(model, driver, payoff, cfg).root_price; });
    report("lattice d=2 n=500", ts, tp);
    if (sink == -1.0) std::printf("unreachable\n");
}

void bench_pde() {
    const Driver driver = make_black_scholes(0.05, 0.05, 0.2);
    const Payoff payoff = make_call(100.0, 1.0);

    PdeProblem prob;
    prob.sigma = [](double) { return 0.2; };
    prob.b = [](double) { return 0.05; };
    prob.f = [&driver](double, double u, double v) {
        const double z = v;
        return driver.eval(0.0, u, &z, 1);
    };
    prob.lip_f = driver.mu;
    prob.span = 1.0;
    const PdeGrid grid = make_pde_grid(20.0, 500.0, 2400, [&](double s) {
        NodeState node;
        node.S[0] = s;
        return payoff_value(payoff, node);
    });
    double sink = 0.0;
    const double ts = best_of(2, [&] {
        sink += solve_feynman_kac(prob, grid, Exec::serial).u0[1200];
    });
    const double tp = best_of(2, [&] {
        sink += solve_feynman_kac(prob, grid, Exec::parallel).u0[1200];
    });
    report("pde march m=2400", ts, tp);
    if (sink == -1.0) std::printf("unreachable\n");
}

void bench_scan() {
    const Driver driver = make_black_scholes(0.02, 0.02, 0.2);
    ChainSpec chain;
    for (double k = 70; k <= 130; k += 5) chain.strikes.push_back(k);
    chain.expiries_years = {0.25, 0.5, 1.0};
    chain.steps = 128;
    const auto quotes = synthesize_quotes(driver, chain);

    ScanConfig sc;
    sc.mu = 10.0;
    sc.sigma_for_tree = 0.2;
    sc.drift_for_tree = 0.02;
    sc.steps = 128;
    double sink = 0.0;
    sc.solver.exec = Exec::serial;
    const double ts = best_of(1, [&] { sink += scan(quotes, sc).passes; });
    sc.solver.exec = Exec::parallel;
    const double tp = best_of(1, [&] { sink += scan(quotes, sc).passes; });
    report("scan 13x3 chain", ts, tp);
    if (sink == -1.0) std::printf("unreachable\n");
}

} // namespace

int main() {
#ifdef _OPENMP
    std::printf("openmp: %d threads\n", omp_get_max_threads());
#else
    std::printf("openmp: not enabled\n");
#endif
    bench_lattice();
    bench_pde();
    bench_scan();
    return 0;
}
