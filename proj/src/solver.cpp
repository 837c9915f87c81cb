#include "gexp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gexp {

int min_steps_for(double mu, double t0, double T, double cap) {
    if (cap <= 0.0) throw std::invalid_argument("min_steps_for: cap must be positive");
    if (mu <= 0.0) return 1;
    return std::max(1, static_cast<int>(std::ceil(mu * (T - t0) / cap - 1e-12)));
}

namespace {

// Mean of (A e^{v w} - K) over w in [a, b].
double geometric_call_mean(double A, double v, double K, double a, double b) {
    return (A * (std::exp(v * b) - std::exp(v * a)) / v - K * (b - a)) / (b - a);
}

// Mean over the cell [w1, w2] of the in-the-money part of a call (put) on
// S(w) = A e^{v w}; exact piecewise closed form.
double cell_average_geometric(double A, double v, double K, double w1,
                              double w2, bool is_call) {
    const double h = w2 - w1;
    const double wstar = std::log(K / A) / v;
    double lo, hi; // in-the-money sub-interval
    if (is_call == (v > 0.0)) { // ITM region is w >= wstar
        lo = std::max(w1, wstar);
        hi = w2;
    } else {
        lo = w1;
        hi = std::min(w2, wstar);
    }
    if (hi <= lo) return 0.0;
    const double mean = geometric_call_mean(A, v, K, lo, hi) * (hi - lo) / h;
    return is_call ? mean : -mean;
}

// Same for the arithmetic map S(w) = C + v w (linear integrand).
double cell_average_arithmetic(double C, double v, double K, double w1,
                               double w2, bool is_call) {
    const double h = w2 - w1;
    const double wstar = (K - C) / v;
    double lo, hi;
    if (is_call == (v > 0.0)) {
        lo = std::max(w1, wstar);
        hi = w2;
    } else {
        lo = w1;
        hi = std::min(w2, wstar);
    }
    if (hi <= lo) return 0.0;
    const double mid = 0.5 * (lo + hi);
    const double mean = (C + v * mid - K) * (hi - lo) / h;
    return is_call ? mean : -mean;
}

bool is_vanilla(PayoffKind k) {
    return k == PayoffKind::call || k == PayoffKind::put ||
           k == PayoffKind::short_call || k == PayoffKind::short_put;
}

} // namespace

std::vector<double> sample_terminal(const LatticeModel& model,
                                    const Payoff& payoff,
                                    TerminalSampling sampling) {
    const int n = model.grid.n;
    const int d = model.d;
    const long count = node_count(n, d);
    const double sq = std::sqrt(model.grid.dt);
    std::vector<double> out(count);

    const bool averaged = sampling == TerminalSampling::cell_average &&
                          is_vanilla(payoff.kind) &&
                          model.vol[payoff.asset] != 0.0;
    const bool is_call_like =
        payoff.kind == PayoffKind::call || payoff.kind == PayoffKind::short_call;
    const bool is_short =
        payoff.kind == PayoffKind::short_call || payoff.kind == PayoffKind::short_put;

    for (long idx = 0; idx < count; ++idx) {
        int up[max_dim];
        decode_node(n, d, idx, up);
        NodeState node;
        node.step = n;
        node.d = d;
        node.t = model.grid.T;
        for (int k = 0; k < d; ++k) node.up[k] = up[k];
        node.W = node_brownian_value(model, n, up);
        node.S = node_underlying(model, n, up);
        double v;
        if (!averaged) {
            v = payoff_value(payoff, node);
        } else {
            const int a = payoff.asset;
            const double t = n * model.grid.dt;
            const double vola = model.vol[a];
            const double w1 = node.W[a] - sq;
            const double w2 = node.W[a] + sq;
            if (model.map == UnderlyingMap::geometric) {
                const double A =
                    model.s0[a] * std::exp((model.drift[a] - 0.5 * vola * vola) * t);
                v = cell_average_geometric(A, vola, payoff.strike, w1, w2, is_call_like);
            } else {
                const double C = model.s0[a] + model.drift[a] * t;
                v = cell_average_arithmetic(C, vola, payoff.strike, w1, w2, is_call_like);
            }
            if (is_short) v = -v;
        }
        if (!std::isfinite(v))
            throw std::invalid_argument("sample_terminal: payoff not finite at a terminal node");
        out[idx] = v;
    }
    return out;
}

std::pair<double, int> implicit_step(double expected_next, const double* z,
                                     int d, double t, const Driver& driver,
                                     double dt, const SolverConfig& cfg) {
    if (!(driver.mu * dt < 1.0))
        throw std::invalid_argument("implicit_step: requires mu*dt < 1 for contraction");
    double y = expected_next;
    for (int it = 1; it <= cfg.picard_max_iter; ++it) {
        const double next = expected_next + driver.eval(t, y, z, d) * dt;
        // scale-relative: an absolute 1e-12 is below one ulp once |y| grows
        // past ~4e3, which the lattice extremes reach at large n
        if (std::abs(next - y) <= cfg.picard_tol * (1.0 + std::abs(next)))
            return {next, it};
        y = next;
    }
    const double residual =
        std::abs(expected_next + driver.eval(t, y, z, d) * dt - y);
    throw std::runtime_error(
        "implicit_step: no convergence within " +
        std::to_string(cfg.picard_max_iter) +
        " iterations; last residual = " + std::to_string(residual));
}

namespace {

void validate_solve(const LatticeModel& model, const Driver& driver,
                    const SolverConfig& cfg) {
    if (driver.dim_z != model.d)
        throw std::invalid_argument("solve_bsde: driver z dimension " +
                                    std::to_string(driver.dim_z) +
                                    " does not match lattice dimension " +
                                    std::to_string(model.d));
    if (cfg.picard_tol <= 0.0)
        throw std::invalid_argument("solve_bsde: picard_tol must be positive");
    if (!(cfg.courant_cap < 1.0))
        throw std::invalid_argument("solve_bsde: courant_cap must be below 1");
    const double mudt = driver.mu * model.grid.dt;
    if (mudt > cfg.courant_cap * (1.0 + 1e-12)) {
        const int need = min_steps_for(driver.mu, model.grid.t0, model.grid.T,
                                       cfg.courant_cap);
        throw std::invalid_argument(
            "solve_bsde: mu*dt = " + std::to_string(mudt) + " exceeds cap " +
            std::to_string(cfg.courant_cap) +
            "; minimal compliant n = " + std::to_string(need));
    }
}

} // namespace

BsdeSolution solve_bsde_terminal(const LatticeModel& model,
                                 const Driver& driver,
                                 std::vector<double> terminal,
                                 const SolverConfig& cfg) {
    validate_solve(model, driver, cfg);
    const int n = model.grid.n;
    const int d = model.d;
    const double dt = model.grid.dt;
    if (static_cast<long>(terminal.size()) != node_count(n, d))
        throw std::invalid_argument("solve_bsde: terminal field has wrong size");
    for (double v : terminal)
        if (!std::isfinite(v))
            throw std::invalid_argument("solve_bsde: terminal field not finite");

    BsdeSolution sol;
    sol.scheme = cfg.scheme;
    sol.y.resize(n + 1);
    sol.z.resize(n);
    sol.picard_iterations.assign(n, 0);
    sol.y[n] = std::move(terminal);

    const bool zero_payoff =
        driver.traits.zero_at_origin &&
        std::all_of(sol.y[n].begin(), sol.y[n].end(),
                    [](double v) { return v == 0.0; });
    if (zero_payoff) {
        for (int i = n - 1; i >= 0; --i) {
            sol.y[i].assign(node_count(i, d), 0.0);
            sol.z[i].assign(node_count(i, d) * d, 0.0);
        }
        sol.root_price = 0.0;
        return sol;
    }

    const double inv_sq = 1.0 / std::sqrt(dt);
    const int branches = 1 << d;

    for (int i = n - 1; i >= 0; --i) {
        const std::vector<double>& ynext = sol.y[i + 1];
        const long cnt = node_count(i, d);
        std::vector<double>& yi = sol.y[i];
        std::vector<double>& zi = sol.z[i];
        yi.resize(cnt);
        zi.resize(cnt * d);
        const double t = model.grid.time_at(i);

        long cbase[max_dim];
        cbase[0] = 1;
        for (int k = 1; k < d; ++k) cbase[k] = cbase[k - 1] * (i + 2);

        int iter_max = 0;
        bool failed = false;
        std::string fail_msg;

        const bool par = cfg.exec == Exec::parallel && cnt >= 256;
#pragma omp parallel for schedule(static) reduction(max : iter_max) if (par)
        for (long idx = 0; idx < cnt; ++idx) {
            if (failed) continue;
            try {
                int up[max_dim];
                decode_node(i, d, idx, up);
                long child0 = 0;
                for (int k = 0; k < d; ++k) child0 += up[k] * cbase[k];
                double sum = 0.0;
                double zsum[max_dim] = {0.0, 0.0, 0.0};
                for (int br = 0; br < branches; ++br) {
                    long cidx = child0;
                    for (int k = 0; k < d; ++k)
                        if ((br >> k) & 1) cidx += cbase[k];
                    const double v = ynext[cidx];
                    sum += v;
                    for (int k = 0; k < d; ++k)
                        zsum[k] += ((br >> k) & 1) ? v : -v;
                }
                const double inv = 1.0 / branches;
                const double expected = sum * inv;
                double z[max_dim];
                for (int k = 0; k < d; ++k) z[k] = zsum[k] * inv * inv_sq;

                double yv;
                int iters;
                if (cfg.scheme == Scheme::implicit_picard) {
                    const auto [v, it] = implicit_step(expected, z, d, t, driver, dt, cfg);
                    yv = v;
                    iters = it;
                } else {
                    yv = expected + driver.eval(t, expected, z, d) * dt;
                    iters = 1;
                }
                yi[idx] = yv;
                for (int k = 0; k < d; ++k) zi[idx * d + k] = z[k];
                iter_max = std::max(iter_max, iters);
            } catch (const std::exception& ex) {
#pragma omp critical
                {
                    if (!failed) {
                        failed = true;
                        fail_msg = ex.what();
                    }
                }
            }
        }
        if (failed) throw std::runtime_error(fail_msg);
        sol.picard_iterations[i] = iter_max;
    }
    sol.root_price = sol.y[0][0];
    return sol;
}

BsdeSolution solve_bsde(const LatticeModel& model, const Driver& driver,
                        const Payoff& payoff, const SolverConfig& cfg) {
    const double scale = std::max(1.0, std::abs(model.grid.T));
    if (std::abs(payoff.maturity - model.grid.T) > 1e-9 * scale)
        throw std::invalid_argument("solve_bsde: payoff maturity must equal grid end");
    return solve_bsde_terminal(model, driver,
                               sample_terminal(model, payoff, cfg.sampling), cfg);
}

std::vector<double> g_expectation(const LatticeModel& model,
                                  const Driver& driver, const Payoff& payoff,
                                  int t_index, const SolverConfig& cfg) {
    if (t_index < 0 || t_index > model.grid.n)
        throw std::invalid_argument("g_expectation: step index out of range");
    return solve_bsde(model, driver, payoff, cfg).y[t_index];
}

} // namespace gexp
