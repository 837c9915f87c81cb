#include "gexp/pde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gexp {

PdeGrid make_pde_grid(double s_min, double s_max, int m,
                      const std::function<double(double)>& phi, int n_t) {
    if (!(s_min < s_max) || !std::isfinite(s_min) || !std::isfinite(s_max))
        throw std::invalid_argument("make_pde_grid: requires s_min < s_max");
    if (m < 2) throw std::invalid_argument("make_pde_grid: m must be at least 2");
    if (n_t < 0) throw std::invalid_argument("make_pde_grid: n_t must be >= 0");
    if (!phi) throw std::invalid_argument("make_pde_grid: missing terminal function");
    PdeGrid grid;
    grid.s_min = s_min;
    grid.s_max = s_max;
    grid.m = m;
    grid.n_t = n_t;
    const double ds = (s_max - s_min) / m;
    grid.terminal.resize(m + 1);
    for (int j = 0; j <= m; ++j) {
        const double v = phi(s_min + ds * j);
        if (!std::isfinite(v))
            throw std::invalid_argument("make_pde_grid: terminal value not finite");
        grid.terminal[j] = v;
    }
    grid.boundary_lo = grid.terminal.front();
    grid.boundary_hi = grid.terminal.back();
    return grid;
}

namespace {

void validate_problem(const PdeProblem& prob, const PdeGrid& grid) {
    if (!prob.f || !prob.sigma || !prob.b)
        throw std::invalid_argument("pde: problem is missing f, sigma or b");
    if (!(prob.span > 0.0) || !std::isfinite(prob.span))
        throw std::invalid_argument("pde: span must be positive");
    if (prob.lip_f < 0.0)
        throw std::invalid_argument("pde: lip_f must be >= 0");
    if (grid.m < 2 || static_cast<int>(grid.terminal.size()) != grid.m + 1)
        throw std::invalid_argument("pde: grid terminal has wrong size");
    if (!(grid.s_min < grid.s_max))
        throw std::invalid_argument("pde: requires s_min < s_max");
}

} // namespace

int min_stable_time_steps(const PdeProblem& prob, const PdeGrid& grid) {
    validate_problem(prob, grid);
    const double ds = (grid.s_max - grid.s_min) / grid.m;
    double max_diff = 0.0, max_adv = 0.0;
    for (int j = 0; j <= grid.m; ++j) {
        const double s = grid.s_min + ds * j;
        const double lam = prob.sigma(s) * s;
        max_diff = std::max(max_diff, lam * lam);
        max_adv = std::max(max_adv, std::abs(prob.b(s) * s));
    }
    const double denom = max_diff + max_adv * ds + prob.lip_f * ds * ds;
    if (denom <= 0.0) return 1;
    const double dtau_max = ds * ds / denom;
    return std::max(1, static_cast<int>(std::ceil(prob.span / dtau_max - 1e-12)));
}

PdeSolution solve_feynman_kac(const PdeProblem& prob, const PdeGrid& grid,
                              Exec exec) {
    validate_problem(prob, grid);
    const int m = grid.m;
    const int n_min = min_stable_time_steps(prob, grid);
    const int n_t = grid.n_t == 0 ? n_min : grid.n_t;
    if (n_t < n_min)
        throw std::invalid_argument(
            "pde: n_t = " + std::to_string(n_t) +
            " is below the stability bound; minimal stable count = " +
            std::to_string(n_min));

    const double ds = (grid.s_max - grid.s_min) / m;
    const double dtau = prob.span / n_t;

    PdeSolution sol;
    sol.n_t_used = n_t;
    sol.s.resize(m + 1);
    for (int j = 0; j <= m; ++j) sol.s[j] = grid.s_min + ds * j;

    std::vector<double> lam(m + 1), adv(m + 1);
    for (int j = 0; j <= m; ++j) {
        lam[j] = prob.sigma(sol.s[j]) * sol.s[j];
        adv[j] = prob.b(sol.s[j]) * sol.s[j];
    }

    std::vector<double> u = grid.terminal;
    std::vector<double> next(m + 1);
    const int slice_stride = std::max(1, n_t / 100);
    sol.slices.emplace_back(0.0, u);

    const double inv_ds2 = 1.0 / (ds * ds);
    const double inv_2ds = 0.5 / ds;
    const bool par = exec == Exec::parallel && m > 2048;

    bool failed = false;
    std::string fail_msg;
    for (int q = 0; q < n_t; ++q) {
        next[0] = grid.boundary_lo;
        next[m] = grid.boundary_hi;
#pragma omp parallel for schedule(static) if (par)
        for (int j = 1; j < m; ++j) {
            if (failed) continue;
            try {
                const double d2 = (u[j + 1] - 2.0 * u[j] + u[j - 1]) * inv_ds2;
                const double d1 = (u[j + 1] - u[j - 1]) * inv_2ds;
                next[j] = u[j] + dtau * (0.5 * lam[j] * lam[j] * d2 + adv[j] * d1 +
                                         prob.f(sol.s[j], u[j], lam[j] * d1));
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
        u.swap(next);
        if ((q + 1) % slice_stride == 0 || q + 1 == n_t)
            sol.slices.emplace_back(dtau * (q + 1), u);
    }
    for (double v : u)
        if (!std::isfinite(v))
            throw std::runtime_error("pde: solution blew up despite stable step");
    sol.u0 = std::move(u);
    return sol;
}

double black_scholes_closed_form(double s0, double strike, double r,
                                 double sigma, double T, bool is_call) {
    if (!(s0 > 0.0) || !(strike > 0.0))
        throw std::invalid_argument("black_scholes_closed_form: requires s0, strike > 0");
    if (!(sigma > 0.0))
        throw std::invalid_argument("black_scholes_closed_form: requires sigma > 0");
    if (!(T > 0.0))
        throw std::invalid_argument("black_scholes_closed_form: requires T > 0");
    const auto Phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
    const double sq = sigma * std::sqrt(T);
    const double d1 = (std::log(s0 / strike) + (r + 0.5 * sigma * sigma) * T) / sq;
    const double d2 = d1 - sq;
    const double call = s0 * Phi(d1) - strike * std::exp(-r * T) * Phi(d2);
    if (is_call) return call;
    return call - s0 + strike * std::exp(-r * T);
}

CrossCheckResult cross_check(const LatticeModel& model, const Driver& driver,
                             const Payoff& payoff, int m,
                             const SolverConfig& cfg, int n_t) {
    if (model.d != 1)
        throw std::invalid_argument("cross_check: requires a one-dimensional model");
    std::function<double(double)> phi;
    switch (payoff.kind) {
    case PayoffKind::call:
        phi = [k = payoff.strike](double s) { return std::max(s - k, 0.0); };
        break;
    case PayoffKind::put:
        phi = [k = payoff.strike](double s) { return std::max(k - s, 0.0); };
        break;
    case PayoffKind::short_call:
        phi = [k = payoff.strike](double s) { return -std::max(s - k, 0.0); };
        break;
    case PayoffKind::short_put:
        phi = [k = payoff.strike](double s) { return -std::max(k - s, 0.0); };
        break;
    case PayoffKind::constant:
        phi = [v = payoff.value](double) { return v; };
        break;
    default:
        throw std::invalid_argument(
            "cross_check: payoff must be a function of the terminal spot");
    }

    CrossCheckResult res;
    res.lattice_steps = model.grid.n;
    res.lattice_price = solve_bsde(model, driver, payoff, cfg).root_price;

    const double s0 = model.s0[0];
    PdeProblem prob;
    prob.sigma = [v = model.vol[0]](double) { return v; };
    prob.b = [b = model.drift[0]](double) { return b; };
    prob.f = [&driver](double, double u, double v) {
        const double z = v;
        return driver.eval(0.0, u, &z, 1);
    };
    prob.lip_f = driver.mu;
    prob.span = model.grid.T - model.grid.t0;

    const PdeGrid grid = make_pde_grid(s0 / 5.0, 5.0 * s0, m, phi, n_t);
    const PdeSolution sol =
        solve_feynman_kac(prob, grid, cfg.exec);
    res.pde_time_steps = sol.n_t_used;

    const double ds = (grid.s_max - grid.s_min) / m;
    const int j = std::clamp(static_cast<int>((s0 - grid.s_min) / ds), 0, m - 1);
    const double w = (s0 - sol.s[j]) / ds;
    res.pde_price = (1.0 - w) * sol.u0[j] + w * sol.u0[j + 1];
    res.gap = res.lattice_price - res.pde_price;
    return res;
}

} // namespace gexp
