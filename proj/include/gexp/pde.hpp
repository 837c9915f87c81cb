#pragma once

#include "gexp/core.hpp"
#include "gexp/solver.hpp"

#include <functional>
#include <vector>

namespace gexp {

// Space-time grid for the backward semilinear equation
//   u_t + 1/2 sigma(s)^2 s^2 u_ss + b(s) s u_s + f(s, u, sigma(s) s u_s) = 0,
// solved as a forward march in tau = T - t with explicit central differences.
// Dirichlet boundaries pin u to the terminal function's values at s_min and
// s_max. n_t = 0 selects the minimal stable step count automatically.
struct PdeGrid {
    double s_min = 0.0;
    double s_max = 0.0;
    int m = 0;    // space steps (m+1 nodes)
    int n_t = 0;  // time steps; 0 = auto
    std::vector<double> terminal; // size m+1
    double boundary_lo = 0.0;
    double boundary_hi = 0.0;
};

struct PdeProblem {
    std::function<double(double s, double u, double v)> f;
    std::function<double(double s)> sigma; // volatility rate at s
    std::function<double(double s)> b;     // drift rate at s
    double lip_f = 0.0;                    // Lipschitz bound of f in (u, v)
    double span = 0.0;                     // T - t0
};

struct PdeSolution {
    std::vector<double> s;   // space nodes
    std::vector<double> u0;  // u at t = t0 (tau = span)
    int n_t_used = 0;
    // Downsampled (tau, u row) slices for export, at most ~100 rows.
    std::vector<std::pair<double, std::vector<double>>> slices;
};

// Samples a scalar terminal function onto [s_min, s_max] with m steps and
// boundary values phi(s_min), phi(s_max).
PdeGrid make_pde_grid(double s_min, double s_max, int m,
                      const std::function<double(double)>& phi, int n_t = 0);

// Minimal time steps satisfying
//   d_tau <= ds^2 / (max sigma(s)^2 s^2 + max |b(s) s| ds + lip_f ds^2).
int min_stable_time_steps(const PdeProblem& prob, const PdeGrid& grid);

// Explicit monotone march; rejects n_t below the stability bound, naming the
// minimal stable count.
PdeSolution solve_feynman_kac(const PdeProblem& prob, const PdeGrid& grid,
                              Exec exec = Exec::parallel);

// Standard lognormal closed form; put via parity. Rejects non-positive sigma
// or T.
double black_scholes_closed_form(double s0, double strike, double r,
                                 double sigma, double T, bool is_call);

struct CrossCheckResult {
    double lattice_price = 0.0;
    double pde_price = 0.0; // linearly interpolated at s0
    double gap = 0.0;
    int lattice_steps = 0;
    int pde_time_steps = 0;
};

// Prices one path-independent payoff twice: backward induction on the lattice
// and the finite-difference march with f(s,u,v) = driver.eval(t,u,z=v).
// Domain defaults to [s0/5, 5 s0].
CrossCheckResult cross_check(const LatticeModel& model, const Driver& driver,
                             const Payoff& payoff, int m,
                             const SolverConfig& cfg = {}, int n_t = 0);

} // namespace gexp
