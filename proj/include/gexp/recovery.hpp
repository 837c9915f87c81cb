#pragma once

#include "gexp/core.hpp"
#include "gexp/solver.hpp"

#include <functional>
#include <vector>

namespace gexp {

// A black-box pricing mechanism: price(t, T, payoff) with payoff maturing at
// T. grid_dt > 0 declares a fixed internal time resolution; 0 means the
// mechanism refines adaptively (fixed step count per span).
struct MechanismHandle {
    std::function<double(double t, double T, const Payoff&)> price;
    double min_span = 1e-6;
    double grid_dt = 0.0;
};

// Wraps a lattice solve: price(t, T, X) runs steps_per_solve backward steps
// over [t, T] on a lattice shaped like proto.
MechanismHandle mechanism_from_driver(const Driver& driver,
                                      const LatticeModel& proto,
                                      const SolverConfig& cfg = {},
                                      int steps_per_solve = 64);

struct RecoverySample {
    std::array<double, max_dim> zbar{};
    int d = 1;
    double t = 0.0;
    double T = 0.0;
    double estimate = 0.0;
    double residual = 0.0; // half-span re-estimate discrepancy
};

// Toy-model estimate g(zbar) = (T-t)^{-1} price(t, T, zbar . (B_T - B_t)),
// valid when the mechanism's generator depends on z only.
double recover_g_of_z(const MechanismHandle& mech,
                      const std::array<double, max_dim>& zbar, int d,
                      double t, double T);

// Applies recover_g_of_z pointwise over a grid; residual is the discrepancy
// against a half-span re-estimate.
std::vector<RecoverySample> recover_surface(const MechanismHandle& mech,
                                            const std::vector<std::array<double, max_dim>>& z_grid,
                                            int d, double t, double T);

// Delimited text table: z components, estimate, residual.
std::string surface_to_text(const std::vector<RecoverySample>& surface);

struct RepresentationEstimate {
    double estimate = 0.0;                         // linear-fit intercept
    std::vector<std::pair<double, double>> slopes; // (eps, raw slope)
    double fit_residual = 0.0;
};

// Short-horizon expansion of the mechanism around state x with frozen
// coefficients: prices y + p . (x + b(x) eps + sigma(x) dB - x) over
// [t, t + eps] for each ladder eps, then extrapolates the slopes
// (price - y)/eps linearly to eps = 0. The limit identifies
// g(t, y, sigma(x)^T p) + p . b(x). Ladder entries incompatible with the
// mechanism's resolution are dropped; fewer than two usable entries is an
// error naming the usable count.
RepresentationEstimate recover_by_representation(
    const MechanismHandle& mech, double t,
    const std::array<double, max_dim>& x, double y,
    const std::array<double, max_dim>& p, int d,
    const std::function<std::array<double, max_dim>(const std::array<double, max_dim>&)>& b_fn,
    const std::function<std::array<double, max_dim>(const std::array<double, max_dim>&)>& sigma_fn,
    const std::vector<double>& eps_ladder);

// Default ladder {2^-3, ..., 2^-7} * span.
std::vector<double> default_eps_ladder(double span);

} // namespace gexp
