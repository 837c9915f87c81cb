#pragma once

#include "gexp/core.hpp"

#include <cstdint>

namespace gexp {

// Piecewise-constant deterministic coefficient: value(t) is the entry whose
// start time is the largest one <= t. A single-entry table is a constant.
struct CoefficientSchedule {
    std::vector<std::pair<double, double>> table; // (start time, value), sorted

    static CoefficientSchedule constant(double v) { return {{{0.0, v}}}; }
    double at(double t) const;
    bool is_constant() const { return table.size() == 1; }
};

// g_mu(y, z) = mu * |y| + mu * sum_k |z_k|; the canonical dominating driver.
Driver make_gmu(double mu, int dim_z = 1);

// g(t,y,z) = -r y - (b - r) z / sigma; the replication driver of a single
// risky asset with rate r, stock drift b, volatility sigma.
Driver make_black_scholes(double r, double b, double sigma);
Driver make_black_scholes(const CoefficientSchedule& r,
                          const CoefficientSchedule& b,
                          const CoefficientSchedule& sigma);

// g(t,y,z) = -r y - (b - r) z / sigma + (R - r) (y - z/sigma)^-, R > r:
// borrowing above the lending rate r at rate R.
Driver make_borrowing(double r, double R, double b, double sigma);

// g(t,y,z) = -r y - (b - r) z / sigma + k z^-, k >= 0: short positions in the
// risky asset pay an extra premium k.
Driver make_short_premium(double r, double b, double sigma, double k);

// Diagnostic drivers used by test fixtures.
Driver make_zero(int dim_z = 1);
Driver make_constant_driver(double c, int dim_z = 1);

// Register a custom driver under a name with a declared Lipschitz constant.
// The constant is trusted but cross-checked by estimate_lipschitz in tests.
void register_driver(const std::string& name,
                     std::function<Driver(const std::map<std::string, double>&)> factory);

// True if the name resolves in the registry (built-ins plus registrations).
bool driver_registered(const std::string& name);

// Parses a flat key=value document (whitespace or newline separated
// assignments, '#' starts a comment) with a mandatory driver=<name> entry.
// Scheduled coefficients are written "key=t0:v0,t1:v1,...". Unknown keys,
// missing parameters and non-finite numbers are rejected.
Driver parse_driver_config(const std::string& text);

// Convenience: parse_driver_config over a file's contents.
Driver load_driver_config(const std::string& path);

struct LipschitzBox {
    double y_lo = -10.0, y_hi = 10.0;
    double z_lo = -10.0, z_hi = 10.0;
    double t_lo = 0.0, t_hi = 1.0;
};

// mu_hat = max over sampled point pairs of |g(p) - g(q)| / (|dy| + |dz|_1).
// Deterministic given the seed; never exceeds the declared constant for the
// built-in drivers.
double estimate_lipschitz(const Driver& driver, const LipschitzBox& box,
                          int samples, std::uint64_t rng_seed);

} // namespace gexp
