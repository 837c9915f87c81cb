#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace gexp {

// Uniform time grid t_i = t0 + i*dt, i = 0..n, with t_n = T.
struct TimeGrid {
    double t0 = 0.0;
    double T = 0.0;
    int n = 0;
    double dt = 0.0;

    double time_at(int i) const { return t0 + i * dt; }
};

// Validates the span and step count; throws std::invalid_argument on bad input.
TimeGrid build_time_grid(double t0, double T, int n);

// How node Brownian values map to underlying prices.
enum class UnderlyingMap {
    geometric,   // S_k = s0_k * exp((b_k - vol_k^2/2) * t + vol_k * W_k)
    arithmetic,  // S_k = s0_k + b_k * t + vol_k * W_k
};

constexpr int max_dim = 3;

// Recombining lattice for a d-dimensional symmetric Bernoulli walk:
// per step and per dimension the increment is +-sqrt(dt) with probability 1/2.
// A node at step i is the vector of per-dimension up-move counts; there are
// (i+1)^d nodes at step i.
struct LatticeModel {
    TimeGrid grid;
    int d = 1;
    std::vector<double> s0;     // initial price per dimension
    std::vector<double> vol;    // volatility per dimension
    std::vector<double> drift;  // drift rate per dimension
    UnderlyingMap map = UnderlyingMap::geometric;
};

// Validates dimension (1..3), vector sizes and positivity for the geometric map.
LatticeModel make_lattice(const TimeGrid& grid, int d,
                          std::vector<double> s0, std::vector<double> vol,
                          std::vector<double> drift,
                          UnderlyingMap map = UnderlyingMap::geometric);

// Number of nodes at a step: (step+1)^d.
long node_count(int step, int d);

// Flat index of a node from its up-move counts: sum_k up[k] * (step+1)^k.
long node_index(int step, int d, const int* up);

// Inverse of node_index.
void decode_node(int step, int d, long idx, int* up);

// Brownian value at a node: W_k = (2*up[k] - step) * sqrt(dt).
// Throws if any up-count is outside [0, step].
std::array<double, max_dim> node_brownian_value(const LatticeModel& model,
                                                int step, const int* up);

// Underlying prices at a node under the model's mapping.
std::array<double, max_dim> node_underlying(const LatticeModel& model,
                                            int step, const int* up);

// Full node description handed to custom payoffs.
struct NodeState {
    int step = 0;
    int d = 1;
    double t = 0.0;
    std::array<int, max_dim> up{};
    std::array<double, max_dim> W{};
    std::array<double, max_dim> S{};
};

enum class PayoffKind {
    call,        // (S - strike)^+
    put,         // (S - strike)^- = (strike - S)^+
    short_call,  // -(S - strike)^+
    short_put,   // -(strike - S)^+
    linear_in_B, // zbar . W_T
    constant,    // c
    custom,      // arbitrary function of the terminal node state
};

// Terminal functional evaluated at maturity nodes only.
struct Payoff {
    PayoffKind kind = PayoffKind::constant;
    double maturity = 0.0;
    double strike = 0.0;                       // vanilla kinds
    int asset = 0;                             // which dimension vanilla kinds read
    double value = 0.0;                        // constant kind
    std::array<double, max_dim> zbar{};        // linear_in_B coefficients
    std::function<double(const NodeState&)> fn; // custom kind
};

Payoff make_call(double strike, double maturity, int asset = 0);
Payoff make_put(double strike, double maturity, int asset = 0);
Payoff make_short_call(double strike, double maturity, int asset = 0);
Payoff make_short_put(double strike, double maturity, int asset = 0);
Payoff make_linear_in_B(const std::array<double, max_dim>& zbar, double maturity);
Payoff make_constant(double value, double maturity);
Payoff make_custom(std::function<double(const NodeState&)> fn, double maturity);

// Pointwise value of a payoff at one terminal node state.
double payoff_value(const Payoff& payoff, const NodeState& node);

// Structural properties a driver declares about itself; property checks use
// them to decide which suites apply and in which direction.
struct DriverTraits {
    bool zero_at_origin = true;   // g(t,0,0) = 0
    bool zero_for_zero_z = false; // g(t,y,0) = 0 for all y
    enum class Shape { linear, convex, concave, none };
    Shape shape = Shape::none;
    bool positively_homogeneous = false;
    bool subadditive = false;
    int ignores_component = -1;   // >= 0: eval independent of that z component
};

// Generating function g(t, y, z) of the backward equation, with a declared
// Lipschitz constant mu: |g(t,y,z) - g(t,y',z')| <= mu * (|y-y'| + |z-z'|_1).
struct Driver {
    std::string name;
    int dim_z = 1;
    double mu = 0.0;
    bool depends_on_y = false;
    std::function<double(double t, double y, const double* z, int d)> eval;
    std::map<std::string, double> parameters;
    DriverTraits traits;
};

enum class Scheme { implicit_picard, explicit_euler };

// (Y, Z) fields over the lattice. y[i] has (i+1)^d entries; z[i] has
// (i+1)^d * d entries laid out node-major (z component k of node idx at
// z[i][idx*d + k]); z is defined for steps 0..n-1.
struct BsdeSolution {
    std::vector<std::vector<double>> y;
    std::vector<std::vector<double>> z;
    double root_price = 0.0;
    std::vector<int> picard_iterations; // max iteration count per step
    Scheme scheme = Scheme::implicit_picard;
};

} // namespace gexp
