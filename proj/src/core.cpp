#include "gexp/core.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gexp {

TimeGrid build_time_grid(double t0, double T, int n) {
    if (!(T > t0))
        throw std::invalid_argument("build_time_grid: empty time span (T must exceed t0)");
    if (n < 1)
        throw std::invalid_argument("build_time_grid: step count must be at least 1");
    if (!std::isfinite(t0) || !std::isfinite(T))
        throw std::invalid_argument("build_time_grid: non-finite bounds");
    TimeGrid g;
    g.t0 = t0;
    g.T = T;
    g.n = n;
    g.dt = (T - t0) / n;
    return g;
}

LatticeModel make_lattice(const TimeGrid& grid, int d, std::vector<double> s0,
                          std::vector<double> vol, std::vector<double> drift,
                          UnderlyingMap map) {
    if (d < 1 || d > max_dim)
        throw std::invalid_argument("make_lattice: dimension must be 1.." +
                                    std::to_string(max_dim));
    if (static_cast<int>(s0.size()) != d || static_cast<int>(vol.size()) != d ||
        static_cast<int>(drift.size()) != d)
        throw std::invalid_argument("make_lattice: s0/vol/drift must have d entries");
    for (int k = 0; k < d; ++k) {
        if (!std::isfinite(s0[k]) || !std::isfinite(vol[k]) || !std::isfinite(drift[k]))
            throw std::invalid_argument("make_lattice: non-finite model parameter");
        if (map == UnderlyingMap::geometric && s0[k] <= 0.0)
            throw std::invalid_argument("make_lattice: geometric map needs s0 > 0");
    }
    LatticeModel m;
    m.grid = grid;
    m.d = d;
    m.s0 = std::move(s0);
    m.vol = std::move(vol);
    m.drift = std::move(drift);
    m.map = map;
    return m;
}

long node_count(int step, int d) {
    long c = 1;
    for (int k = 0; k < d; ++k) c *= step + 1;
    return c;
}

long node_index(int step, int d, const int* up) {
    long idx = 0, base = 1;
    for (int k = 0; k < d; ++k) {
        idx += up[k] * base;
        base *= step + 1;
    }
    return idx;
}

void decode_node(int step, int d, long idx, int* up) {
    for (int k = 0; k < d; ++k) {
        up[k] = static_cast<int>(idx % (step + 1));
        idx /= step + 1;
    }
}

std::array<double, max_dim> node_brownian_value(const LatticeModel& model,
                                                int step, const int* up) {
    std::array<double, max_dim> W{};
    const double sq = std::sqrt(model.grid.dt);
    for (int k = 0; k < model.d; ++k) {
        if (up[k] < 0 || up[k] > step)
            throw std::invalid_argument("node_brownian_value: up-count out of range");
        W[k] = (2.0 * up[k] - step) * sq;
    }
    return W;
}

std::array<double, max_dim> node_underlying(const LatticeModel& model,
                                            int step, const int* up) {
    const auto W = node_brownian_value(model, step, up);
    const double t = step * model.grid.dt;
    std::array<double, max_dim> S{};
    for (int k = 0; k < model.d; ++k) {
        if (model.map == UnderlyingMap::geometric) {
            const double v = model.vol[k];
            S[k] = model.s0[k] *
                   std::exp((model.drift[k] - 0.5 * v * v) * t + v * W[k]);
        } else {
            S[k] = model.s0[k] + model.drift[k] * t + model.vol[k] * W[k];
        }
    }
    return S;
}

namespace {
Payoff vanilla(PayoffKind kind, double strike, double maturity, int asset) {
    if (strike <= 0.0 || !std::isfinite(strike))
        throw std::invalid_argument("payoff: strike must be positive and finite");
    if (asset < 0 || asset >= max_dim)
        throw std::invalid_argument("payoff: asset index out of range");
    Payoff p;
    p.kind = kind;
    p.strike = strike;
    p.maturity = maturity;
    p.asset = asset;
    return p;
}
} // namespace

Payoff make_call(double strike, double maturity, int asset) {
    return vanilla(PayoffKind::call, strike, maturity, asset);
}
Payoff make_put(double strike, double maturity, int asset) {
    return vanilla(PayoffKind::put, strike, maturity, asset);
}
Payoff make_short_call(double strike, double maturity, int asset) {
    return vanilla(PayoffKind::short_call, strike, maturity, asset);
}
Payoff make_short_put(double strike, double maturity, int asset) {
    return vanilla(PayoffKind::short_put, strike, maturity, asset);
}

Payoff make_linear_in_B(const std::array<double, max_dim>& zbar, double maturity) {
    Payoff p;
    p.kind = PayoffKind::linear_in_B;
    p.zbar = zbar;
    p.maturity = maturity;
    return p;
}

Payoff make_constant(double value, double maturity) {
    Payoff p;
    p.kind = PayoffKind::constant;
    p.value = value;
    p.maturity = maturity;
    return p;
}

Payoff make_custom(std::function<double(const NodeState&)> fn, double maturity) {
    if (!fn) throw std::invalid_argument("payoff: custom function must be callable");
    Payoff p;
    p.kind = PayoffKind::custom;
    p.fn = std::move(fn);
    p.maturity = maturity;
    return p;
}

double payoff_value(const Payoff& payoff, const NodeState& node) {
    switch (payoff.kind) {
        case PayoffKind::call:
            return std::max(node.S[payoff.asset] - payoff.strike, 0.0);
        case PayoffKind::put:
            return std::max(payoff.strike - node.S[payoff.asset], 0.0);
        case PayoffKind::short_call:
            return -std::max(node.S[payoff.asset] - payoff.strike, 0.0);
        case PayoffKind::short_put:
            return -std::max(payoff.strike - node.S[payoff.asset], 0.0);
        case PayoffKind::linear_in_B: {
            double v = 0.0;
            for (int k = 0; k < node.d; ++k) v += payoff.zbar[k] * node.W[k];
            return v;
        }
        case PayoffKind::constant:
            return payoff.value;
        case PayoffKind::custom:
            return payoff.fn(node);
    }
    throw std::logic_error("payoff_value: unknown kind");
}

} // namespace gexp
