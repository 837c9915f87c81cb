#include "gexp/recovery.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace gexp {

MechanismHandle mechanism_from_driver(const Driver& driver,
                                      const LatticeModel& proto,
                                      const SolverConfig& cfg,
                                      int steps_per_solve) {
    if (steps_per_solve < 1)
        throw std::invalid_argument("mechanism_from_driver: steps_per_solve < 1");
    MechanismHandle mech;
    mech.grid_dt = 0.0; // adaptive: fixed step count per span
    mech.price = [driver, proto, cfg, steps_per_solve](double t, double T,
                                                       const Payoff& payoff) {
        if (T == t) {
            // degenerate span: terminal identity, evaluate at the root state
            NodeState node;
            node.step = 0;
            node.d = proto.d;
            node.t = T;
            for (int k = 0; k < proto.d; ++k) {
                node.W[k] = 0.0;
                node.S[k] = proto.s0[k];
            }
            return payoff_value(payoff, node);
        }
        const int n = std::max(
            steps_per_solve, min_steps_for(driver.mu, t, T, cfg.courant_cap));
        const LatticeModel model =
            make_lattice(build_time_grid(t, T, n), proto.d, proto.s0, proto.vol,
                         proto.drift, proto.map);
        return solve_bsde(model, driver, payoff, cfg).root_price;
    };
    return mech;
}

double recover_g_of_z(const MechanismHandle& mech,
                      const std::array<double, max_dim>& zbar, int d,
                      double t, double T) {
    if (d < 1 || d > max_dim)
        throw std::invalid_argument("recover_g_of_z: dimension out of range");
    const double span = T - t;
    if (!(span >= mech.min_span))
        throw std::invalid_argument("recover_g_of_z: degenerate span");
    return mech.price(t, T, make_linear_in_B(zbar, T)) / span;
}

std::vector<RecoverySample> recover_surface(
    const MechanismHandle& mech,
    const std::vector<std::array<double, max_dim>>& z_grid, int d, double t,
    double T) {
    std::vector<RecoverySample> out;
    out.reserve(z_grid.size());
    for (const auto& z : z_grid) {
        RecoverySample s;
        s.zbar = z;
        s.d = d;
        s.t = t;
        s.T = T;
        s.estimate = recover_g_of_z(mech, z, d, t, T);
        const double half = t + 0.5 * (T - t);
        s.residual = std::abs(s.estimate - recover_g_of_z(mech, z, d, t, half));
        out.push_back(s);
    }
    return out;
}

std::string surface_to_text(const std::vector<RecoverySample>& surface) {
    std::ostringstream out;
    const int d = surface.empty() ? 1 : surface.front().d;
    out << "#";
    for (int k = 0; k < d; ++k) out << " z" << k;
    out << " estimate residual\n";
    char buf[64];
    for (const auto& s : surface) {
        for (int k = 0; k < s.d; ++k) {
            std::snprintf(buf, sizeof buf, "%.12g\t", s.zbar[k]);
            out << buf;
        }
        std::snprintf(buf, sizeof buf, "%.12g\t%.12g\n", s.estimate, s.residual);
        out << buf;
    }
    return out.str();
}

RepresentationEstimate recover_by_representation(
    const MechanismHandle& mech, double t,
    const std::array<double, max_dim>& x, double y,
    const std::array<double, max_dim>& p, int d,
    const std::function<std::array<double, max_dim>(const std::array<double, max_dim>&)>& b_fn,
    const std::function<std::array<double, max_dim>(const std::array<double, max_dim>&)>& sigma_fn,
    const std::vector<double>& eps_ladder) {
    if (d < 1 || d > max_dim)
        throw std::invalid_argument("recover_by_representation: dimension out of range");
    if (!b_fn || !sigma_fn)
        throw std::invalid_argument("recover_by_representation: missing coefficient functions");
    for (std::size_t i = 0; i < eps_ladder.size(); ++i) {
        if (!(eps_ladder[i] > 0.0))
            throw std::invalid_argument("recover_by_representation: ladder entries must be positive");
        if (i > 0 && eps_ladder[i] >= eps_ladder[i - 1])
            throw std::invalid_argument("recover_by_representation: ladder must be strictly decreasing");
    }

    const auto b = b_fn(x);
    const auto sig = sigma_fn(x);
    double pb = 0.0;
    std::array<double, max_dim> psig{};
    for (int k = 0; k < d; ++k) {
        pb += p[k] * b[k];
        psig[k] = p[k] * sig[k];
    }

    RepresentationEstimate est;
    for (double eps : eps_ladder) {
        if (eps < mech.min_span) continue;
        if (mech.grid_dt > 0.0 && eps < 2.0 * mech.grid_dt) continue;
        const Payoff payoff = make_custom(
            [y, pb, eps, psig, d](const NodeState& node) {
                double v = y + pb * eps;
                for (int k = 0; k < d; ++k) v += psig[k] * node.W[k];
                return v;
            },
            t + eps);
        const double price = mech.price(t, t + eps, payoff);
        est.slopes.emplace_back(eps, (price - y) / eps);
    }
    if (est.slopes.size() < 2)
        throw std::invalid_argument(
            "recover_by_representation: only " +
            std::to_string(est.slopes.size()) +
            " usable ladder entries for this mechanism; need at least 2");

    // least-squares line slope(eps) = a + c*eps; the intercept a is the limit
    const double k = static_cast<double>(est.slopes.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& [e, s] : est.slopes) {
        sx += e;
        sy += s;
        sxx += e * e;
        sxy += e * s;
    }
    const double denom = k * sxx - sx * sx;
    const double c = (k * sxy - sx * sy) / denom;
    const double a = (sy - c * sx) / k;
    est.estimate = a;
    double ss = 0.0;
    for (const auto& [e, s] : est.slopes) {
        const double r = s - (a + c * e);
        ss += r * r;
    }
    est.fit_residual = std::sqrt(ss / k);
    return est;
}

std::vector<double> default_eps_ladder(double span) {
    if (!(span > 0.0))
        throw std::invalid_argument("default_eps_ladder: span must be positive");
    std::vector<double> out;
    for (int p = 3; p <= 7; ++p) out.push_back(span / (1 << p));
    return out;
}

} // namespace gexp
