#include "gexp/properties.hpp"

#include "gexp/drivers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace gexp {

double case_tolerance(const SolverConfig& cfg, double scale) {
    return std::max(1e-8, 10.0 * cfg.picard_tol) * (1.0 + std::abs(scale));
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Recorder {
    PropertyReport rep;
    const SolverConfig& cfg;

    Recorder(std::string property, const SolverConfig& c) : cfg(c) {
        rep.property = std::move(property);
    }
    void ineq(std::string id, double lhs, double rhs, double scale) {
        add(std::move(id), lhs, rhs, lhs - rhs, scale);
    }
    void eq(std::string id, double lhs, double rhs, double scale) {
        add(std::move(id), lhs, rhs, std::abs(lhs - rhs), scale);
    }
    void add(std::string id, double lhs, double rhs, double gap, double scale) {
        PropertyCase pc{std::move(id), lhs, rhs, gap};
        const double tol = case_tolerance(cfg, scale);
        rep.tolerance = std::max(rep.tolerance, tol);
        rep.max_gap = std::max(rep.max_gap, gap);
        if (gap > tol) rep.violations.push_back(pc);
        rep.cases.push_back(std::move(pc));
    }
    PropertyReport finish() {
        rep.cases_run = static_cast<int>(rep.cases.size());
        rep.verdict = rep.violations.empty() ? Verdict::pass : Verdict::fail;
        return std::move(rep);
    }
};

PropertyReport skipped_report(std::string property, std::string note) {
    PropertyReport rep;
    rep.property = std::move(property);
    rep.verdict = Verdict::skipped;
    rep.note = std::move(note);
    return rep;
}

// Maturity cap keeping both the Courant bound and one-step monotonicity
// (mu*sqrt(dt) <= 0.95/d) valid; see CaseGenerator.
double max_dt_for(double mu, int d, double cap) {
    if (mu <= 0.0) return 1e9;
    const double m = 0.95 / (d * mu);
    return std::min(cap / mu, m * m);
}

LatticeModel draw_model(const CaseGenerator& gen, std::mt19937_64& rng,
                        int d, double mu_eff, const SolverConfig& cfg) {
    std::uniform_int_distribution<int> un(gen.min_n, gen.max_n);
    const int n = un(rng);
    std::uniform_int_distribution<std::size_t> um(0, gen.maturity_menu.size() - 1);
    const double T =
        std::min(gen.maturity_menu[um(rng)], n * max_dt_for(mu_eff, d, cfg.courant_cap));
    return make_lattice(build_time_grid(0.0, T, n), d,
                        std::vector<double>(d, gen.s0),
                        std::vector<double>(d, gen.vol),
                        std::vector<double>(d, gen.drift));
}

std::vector<double> random_field(std::mt19937_64& rng, long count, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<double> f(count);
    for (auto& v : f) v = u(rng);
    return f;
}

double max_abs(const std::vector<double>& f) {
    double m = 0.0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
}

std::string case_id(int c, const LatticeModel& model, const std::string& tag) {
    std::ostringstream ss;
    ss << "case" << (c < 10 ? "00" : c < 100 ? "0" : "") << c << " n"
       << model.grid.n << " d" << model.d;
    if (!tag.empty()) ss << ' ' << tag;
    return ss.str();
}

// Worst node-wise discrepancy between two y-field stacks up to step j_max.
struct NodeGap {
    double lhs = 0.0, rhs = 0.0, gap = -1e300;
};

template <typename Fn>
NodeGap worst_over_nodes(int j_max, int d, Fn&& pair_at) {
    NodeGap w;
    for (int i = 0; i <= j_max; ++i) {
        const long cnt = node_count(i, d);
        for (long idx = 0; idx < cnt; ++idx) {
            const auto [lhs, rhs, equality] = pair_at(i, idx);
            const double gap = equality ? std::abs(lhs - rhs) : lhs - rhs;
            if (gap > w.gap) w = {lhs, rhs, gap};
        }
    }
    return w;
}

// Terminal field of the sub-lattice rooted at step-j node `root` pulled back
// from a full-lattice terminal field.
std::vector<double> subtree_terminal(const std::vector<double>& terminal,
                                     int n, int d, int j, const int* root) {
    const int steps = n - j;
    const long cnt = node_count(steps, d);
    std::vector<double> out(cnt);
    for (long idx = 0; idx < cnt; ++idx) {
        int up[max_dim];
        decode_node(steps, d, idx, up);
        int global[max_dim];
        for (int k = 0; k < d; ++k) global[k] = root[k] + up[k];
        out[idx] = terminal[node_index(n, d, global)];
    }
    return out;
}

LatticeModel sub_model(const LatticeModel& model, int j_from, int j_to) {
    return make_lattice(build_time_grid(model.grid.time_at(j_from),
                                        model.grid.time_at(j_to), j_to - j_from),
                        model.d, model.s0, model.vol, model.drift, model.map);
}

} // namespace

PropertyReport check_monotonicity(const Driver& driver, const CaseGenerator& gen,
                                  const SolverConfig& cfg) {
    Recorder rec("monotonicity", cfg);
    std::mt19937_64 rng(gen.seed);
    const int d = driver.dim_z;
    for (int c = 0; c < gen.count; ++c) {
        const LatticeModel model = draw_model(gen, rng, d, driver.mu, cfg);
        const long cnt = node_count(model.grid.n, d);
        std::vector<double> xbar, x;
        std::string tag;
        if (c % 4 == 0) {
            x = sample_terminal(model, make_call(0.9 * gen.s0, model.grid.T),
                                cfg.sampling);
            xbar = sample_terminal(model, make_call(1.1 * gen.s0, model.grid.T),
                                   cfg.sampling);
            tag = "vanilla";
        } else {
            xbar = random_field(rng, cnt, gen.payoff_scale);
            std::uniform_real_distribution<double> lift(0.0, gen.payoff_scale);
            x = xbar;
            for (auto& v : x) v += lift(rng);
            tag = "random";
        }
        const BsdeSolution hi = solve_bsde_terminal(model, driver, x, cfg);
        const BsdeSolution lo = solve_bsde_terminal(model, driver, xbar, cfg);
        const NodeGap w = worst_over_nodes(
            model.grid.n, d, [&](int i, long idx) {
                return std::tuple{lo.y[i][idx], hi.y[i][idx], false};
            });
        rec.ineq(case_id(c, model, tag), w.lhs, w.rhs,
                 std::max(max_abs(x), max_abs(xbar)));
    }
    return rec.finish();
}

PropertyReport check_consistency(const Driver& driver, const CaseGenerator& gen,
                                 const SolverConfig& cfg) {
    Recorder rec("consistency", cfg);
    std::mt19937_64 rng(gen.seed + 1);
    const int d = driver.dim_z;
    for (int c = 0; c < gen.count; ++c) {
        const LatticeModel model = draw_model(gen, rng, d, driver.mu, cfg);
        const int n = model.grid.n;
        const std::vector<double> x =
            random_field(rng, node_count(n, d), gen.payoff_scale);
        std::uniform_int_distribution<int> uj(1, n - 1);
        const int j = uj(rng);
        const BsdeSolution direct = solve_bsde_terminal(model, driver, x, cfg);
        const BsdeSolution nested =
            solve_bsde_terminal(sub_model(model, 0, j), driver, direct.y[j], cfg);
        const NodeGap w = worst_over_nodes(j, d, [&](int i, long idx) {
            return std::tuple{nested.y[i][idx], direct.y[i][idx], true};
        });
        rec.eq(case_id(c, model, "split" + std::to_string(j)), w.lhs, w.rhs,
               max_abs(x));
    }
    return rec.finish();
}

PropertyReport check_zero_one_law(const Driver& driver, const CaseGenerator& gen,
                                  const SolverConfig& cfg) {
    if (!driver.traits.zero_at_origin)
        return skipped_report("zero_one_law",
                              "requires declared g(t,0,0) = 0");
    Recorder rec("zero_one_law", cfg);
    std::mt19937_64 rng(gen.seed + 2);
    const int d = driver.dim_z;
    for (int c = 0; c < gen.count; ++c) {
        const LatticeModel model = draw_model(gen, rng, d, driver.mu, cfg);
        const int n = model.grid.n;
        const std::vector<double> x =
            random_field(rng, node_count(n, d), gen.payoff_scale);
        std::uniform_int_distribution<int> uj(1, n - 1);
        const int j = uj(rng);
        std::uniform_int_distribution<long> ua(0, node_count(j, d) - 1);
        const long a = ua(rng);
        int root[max_dim];
        decode_node(j, d, a, root);

        const BsdeSolution direct = solve_bsde_terminal(model, driver, x, cfg);
        const LatticeModel sub = sub_model(model, j, n);
        // on the chosen node the price is the self-contained subtree solve
        const BsdeSolution on = solve_bsde_terminal(
            sub, driver, subtree_terminal(x, n, d, j, root), cfg);
        rec.eq(case_id(c, model, "on-node"), on.root_price, direct.y[j][a],
               max_abs(x));
        // off every other node the conditional payoff is 0, priced at 0
        const BsdeSolution off = solve_bsde_terminal(
            sub, driver, std::vector<double>(node_count(n - j, d), 0.0), cfg);
        rec.eq(case_id(c, model, "off-node"), off.root_price, 0.0, max_abs(x));
    }
    return rec.finish();
}

PropertyReport check_domination(const Driver& driver, double mu,
                                const CaseGenerator& gen,
                                const SolverConfig& cfg) {
    if (mu < driver.mu)
        throw std::invalid_argument(
            "check_domination: mu must be >= the driver's declared constant");
    Recorder rec("domination", cfg);
    std::mt19937_64 rng(gen.seed + 3);
    const int d = driver.dim_z;
    const Driver gmu = make_gmu(mu, d);
    for (int c = 0; c < gen.count; ++c) {
        const LatticeModel model = draw_model(gen, rng, d, mu, cfg);
        const long cnt = node_count(model.grid.n, d);
        std::vector<double> x = random_field(rng, cnt, gen.payoff_scale);
        std::vector<double> xbar;
        std::string tag;
        if (c % 5 == 0) {
            xbar.assign(cnt, 0.0);
            tag = "xbar0";
        } else {
            xbar = random_field(rng, cnt, gen.payoff_scale);
            tag = "random";
        }
        std::vector<double> diff(cnt);
        for (long i = 0; i < cnt; ++i) diff[i] = x[i] - xbar[i];
        const double lhs = solve_bsde_terminal(model, driver, x, cfg).root_price -
                           solve_bsde_terminal(model, driver, xbar, cfg).root_price;
        const double rhs = solve_bsde_terminal(model, gmu, diff, cfg).root_price;
        rec.ineq(case_id(c, model, tag), lhs, rhs,
                 std::max(max_abs(x), max_abs(xbar)));
    }
    return rec.finish();
}

PropertyReport check_bid_ask_order(const Driver& driver, const CaseGenerator& gen,
                                   const SolverConfig& cfg) {
    std::mt19937_64 rng(gen.seed + 4);
    const int d = driver.dim_z;
    {
        std::uniform_real_distribution<double> uy(-10.0, 10.0);
        std::uniform_real_distribution<double> ut(0.0, 1.0);
        for (int i = 0; i < 2000; ++i) {
            const double t = ut(rng), y = uy(rng);
            double z[max_dim], nz[max_dim];
            for (int k = 0; k < d; ++k) {
                z[k] = uy(rng);
                nz[k] = -z[k];
            }
            if (driver.eval(t, y, z, d) + driver.eval(t, -y, nz, d) < -1e-9)
                return skipped_report(
                    "bid_ask_order",
                    "driver violates g(t,y,z) >= -g(t,-y,-z) at sampled points");
        }
    }
    Recorder rec("bid_ask_order", cfg);
    for (int c = 0; c < gen.count; ++c) {
        const LatticeModel model = draw_model(gen, rng, d, driver.mu, cfg);
        const long cnt = node_count(model.grid.n, d);
        std::vector<double> x;
        std::string tag;
        if (c % 4 == 0) {
            x = sample_terminal(model, make_call(gen.s0, model.grid.T), cfg.sampling);
            tag = "vanilla";
        } else {
            x = random_field(rng, cnt, gen.payoff_scale);
            tag = "random";
        }
        std::vector<double> neg(cnt);
        for (long i = 0; i < cnt; ++i) neg[i] = -x[i];
        const double ask = solve_bsde_terminal(model, driver, x, cfg).root_price;
        const double bid = -solve_bsde_terminal(model, driver, neg, cfg).root_price;
        rec.ineq(case_id(c, model, tag), bid, ask, max_abs(x));
    }
    return rec.finish();
}

PropertyReport check_convexity(const Driver& driver, const CaseGenerator& gen,
                               const std::vector<double>& alphas,
                               const SolverConfig& cfg) {
    const auto shape = driver.traits.shape;
    if (shape == DriverTraits::Shape::none)
        return skipped_report("convexity", "driver declares no shape");
    Recorder rec("convexity", cfg);
    std::mt19937_64 rng(gen.seed + 5);
    const int d = driver.dim_z;
    for (int c = 0; c < gen.count; ++c) {
        const LatticeModel model = draw_model(gen, rng, d, driver.mu, cfg);
        const int n = model.grid.n;
        const long cnt = node_count(n, d);
        const std::vector<double> x = random_field(rng, cnt, gen.payoff_scale);
        const std::vector<double> xbar = random_field(rng, cnt, gen.payoff_scale);
        const BsdeSolution sx = solve_bsde_terminal(model, driver, x, cfg);
        const BsdeSolution sxbar = solve_bsde_terminal(model, driver, xbar, cfg);
        const double scale = std::max(max_abs(x), max_abs(xbar));
        for (double a : alphas) {
            std::vector<double> mixed(cnt);
            for (long i = 0; i < cnt; ++i)
                mixed[i] = a * x[i] + (1.0 - a) * xbar[i];
            const BsdeSolution sm = solve_bsde_terminal(model, driver, mixed, cfg);
            const NodeGap w = worst_over_nodes(n, d, [&](int i, long idx) {
                const double mix = sm.y[i][idx];
                const double combo = a * sx.y[i][idx] + (1.0 - a) * sxbar.y[i][idx];
                if (shape == DriverTraits::Shape::convex)
                    return std::tuple{mix, combo, false};
                if (shape == DriverTraits::Shape::concave)
                    return std::tuple{combo, mix, false};
                return std::tuple{mix, combo, true};
            });
            std::ostringstream tag;
            tag << "alpha" << a;
            rec.add(case_id(c, model, tag.str()), w.lhs, w.rhs, w.gap, scale);
        }
    }
    return rec.finish();
}

PropertyReport check_positive_homogeneity(const Driver& driver,
                                          const CaseGenerator& gen,
                                          const std::vector<double>& lambdas,
                                          const SolverConfig& cfg) {
    if (!driver.traits.positively_homogeneous)
        return skipped_report("positive_homogeneity",
                              "driver not declared positively homogeneous");
    Recorder rec("positive_homogeneity", cfg);
    std::mt19937_64 rng(gen.seed + 6);
    const int d = driver.dim_z;
    for (int c = 0; c < gen.count; ++c) {
        const LatticeModel model = draw_model(gen, rng, d, driver.mu, cfg);
        const int n = model.grid.n;
        const long cnt = node_count(n, d);
        const std::vector<double> x = random_field(rng, cnt, gen.payoff_scale);
        const BsdeSolution sx = solve_bsde_terminal(model, driver, x, cfg);
        for (double lam : lambdas) {
            if (lam < 0.0)
                throw std::invalid_argument(
                    "check_positive_homogeneity: lambdas must be >= 0");
            std::vector<double> scaled(cnt);
            for (long i = 0; i < cnt; ++i) scaled[i] = lam * x[i];
            const BsdeSolution sl = solve_bsde_terminal(model, driver, scaled, cfg);
            const NodeGap w = worst_over_nodes(n, d, [&](int i, long idx) {
                return std::tuple{sl.y[i][idx], lam * sx.y[i][idx], true};
            });
            std::ostringstream tag;
            tag << "lambda" << lam;
            rec.eq(case_id(c, model, tag.str()), w.lhs, w.rhs,
                   (1.0 + lam) * max_abs(x));
        }
    }
    return rec.finish();
}

PropertyReport check_subadditivity(const Driver& driver, const CaseGenerator& gen,
                                   const SolverConfig& cfg) {
    if (!driver.traits.subadditive)
        return skipped_report("subadditivity", "driver not declared subadditive");
    Recorder rec("subadditivity", cfg);
    std::mt19937_64 rng(gen.seed + 7);
    const int d = driver.dim_z;
    for (int c = 0; c < gen.count; ++c) {
        const LatticeModel model = draw_model(gen, rng, d, driver.mu, cfg);
        const int n = model.grid.n;
        const long cnt = node_count(n, d);
        const std::vector<double> x = random_field(rng, cnt, gen.payoff_scale);
        const std::vector<double> xbar = random_field(rng, cnt, gen.payoff_scale);
        std::vector<double> sum(cnt);
        for (long i = 0; i < cnt; ++i) sum[i] = x[i] + xbar[i];
        const BsdeSolution ss = solve_bsde_terminal(model, driver, sum, cfg);
        const BsdeSolution sx = solve_bsde_terminal(model, driver, x, cfg);
        const BsdeSolution sxbar = solve_bsde_terminal(model, driver, xbar, cfg);
        const NodeGap w = worst_over_nodes(n, d, [&](int i, long idx) {
            return std::tuple{ss.y[i][idx], sx.y[i][idx] + sxbar.y[i][idx], false};
        });
        rec.ineq(case_id(c, model, ""), w.lhs, w.rhs,
                 std::max(max_abs(x), max_abs(xbar)));
    }
    return rec.finish();
}

PropertyReport check_cash_translatability(const Driver& driver,
                                          const CaseGenerator& gen,
                                          const std::vector<double>& etas,
                                          const SolverConfig& cfg) {
    Recorder rec("cash_translatability", cfg);
    std::mt19937_64 rng(gen.seed + 8);
    const int d = driver.dim_z;
    for (int c = 0; c < gen.count; ++c) {
        const LatticeModel model = draw_model(gen, rng, d, driver.mu, cfg);
        const int n = model.grid.n;
        const long cnt = node_count(n, d);
        const std::vector<double> x = random_field(rng, cnt, gen.payoff_scale);
        const BsdeSolution sx = solve_bsde_terminal(model, driver, x, cfg);
        for (double eta : etas) {
            std::vector<double> shifted(cnt);
            for (long i = 0; i < cnt; ++i) shifted[i] = x[i] + eta;
            const double lhs =
                solve_bsde_terminal(model, driver, shifted, cfg).root_price;
            std::ostringstream tag;
            tag << "eta" << eta << " root";
            rec.eq(case_id(c, model, tag.str()), lhs, sx.root_price + eta,
                   max_abs(x) + std::abs(eta));
        }
        // step-measurable shift: each step-j node sees its own constant
        std::uniform_int_distribution<int> uj(1, n - 1);
        const int j = uj(rng);
        std::uniform_real_distribution<double> ue(-10.0, 10.0);
        const LatticeModel sub = sub_model(model, j, n);
        NodeGap w;
        for (long a = 0; a < node_count(j, d); ++a) {
            int root[max_dim];
            decode_node(j, d, a, root);
            const double eta = ue(rng);
            std::vector<double> field = subtree_terminal(x, n, d, j, root);
            for (auto& v : field) v += eta;
            const double lhs =
                solve_bsde_terminal(sub, driver, field, cfg).root_price;
            const double rhs = sx.y[j][a] + eta;
            const double gap = std::abs(lhs - rhs);
            if (gap > w.gap) w = {lhs, rhs, gap};
        }
        rec.eq(case_id(c, model, "measurable split" + std::to_string(j)), w.lhs,
               w.rhs, max_abs(x) + 10.0);
    }
    PropertyReport rep = rec.finish();
    if (driver.depends_on_y) {
        rep.note = "diagnostic: driver depends on y, exact translation not "
                   "expected; max deviation " + fmt(rep.max_gap);
        rep.verdict = Verdict::skipped;
    }
    return rep;
}

PropertyReport check_self_financing(const Driver& driver,
                                    const SolverConfig& cfg) {
    Recorder rec("self_financing", cfg);
    const int d = driver.dim_z;
    const struct { double T; int n; } menu[] = {{0.25, 5}, {0.5, 8}, {1.0, 10}};
    for (const auto& [T, n0] : menu) {
        const int n = std::max(n0, min_steps_for(driver.mu, 0.0, T, cfg.courant_cap));
        const LatticeModel model =
            make_lattice(build_time_grid(0.0, T, n), d,
                         std::vector<double>(d, 100.0),
                         std::vector<double>(d, 0.2),
                         std::vector<double>(d, 0.0));
        const BsdeSolution sol = solve_bsde_terminal(
            model, driver, std::vector<double>(node_count(n, d), 0.0), cfg);
        const NodeGap w = worst_over_nodes(n, d, [&](int i, long idx) {
            return std::tuple{sol.y[i][idx], 0.0, true};
        });
        std::ostringstream id;
        id << "price-of-zero T" << T << " n" << n;
        rec.eq(id.str(), w.lhs, w.rhs, 1.0);
        double worst_g = 0.0, at_t = 0.0;
        const double z0[max_dim] = {0.0, 0.0, 0.0};
        for (int i = 0; i <= n; ++i) {
            const double g = driver.eval(model.grid.time_at(i), 0.0, z0, d);
            if (std::abs(g) > std::abs(worst_g)) {
                worst_g = g;
                at_t = model.grid.time_at(i);
            }
        }
        std::ostringstream id2;
        id2 << "g-at-origin T" << T << " t" << at_t;
        rec.eq(id2.str(), worst_g, 0.0, 1.0);
    }
    return rec.finish();
}

PropertyReport check_zero_interest(const Driver& driver,
                                   const std::vector<double>& constants,
                                   const SolverConfig& cfg) {
    Recorder rec("zero_interest", cfg);
    const int d = driver.dim_z;
    // sampled driver-side condition g(t, y, 0) = 0
    double cond_dev = 0.0;
    {
        const double z0[max_dim] = {0.0, 0.0, 0.0};
        for (int i = 0; i <= 20; ++i)
            for (int k = -5; k <= 5; ++k)
                cond_dev = std::max(
                    cond_dev, std::abs(driver.eval(i * 0.05, 2.0 * k, z0, d)));
    }
    const struct { double T; int n; } menu[] = {{0.25, 5}, {1.0, 10}};
    for (const auto& [T, n0] : menu) {
        const int n = std::max(n0, min_steps_for(driver.mu, 0.0, T, cfg.courant_cap));
        const LatticeModel model =
            make_lattice(build_time_grid(0.0, T, n), d,
                         std::vector<double>(d, 100.0),
                         std::vector<double>(d, 0.2),
                         std::vector<double>(d, 0.0));
        for (double c : constants) {
            const BsdeSolution sol = solve_bsde_terminal(
                model, driver, std::vector<double>(node_count(n, d), c), cfg);
            const NodeGap w = worst_over_nodes(n, d, [&](int i, long idx) {
                return std::tuple{sol.y[i][idx], c, true};
            });
            std::ostringstream id;
            id << "constant" << c << " T" << T << " n" << n;
            rec.eq(id.str(), w.lhs, w.rhs, std::abs(c));
        }
    }
    PropertyReport rep = rec.finish();
    rep.note = (cond_dev <= 1e-12)
                   ? "sampled g(t,y,0) = 0 holds"
                   : "sampled g(t,y,0) deviates by " + fmt(cond_dev);
    return rep;
}

PropertyReport check_component_independence(const Driver& driver, int i0,
                                            const CaseGenerator& gen,
                                            const SolverConfig& cfg) {
    const int d = driver.dim_z;
    if (i0 < 0 || i0 >= d)
        throw std::invalid_argument(
            "check_component_independence: component index out of range");
    if (d < 2)
        return skipped_report("component_independence",
                              "requires a driver with dim_z >= 2");
    Recorder rec("component_independence", cfg);
    std::mt19937_64 rng(gen.seed + 9);
    for (int c = 0; c < gen.count; ++c) {
        const LatticeModel model = draw_model(gen, rng, d, driver.mu, cfg);
        const int n = model.grid.n;
        const long cnt = node_count(n, d);
        std::vector<double> x = random_field(rng, cnt, gen.payoff_scale);
        std::uniform_real_distribution<double> uz(-5.0, 5.0);
        const double zbar = uz(rng);
        std::vector<double> lifted(cnt);
        for (long idx = 0; idx < cnt; ++idx) {
            int up[max_dim];
            decode_node(n, d, idx, up);
            const auto W = node_brownian_value(model, n, up);
            lifted[idx] = x[idx] + zbar * W[i0];
        }
        const BsdeSolution base = solve_bsde_terminal(model, driver, x, cfg);
        const BsdeSolution lift = solve_bsde_terminal(model, driver, lifted, cfg);
        NodeGap w;
        for (int i = 0; i <= n; ++i) {
            for (long idx = 0; idx < node_count(i, d); ++idx) {
                int up[max_dim];
                decode_node(i, d, idx, up);
                const auto W = node_brownian_value(model, i, up);
                const double lhs = lift.y[i][idx];
                const double rhs = base.y[i][idx] + zbar * W[i0];
                const double gap = std::abs(lhs - rhs);
                if (gap > w.gap) w = {lhs, rhs, gap};
            }
        }
        std::ostringstream tag;
        tag << "zbar" << zbar;
        rec.eq(case_id(c, model, tag.str()), w.lhs, w.rhs,
               max_abs(x) + std::abs(zbar) * std::sqrt(model.grid.T) * n);
    }
    PropertyReport rep = rec.finish();
    rep.note = driver.traits.ignores_component == i0
                   ? "driver declared independent of the tested component"
                   : "diagnostic: driver declares dependence on the tested component";
    return rep;
}

std::vector<PropertyReport> run_property_suite(const Driver& driver,
                                               const SuiteConfig& cfg) {
    std::vector<PropertyReport> out;
    out.push_back(check_monotonicity(driver, cfg.gen, cfg.solver));
    out.push_back(check_consistency(driver, cfg.gen, cfg.solver));
    out.push_back(check_zero_one_law(driver, cfg.gen, cfg.solver));
    if (cfg.domination_mu >= driver.mu)
        out.push_back(check_domination(driver, cfg.domination_mu, cfg.gen, cfg.solver));
    else
        out.push_back(skipped_report(
            "domination", "declared Lipschitz constant exceeds the dominating mu"));
    out.push_back(check_bid_ask_order(driver, cfg.gen, cfg.solver));
    out.push_back(check_convexity(driver, cfg.gen, {0.25, 0.5, 0.75}, cfg.solver));
    out.push_back(check_positive_homogeneity(driver, cfg.gen, {0.0, 0.5, 2.0, 5.0},
                                             cfg.solver));
    out.push_back(check_subadditivity(driver, cfg.gen, cfg.solver));
    out.push_back(check_cash_translatability(driver, cfg.gen, {1.0, -2.5, 10.0},
                                             cfg.solver));
    out.push_back(check_self_financing(driver, cfg.solver));
    if (driver.traits.zero_for_zero_z)
        out.push_back(check_zero_interest(driver, {1.0, 7.0, -3.0}, cfg.solver));
    else
        out.push_back(skipped_report(
            "zero_interest",
            "driver does not declare g(t,y,0) = 0; see the direct check"));
    if (driver.dim_z >= 2 && driver.traits.ignores_component >= 0)
        out.push_back(check_component_independence(
            driver, driver.traits.ignores_component, cfg.gen, cfg.solver));
    return out;
}

std::string serialize_reports(const std::vector<PropertyReport>& reports) {
    std::ostringstream out;
    out << "# property\tcase\tlhs\trhs\tgap\tverdict\n";
    for (const auto& rep : reports) {
        const char* v = rep.verdict == Verdict::pass
                            ? "pass"
                            : rep.verdict == Verdict::fail ? "fail" : "skipped";
        out << "# " << rep.property << " verdict=" << v << " cases="
            << rep.cases_run << " violations=" << rep.violations.size()
            << " max_gap=" << fmt(rep.max_gap)
            << " tolerance=" << fmt(rep.tolerance);
        if (!rep.note.empty()) out << " note=" << rep.note;
        out << '\n';
        std::set<std::string> violating;
        for (const auto& pc : rep.violations) violating.insert(pc.id);
        for (const auto& pc : rep.cases)
            out << rep.property << '\t' << pc.id << '\t' << fmt(pc.lhs) << '\t'
                << fmt(pc.rhs) << '\t' << fmt(pc.gap) << '\t'
                << (violating.count(pc.id) ? "fail" : "pass") << '\n';
    }
    return out.str();
}

} // namespace gexp
