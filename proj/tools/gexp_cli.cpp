#include "gexp/drivers.hpp"
#include "gexp/market.hpp"
#include "gexp/pde.hpp"
#include "gexp/properties.hpp"
#include "gexp/recovery.hpp"
#include "gexp/solver.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace gexp;

// never leave a partial artifact: write to a temporary, then rename over
void write_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
        out << content;
        if (!out.flush()) throw std::runtime_error("write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot rename " + tmp + " to " + path);
}

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty())
        std::cout << content;
    else
        write_atomic(out_path, content);
}

struct LatticeFlags {
    double s0 = 100.0;
    double sigma = 0.2;
    double drift = 0.05;
    double maturity = 1.0;
    int steps = 2000;
    std::string payoff = "call";
    double strike = 100.0;
};

void add_lattice_flags(CLI::App* cmd, LatticeFlags& f) {
    cmd->add_option("--s0", f.s0, "initial underlying price");
    cmd->add_option("--sigma", f.sigma, "lattice volatility");
    cmd->add_option("--b", f.drift, "lattice drift rate");
    cmd->add_option("--maturity", f.maturity, "maturity in years");
    cmd->add_option("--steps", f.steps, "lattice step count");
    cmd->add_option("--payoff", f.payoff, "payoff kind: call or put")
        ->check(CLI::IsMember({"call", "put"}));
    cmd->add_option("--strike", f.strike, "payoff strike");
}

Payoff payoff_from(const LatticeFlags& f) {
    return f.payoff == "call" ? make_call(f.strike, f.maturity)
                              : make_put(f.strike, f.maturity);
}

LatticeModel model_from(const LatticeFlags& f, int steps) {
    return make_lattice(build_time_grid(0.0, f.maturity, steps), 1, {f.s0},
                        {f.sigma}, {f.drift});
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

int run(int argc, char** argv) {
    CLI::App app{"nonlinear-expectation pricing engine"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    int jobs = 0;
    app.add_option("--seed", seed, "rng seed for generated cases");
    app.add_option("--jobs", jobs, "cap worker threads (0 = library default)");

    std::string driver_path, quotes_path, out_path;

    auto* price = app.add_subcommand("price", "price one payoff, with a convergence ladder");
    LatticeFlags pf;
    price->add_option("--driver", driver_path, "driver config file")
        ->required()
        ->check(CLI::ExistingFile);
    add_lattice_flags(price, pf);
    price->add_option("--out", out_path, "write the ladder table here");

    auto* props = app.add_subcommand("props", "run the property suite for a driver");
    int cases = 100;
    double domination_mu = 25.0;
    props->add_option("--driver", driver_path, "driver config file")
        ->required()
        ->check(CLI::ExistingFile);
    props->add_option("--cases", cases, "generated cases per property");
    props->add_option("--mu", domination_mu, "dominating mu for the domination check");
    props->add_option("--out", out_path, "write the report here");

    auto* recover = app.add_subcommand("recover", "recover g(z) from the driver's mechanism");
    LatticeFlags rf;
    double z_min = -2.0, z_max = 2.0;
    int z_count = 5;
    double r_t = 0.0;
    recover->add_option("--driver", driver_path, "driver config file")
        ->required()
        ->check(CLI::ExistingFile);
    recover->add_option("--zmin", z_min, "smallest z on the grid");
    recover->add_option("--zmax", z_max, "largest z on the grid");
    recover->add_option("--zcount", z_count, "grid size")->check(CLI::PositiveNumber);
    recover->add_option("--t", r_t, "start time");
    recover->add_option("--maturity", rf.maturity, "end time");
    recover->add_option("--s0", rf.s0, "proto lattice price");
    recover->add_option("--sigma", rf.sigma, "proto lattice volatility");
    recover->add_option("--b", rf.drift, "proto lattice drift");
    recover->add_option("--out", out_path, "write the surface here");

    auto* pde = app.add_subcommand("pde-check", "cross-check the lattice against the finite-difference march");
    LatticeFlags df;
    int m = 800, n_t = 0;
    pde->add_option("--driver", driver_path, "driver config file")
        ->required()
        ->check(CLI::ExistingFile);
    add_lattice_flags(pde, df);
    pde->add_option("-m,--space-steps", m, "space steps");
    pde->add_option("--nt", n_t, "time steps (0 = minimal stable)");
    pde->add_option("--out", out_path, "write the u-grid here");

    auto* scan_cmd = app.add_subcommand("scan", "domination scan over an option-quote csv");
    ScanConfig sc;
    scan_cmd->add_option("--quotes", quotes_path, "quote csv")
        ->required()
        ->check(CLI::ExistingFile);
    scan_cmd->add_option("--mu", sc.mu, "dominating mu");
    scan_cmd->add_option("--sigma", sc.sigma_for_tree, "lattice volatility for the rhs tree")
        ->required();
    scan_cmd->add_option("--drift", sc.drift_for_tree, "lattice drift for the rhs tree");
    scan_cmd->add_option("--steps", sc.steps, "lattice step floor");
    scan_cmd->add_flag("--bid-ask", sc.bid_ask_mode, "use quoted ask/bid sides");
    scan_cmd->add_option("--out", out_path, "write the violation report here");

    auto* synth = app.add_subcommand("synth", "synthesize a quote chain from a driver");
    ChainSpec chain;
    std::vector<double> strikes{80, 85, 90, 95, 100, 105, 110, 115};
    std::vector<double> expiries{0.25, 0.5, 1.0};
    synth->add_option("--driver", driver_path, "driver config file")
        ->required()
        ->check(CLI::ExistingFile);
    synth->add_option("--strikes", strikes, "strike list")->delimiter(',');
    synth->add_option("--expiries", expiries, "expiry list in years")->delimiter(',');
    synth->add_option("--s0", chain.s0, "underlying price");
    synth->add_option("--sigma", chain.sigma, "lattice volatility");
    synth->add_option("--b", chain.drift, "lattice drift");
    synth->add_option("--steps", chain.steps, "lattice step count");
    synth->add_flag("--bid-ask", chain.bid_ask, "emit ask and bid sides");
    synth->add_option("--out", out_path, "write the csv here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

#ifdef _OPENMP
    if (jobs > 0) omp_set_num_threads(jobs);
#endif

    if (*price) {
        const Driver driver = load_driver_config(driver_path);
        const Payoff payoff = payoff_from(pf);
        std::ostringstream table;
        table << "# steps\tprice\tchange\n";
        double prev = 0.0;
        bool have_prev = false;
        double final_price = 0.0;
        for (int div : {8, 4, 2, 1}) {
            const int n = std::max(pf.steps / div,
                                   min_steps_for(driver.mu, 0.0, pf.maturity, 0.5));
            const double p =
                solve_bsde(model_from(pf, n), driver, payoff, {}).root_price;
            table << n << '\t' << fmt(p) << '\t'
                  << (have_prev ? fmt(p - prev) : "-") << '\n';
            prev = p;
            have_prev = true;
            final_price = p;
        }
        std::cout << "price " << fmt(final_price) << '\n';
        emit(out_path, table.str());
        if (out_path.empty()) return 0;
        std::cout << "ladder written to " << out_path << '\n';
        return 0;
    }

    if (*props) {
        const Driver driver = load_driver_config(driver_path);
        SuiteConfig cfg;
        cfg.gen.seed = seed;
        cfg.gen.count = cases;
        cfg.domination_mu = domination_mu;
        const auto reports = run_property_suite(driver, cfg);
        emit(out_path, serialize_reports(reports));
        bool failed = false;
        for (const auto& rep : reports) {
            const char* v = rep.verdict == Verdict::pass
                                ? "pass"
                                : rep.verdict == Verdict::fail ? "fail" : "skipped";
            std::cout << rep.property << ": " << v;
            if (rep.verdict == Verdict::fail)
                std::cout << " (" << rep.violations.size() << " of "
                          << rep.cases_run << " cases, max_gap "
                          << fmt(rep.max_gap) << ")";
            std::cout << '\n';
            failed = failed || rep.verdict == Verdict::fail;
        }
        return failed ? 2 : 0;
    }

    if (*recover) {
        const Driver driver = load_driver_config(driver_path);
        if (z_count < 1) throw CLI::ValidationError("--zcount", "must be positive");
        const LatticeModel proto = model_from(rf, 8);
        const MechanismHandle mech = mechanism_from_driver(driver, proto);
        std::vector<std::array<double, max_dim>> grid;
        for (int i = 0; i < z_count; ++i) {
            std::array<double, max_dim> z{};
            z[0] = z_count == 1
                       ? z_min
                       : z_min + (z_max - z_min) * i / (z_count - 1);
            grid.push_back(z);
        }
        const auto surface =
            recover_surface(mech, grid, 1, r_t, r_t + rf.maturity);
        std::string text = surface_to_text(surface);
        if (driver.depends_on_y)
            text += "# valid only under the g = g(z) hypothesis; the driver "
                    "declares y-dependence\n";
        emit(out_path, text);
        return 0;
    }

    if (*pde) {
        const Driver driver = load_driver_config(driver_path);
        const LatticeModel model = model_from(df, df.steps);
        const CrossCheckResult res =
            cross_check(model, driver, payoff_from(df), m, {}, n_t);
        std::cout << "lattice " << fmt(res.lattice_price) << " (n "
                  << res.lattice_steps << ")\n"
                  << "pde " << fmt(res.pde_price) << " (m " << m << ", nt "
                  << res.pde_time_steps << ")\n"
                  << "gap " << fmt(res.gap) << '\n';
        if (!out_path.empty()) {
            PdeProblem prob;
            prob.sigma = [v = df.sigma](double) { return v; };
            prob.b = [b = df.drift](double) { return b; };
            prob.f = [&driver](double, double u, double v) {
                const double z = v;
                return driver.eval(0.0, u, &z, 1);
            };
            prob.lip_f = driver.mu;
            prob.span = df.maturity;
            const Payoff payoff = payoff_from(df);
            const PdeGrid grid = make_pde_grid(
                df.s0 / 5.0, 5.0 * df.s0, m,
                [&](double s) {
                    NodeState node;
                    node.S[0] = s;
                    return payoff_value(payoff, node);
                },
                n_t);
            const PdeSolution sol = solve_feynman_kac(prob, grid);
            std::ostringstream table;
            table << "# s\tu0\n";
            for (std::size_t j = 0; j < sol.s.size(); ++j)
                table << fmt(sol.s[j]) << '\t' << fmt(sol.u0[j]) << '\n';
            write_atomic(out_path, table.str());
            std::cout << "u-grid written to " << out_path << '\n';
        }
        return 0;
    }

    if (*scan_cmd) {
        std::ifstream in(quotes_path);
        if (!in) throw std::runtime_error("cannot open " + quotes_path);
        const IngestResult ingest = ingest_quotes(in);
        for (const auto& [line, reason] : ingest.rejects)
            std::cerr << "reject line " << line << ": " << reason << '\n';
        const ViolationReport report = scan(ingest.quotes, sc);
        emit(out_path, report_to_text(report));
        std::cout << report.total << " inequalities, " << report.passes
                  << " passes, " << report.violations.size() << " violations, "
                  << report.flagged_short_dated.size() << " short-dated, "
                  << report.flagged_monotonicity.size()
                  << " monotonicity flags\n";
        return report.violations.empty() ? 0 : 2;
    }

    if (*synth) {
        const Driver driver = load_driver_config(driver_path);
        chain.strikes = strikes;
        chain.expiries_years = expiries;
        const auto quotes = synthesize_quotes(driver, chain);
        emit(out_path, quotes_to_csv(quotes));
        std::cout << quotes.size() << " quotes\n";
        return 0;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const CLI::Error& e) {
        return e.get_exit_code() == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
