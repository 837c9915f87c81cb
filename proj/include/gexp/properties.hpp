#pragma once

#include "gexp/core.hpp"
#include "gexp/solver.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gexp {

enum class Verdict { pass, fail, skipped };

// One evaluated case. gap > 0 measures the violation: lhs - rhs for
// inequality checks (lhs <= rhs expected), |lhs - rhs| for equality checks.
struct PropertyCase {
    std::string id;
    double lhs = 0.0;
    double rhs = 0.0;
    double gap = 0.0;
};

struct PropertyReport {
    std::string property;
    int cases_run = 0;
    std::vector<PropertyCase> cases;      // every case, in generation order
    std::vector<PropertyCase> violations; // cases with gap > tolerance
    double max_gap = 0.0;
    double tolerance = 0.0;
    Verdict verdict = Verdict::pass;
    std::string note; // skip reason or diagnostic label
};

// Serializes reports as one record per case:
//   property <tab> case id <tab> lhs <tab> rhs <tab> gap <tab> verdict
std::string serialize_reports(const std::vector<PropertyReport>& reports);

// Deterministic case source. Maturities are clamped so that the discrete
// comparison argument is valid: dt <= min(courant_cap/mu, (0.95/(d*mu))^2).
// The second bound keeps the one-step operator monotone (mu*sqrt(dt) <= 1/d),
// which is what makes ordering and domination exact on the lattice.
struct CaseGenerator {
    std::uint64_t seed = 0;
    int count = 100;
    int min_n = 4;
    int max_n = 12;
    int max_d = 2;
    double s0 = 100.0;
    double vol = 0.2;
    double drift = 0.05;
    double payoff_scale = 100.0; // random fields drawn from [-scale, scale]
    std::vector<double> maturity_menu{0.25, 0.5, 1.0};
};

// Base absolute tolerance: max(1e-8, 10*picard_tol) * (1 + |scale|), scale
// the largest |price| in the case.
double case_tolerance(const SolverConfig& cfg, double scale);

struct SuiteConfig {
    CaseGenerator gen;
    SolverConfig solver;
    double domination_mu = 25.0;
};

// Ordered payoffs X >= Xbar node-wise imply y >= ybar at every node and step.
PropertyReport check_monotonicity(const Driver& driver, const CaseGenerator& gen,
                                  const SolverConfig& cfg = {});

// Restarting the induction from an intermediate y field reproduces the
// direct solve at every node of every earlier step.
PropertyReport check_consistency(const Driver& driver, const CaseGenerator& gen,
                                 const SolverConfig& cfg = {});

// Restricting the payoff to paths through one step-t node zeroes the step-t
// field elsewhere and leaves the value at that node unchanged. Requires the
// declared g(t,0,0) = 0; skipped otherwise.
PropertyReport check_zero_one_law(const Driver& driver, const CaseGenerator& gen,
                                  const SolverConfig& cfg = {});

// E[X] - E[Xbar] <= E^{g_mu}[X - Xbar] at the root for each generated pair.
// Requires mu >= driver.mu.
PropertyReport check_domination(const Driver& driver, double mu,
                                const CaseGenerator& gen,
                                const SolverConfig& cfg = {});

// E[X] >= -E[-X] (ask dominates bid). Samples the pointwise driver condition
// g(t,y,z) >= -g(t,-y,-z) first and skips if it fails.
PropertyReport check_bid_ask_order(const Driver& driver, const CaseGenerator& gen,
                                   const SolverConfig& cfg = {});

// E[a X + (1-a) Xbar] <= a E[X] + (1-a) E[Xbar] for convex drivers
// (reversed for concave, equality for linear), checked at the root and at
// every node.
PropertyReport check_convexity(const Driver& driver, const CaseGenerator& gen,
                               const std::vector<double>& alphas = {0.25, 0.5, 0.75},
                               const SolverConfig& cfg = {});

// E[lambda X] = lambda E[X] for positively homogeneous drivers.
PropertyReport check_positive_homogeneity(const Driver& driver,
                                          const CaseGenerator& gen,
                                          const std::vector<double>& lambdas = {0.0, 0.5, 2.0, 5.0},
                                          const SolverConfig& cfg = {});

// E[X + Xbar] <= E[X] + E[Xbar] for subadditive drivers.
PropertyReport check_subadditivity(const Driver& driver, const CaseGenerator& gen,
                                   const SolverConfig& cfg = {});

// For y-independent drivers E[X + eta] = E[X] + eta exactly, for constant eta
// at the root and for step-t-measurable eta node by node (each step-t node
// sees a constant shift on its own sub-lattice). For y-dependent drivers the
// violation magnitude is reported as a diagnostic.
PropertyReport check_cash_translatability(const Driver& driver,
                                          const CaseGenerator& gen,
                                          const std::vector<double>& etas = {1.0, -2.5, 10.0},
                                          const SolverConfig& cfg = {});

// E[0] = 0 over every node and tested horizon iff g(t,0,0) = 0; both the
// lattice price and direct driver evaluations at the origin are checked.
PropertyReport check_self_financing(const Driver& driver,
                                    const SolverConfig& cfg = {});

// E[c] = c for constants iff g(t,y,0) = 0.
PropertyReport check_zero_interest(const Driver& driver,
                                   const std::vector<double>& constants = {1.0, 7.0, -3.0},
                                   const SolverConfig& cfg = {});

// For a driver independent of z component i0, adding the full-horizon
// increment sum of a constant zbar in that dimension to the payoff shifts the
// step-t field by the increment sum accumulated up to t.
PropertyReport check_component_independence(const Driver& driver, int i0,
                                            const CaseGenerator& gen,
                                            const SolverConfig& cfg = {});

// Runs every check applicable per the driver's declared traits.
std::vector<PropertyReport> run_property_suite(const Driver& driver,
                                               const SuiteConfig& cfg);

} // namespace gexp
