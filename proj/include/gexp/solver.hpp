#pragma once

#include "gexp/core.hpp"

namespace gexp {

enum class Exec { serial, parallel };

// Sampling rule turning a payoff into terminal node values. cell_average
// integrates vanilla kinds exactly over each node's Brownian cell
// [W - sqrt(dt), W + sqrt(dt)] in the payoff asset's dimension, which removes
// the strike-position oscillation of pointwise sampling and restores clean
// first-order convergence; it coincides with pointwise sampling away from the
// strike cell and is exact for affine payoffs. Non-vanilla kinds are always
// sampled pointwise.
enum class TerminalSampling { cell_average, pointwise };

struct SolverConfig {
    Scheme scheme = Scheme::implicit_picard;
    double picard_tol = 1e-12;
    int picard_max_iter = 100;
    double courant_cap = 0.5; // bound on mu * dt
    TerminalSampling sampling = TerminalSampling::cell_average;
    Exec exec = Exec::parallel;
};

// Smallest n with mu * (T - t0) / n <= cap.
int min_steps_for(double mu, double t0, double T, double cap);

// Terminal node values of a payoff under the given sampling rule.
std::vector<double> sample_terminal(const LatticeModel& model,
                                    const Payoff& payoff,
                                    TerminalSampling sampling);

// One implicit step: solves y = expected_next + g(t, y, z) * dt by Picard
// iteration started from expected_next. Contraction factor is mu * dt < 1.
// Stops when successive iterates agree to picard_tol relative to scale
// 1 + |y|, so convergence stays attainable at y magnitudes where an
// absolute 1e-12 would sit below one ulp. Returns the solution and the
// number of iterations used; throws std::runtime_error with the last
// residual if picard_max_iter is exhausted.
std::pair<double, int> implicit_step(double expected_next, const double* z,
                                     int d, double t, const Driver& driver,
                                     double dt, const SolverConfig& cfg);

// Backward induction over the lattice. For each non-terminal node,
//   z_k = E_node[y_next * eps_k] / dt  (eps_k the +-sqrt(dt) increment),
//   y   = E_node[y_next] + g(t_i, y, z) * dt        (implicit scheme), or
//   y   = E_node[y_next] + g(t_i, E_node[y_next], z) * dt   (explicit),
// where E_node averages the 2^d children uniformly. Terminal y is the sampled
// payoff. Rejects Courant violations (mu * dt > courant_cap), reporting the
// minimal compliant n.
BsdeSolution solve_bsde(const LatticeModel& model, const Driver& driver,
                        const Payoff& payoff, const SolverConfig& cfg = {});

// Like solve_bsde but starting from an explicit terminal value field
// (size (n+1)^d). Used for combined or restricted payoffs.
BsdeSolution solve_bsde_terminal(const LatticeModel& model,
                                 const Driver& driver,
                                 std::vector<double> terminal,
                                 const SolverConfig& cfg = {});

// The y field restricted to one step: the conditional price operator
// evaluated on that step's nodes.
std::vector<double> g_expectation(const LatticeModel& model,
                                  const Driver& driver, const Payoff& payoff,
                                  int t_index, const SolverConfig& cfg = {});

} // namespace gexp
