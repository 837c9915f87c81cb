#pragma once

#include "gexp/core.hpp"
#include "gexp/solver.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace gexp {

struct Date {
    int year = 1970, month = 1, day = 1;

    long serial() const;                  // days since 1970-01-01
    static Date from_serial(long days);
    std::string to_string() const;        // YYYY-MM-DD
    auto operator<=>(const Date&) const = default;
};

// Parses strict YYYY-MM-DD; throws std::invalid_argument otherwise.
Date parse_date(const std::string& text);

enum class QuoteSide { trade, ask, bid };

struct QuoteRecord {
    Date quote_date;
    Date expiry;
    double underlying_price = 0.0;
    double strike = 0.0;
    char option_type = 'C'; // 'C' or 'P'
    QuoteSide side = QuoteSide::trade;
    double price = 0.0;
};

struct IngestResult {
    std::vector<QuoteRecord> quotes;
    std::vector<std::pair<int, std::string>> rejects; // (line number, reason)
};

// CSV with exact header quote_date,expiry,underlying,strike,type,side,price.
// A wrong header is a hard failure; malformed lines land in rejects.
IngestResult ingest_quotes(std::istream& in);
IngestResult ingest_quotes_text(const std::string& text);
std::string quotes_to_csv(const std::vector<QuoteRecord>& quotes);

enum class Family {
    CallCall,       // p(call_i) - p(call_j)  vs  call_i - call_j
    PutPut,         // p(put_i)  - p(put_j)   vs  put_i  - put_j
    CallPut,        // p(call_i) - p(put_j)   vs  call_i - put_j
    PutCall,        // p(put_i)  - p(call_j)  vs  put_i  - call_j
    CallShortCall,  // p(call_i) + p(call_j)  vs  call_i + call_j
    PutShortPut,    // p(put_i)  + p(put_j)   vs  put_i  + put_j
    CallShortPut,   // p(call_i) + p(put_j)   vs  call_i + put_j
};
const char* family_name(Family f);

// One left-hand side from quotes against the dominating-driver price of the
// combined payoff. Difference families subtract the j leg; the short families
// add it (selling the j leg books -E[-X_j], which is +p_j under the
// no-transaction-cost trade convention and +bid_j in bid/ask mode).
struct Inequality {
    Family family = Family::CallCall;
    Date quote_date, expiry;
    double underlying_price = 0.0;
    double strike_i = 0.0, strike_j = 0.0;
    char type_i = 'C', type_j = 'C';
    int sign_j = -1; // -1 difference, +1 sum
    double lhs = 0.0;
    double span_years = 0.0; // ACT/365
    bool short_dated = false;
};

struct MonotonicityFlag {
    Date quote_date, expiry;
    char option_type = 'C';
    QuoteSide side = QuoteSide::trade;
    double strike_lo = 0.0, strike_hi = 0.0;
    double price_lo = 0.0, price_hi = 0.0;
};

struct ScanConfig {
    double mu = 25.0;
    double sigma_for_tree = 0.0;  // required > 0
    double drift_for_tree = 0.0;
    int steps = 0;                // floor; raised per expiry, see evaluate
    int short_dated_threshold_days = 2;
    bool bid_ask_mode = false;
    double tolerance_scale = 1e-6; // violation iff gap > scale * underlying
    SolverConfig solver;
};

struct Battery {
    std::vector<Inequality> inequalities;
    std::vector<MonotonicityFlag> monotonicity;
    std::vector<std::string> notes; // skipped groups etc.
};

// Groups quotes by (quote_date, expiry, underlying) and emits all 7 families
// over every ordered pair of distinct strikes with the required sides quoted.
// Also runs the strike-monotonicity pre-filter (call prices non-increasing,
// put prices non-decreasing, per side).
Battery build_inequality_battery(const std::vector<QuoteRecord>& quotes,
                                 const ScanConfig& cfg);

enum class IneqStatus { pass, violation, unevaluated };

struct IneqVerdict {
    double lhs = 0.0, rhs = 0.0, gap = 0.0;
    IneqStatus status = IneqStatus::pass;
    std::string reason;
};

// rhs = root price of the combined payoff under g_mu on a lattice calibrated
// to (underlying, sigma_for_tree, drift_for_tree). Steps are raised to
// max(cfg.steps, mu*span/courant_cap, mu^2*span); the second bound keeps the
// one-step operator monotone so the domination argument holds discretely.
// Violation iff lhs > rhs + tolerance_scale * underlying.
IneqVerdict evaluate_inequality(const Inequality& ineq, const ScanConfig& cfg);

struct ScanRecord {
    Inequality ineq;
    IneqVerdict verdict;
};

struct ViolationReport {
    int total = 0;
    int passes = 0;
    std::vector<ScanRecord> records;            // every inequality, in order
    std::vector<int> violations;                // indices into records
    std::vector<int> flagged_short_dated;       // indices into records
    std::vector<MonotonicityFlag> flagged_monotonicity;
    std::vector<std::string> notes;
};

// Builds the battery, evaluates every inequality (parallel across
// inequalities, aggregation in construction order) and aggregates counts.
ViolationReport scan(const std::vector<QuoteRecord>& quotes,
                     const ScanConfig& cfg);

// One record per inequality plus a summary block with per-family totals and
// flag counts.
std::string report_to_text(const ViolationReport& report);

struct ChainSpec {
    std::vector<double> strikes;
    std::vector<double> expiries_years;
    double s0 = 100.0;
    double sigma = 0.2;
    double drift = 0.0;
    int steps = 256;
    bool bid_ask = false;
    Date quote_date{2006, 1, 3};
};

// Prices every (strike, type, expiry) under the driver; trade price = E[X],
// or ask = E[X] and bid = -E[-X] when bid_ask is set.
std::vector<QuoteRecord> synthesize_quotes(const Driver& driver,
                                           const ChainSpec& chain,
                                           const SolverConfig& cfg = {});

} // namespace gexp
