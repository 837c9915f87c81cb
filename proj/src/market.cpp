#include "gexp/market.hpp"

#include "gexp/drivers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace gexp {

long Date::serial() const {
    long y = year;
    const int m = month;
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const long yoe = y - era * 400;
    const long doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + day - 1;
    const long doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + doe - 719468;
}

Date Date::from_serial(long days) {
    long z = days + 719468;
    const long era = (z >= 0 ? z : z - 146096) / 146097;
    const long doe = z - era * 146097;
    const long yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const long y = yoe + era * 400;
    const long doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const long mp = (5 * doy + 2) / 153;
    const long d = doy - (153 * mp + 2) / 5 + 1;
    const long m = mp + (mp < 10 ? 3 : -9);
    return Date{static_cast<int>(y + (m <= 2)), static_cast<int>(m),
                static_cast<int>(d)};
}

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
}

Date parse_date(const std::string& text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
        throw std::invalid_argument("bad date '" + text + "'");
    for (int i : {0, 1, 2, 3, 5, 6, 8, 9})
        if (text[i] < '0' || text[i] > '9')
            throw std::invalid_argument("bad date '" + text + "'");
    Date d;
    d.year = std::stoi(text.substr(0, 4));
    d.month = std::stoi(text.substr(5, 2));
    d.day = std::stoi(text.substr(8, 2));
    if (Date::from_serial(d.serial()) != d)
        throw std::invalid_argument("bad date '" + text + "'");
    return d;
}

namespace {

const char* kHeader = "quote_date,expiry,underlying,strike,type,side,price";

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            out.push_back(field);
            field.clear();
        } else {
            field += c;
        }
    }
    out.push_back(field);
    return out;
}

double parse_price_field(const std::string& text) {
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (pos != text.size() || !std::isfinite(v))
        throw std::invalid_argument("not a number");
    return v;
}

const char* side_name(QuoteSide s) {
    switch (s) {
    case QuoteSide::trade: return "trade";
    case QuoteSide::ask: return "ask";
    case QuoteSide::bid: return "bid";
    }
    return "?";
}

} // namespace

IngestResult ingest_quotes(std::istream& in) {
    IngestResult res;
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("quote csv: empty document, header required");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader)
        throw std::invalid_argument(
            "quote csv: bad header, expected: " + std::string(kHeader));
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 7) {
            res.rejects.emplace_back(lineno, "wrong field count");
            continue;
        }
        QuoteRecord q;
        try {
            q.quote_date = parse_date(f[0]);
        } catch (const std::exception&) {
            res.rejects.emplace_back(lineno, "bad quote_date");
            continue;
        }
        try {
            q.expiry = parse_date(f[1]);
        } catch (const std::exception&) {
            res.rejects.emplace_back(lineno, "bad expiry");
            continue;
        }
        try {
            q.underlying_price = parse_price_field(f[2]);
        } catch (const std::exception&) {
            res.rejects.emplace_back(lineno, "bad underlying");
            continue;
        }
        try {
            q.strike = parse_price_field(f[3]);
        } catch (const std::exception&) {
            res.rejects.emplace_back(lineno, "bad strike");
            continue;
        }
        if (f[4] == "C" || f[4] == "P") {
            q.option_type = f[4][0];
        } else {
            res.rejects.emplace_back(lineno, "bad type");
            continue;
        }
        if (f[5] == "trade") {
            q.side = QuoteSide::trade;
        } else if (f[5] == "ask") {
            q.side = QuoteSide::ask;
        } else if (f[5] == "bid") {
            q.side = QuoteSide::bid;
        } else {
            res.rejects.emplace_back(lineno, "bad side");
            continue;
        }
        try {
            q.price = parse_price_field(f[6]);
        } catch (const std::exception&) {
            res.rejects.emplace_back(lineno, "bad price");
            continue;
        }
        if (q.price < 0.0) {
            res.rejects.emplace_back(lineno, "negative price");
            continue;
        }
        if (q.underlying_price <= 0.0) {
            res.rejects.emplace_back(lineno, "non-positive underlying");
            continue;
        }
        if (q.strike <= 0.0) {
            res.rejects.emplace_back(lineno, "non-positive strike");
            continue;
        }
        if (q.expiry < q.quote_date) {
            res.rejects.emplace_back(lineno, "expiry before quote date");
            continue;
        }
        res.quotes.push_back(q);
    }
    return res;
}

IngestResult ingest_quotes_text(const std::string& text) {
    std::istringstream in(text);
    return ingest_quotes(in);
}

std::string quotes_to_csv(const std::vector<QuoteRecord>& quotes) {
    std::ostringstream out;
    out << kHeader << '\n';
    char buf[128];
    for (const auto& q : quotes) {
        std::snprintf(buf, sizeof buf, "%s,%s,%.10g,%.10g,%c,%s,%.10g\n",
                      q.quote_date.to_string().c_str(),
                      q.expiry.to_string().c_str(), q.underlying_price,
                      q.strike, q.option_type, side_name(q.side), q.price);
        out << buf;
    }
    return out.str();
}

const char* family_name(Family f) {
    switch (f) {
    case Family::CallCall: return "call-call";
    case Family::PutPut: return "put-put";
    case Family::CallPut: return "call-put";
    case Family::PutCall: return "put-call";
    case Family::CallShortCall: return "call-shortcall";
    case Family::PutShortPut: return "put-shortput";
    case Family::CallShortPut: return "call-shortput";
    }
    return "?";
}

namespace {

struct FamilySpec {
    Family family;
    char type_i, type_j;
    int sign_j; // -1 difference, +1 sum
};

constexpr FamilySpec kFamilies[] = {
    {Family::CallCall, 'C', 'C', -1},      {Family::PutPut, 'P', 'P', -1},
    {Family::CallPut, 'C', 'P', -1},       {Family::PutCall, 'P', 'C', -1},
    {Family::CallShortCall, 'C', 'C', +1}, {Family::PutShortPut, 'P', 'P', +1},
    {Family::CallShortPut, 'C', 'P', +1},
};

} // namespace

Battery build_inequality_battery(const std::vector<QuoteRecord>& quotes,
                                 const ScanConfig& cfg) {
    Battery bat;
    using GroupKey = std::tuple<long, long, double>;
    std::map<GroupKey, std::vector<const QuoteRecord*>> groups;
    for (const auto& q : quotes)
        groups[{q.quote_date.serial(), q.expiry.serial(), q.underlying_price}]
            .push_back(&q);

    for (const auto& [key, members] : groups) {
        const Date quote_date = members.front()->quote_date;
        const Date expiry = members.front()->expiry;
        const double underlying = members.front()->underlying_price;
        const long span_days = expiry.serial() - quote_date.serial();
        const double span_years = span_days / 365.0;
        const bool short_dated = span_days < cfg.short_dated_threshold_days;

        std::map<std::tuple<double, char, QuoteSide>, double> price;
        std::vector<double> strikes;
        for (const auto* q : members) {
            const auto pk = std::tuple{q->strike, q->option_type, q->side};
            if (price.count(pk)) {
                bat.notes.push_back("duplicate quote ignored: " +
                                    quote_date.to_string() + " " +
                                    expiry.to_string() + " strike " +
                                    std::to_string(q->strike));
                continue;
            }
            price[pk] = q->price;
            strikes.push_back(q->strike);
        }
        std::sort(strikes.begin(), strikes.end());
        strikes.erase(std::unique(strikes.begin(), strikes.end()), strikes.end());

        if (strikes.size() < 2) {
            bat.notes.push_back("group " + quote_date.to_string() + " " +
                                expiry.to_string() +
                                " has fewer than 2 strikes, skipped");
            continue;
        }

        // lhs side convention: trade mode books both legs at trade prices;
        // bid/ask mode pays ask on the long leg and receives bid on a short leg
        const auto leg_price = [&](double strike, char type, bool short_leg,
                                   double& out) {
            const QuoteSide side =
                !cfg.bid_ask_mode ? QuoteSide::trade
                                  : (short_leg ? QuoteSide::bid : QuoteSide::ask);
            const auto it = price.find({strike, type, side});
            if (it == price.end()) return false;
            out = it->second;
            return true;
        };

        for (double ki : strikes) {
            for (double kj : strikes) {
                if (ki == kj) continue;
                for (const auto& fam : kFamilies) {
                    double pi = 0.0, pj = 0.0;
                    if (!leg_price(ki, fam.type_i, false, pi)) continue;
                    if (fam.sign_j < 0) {
                        // difference family: both legs held long
                        if (!leg_price(kj, fam.type_j, false, pj)) continue;
                    } else {
                        if (!leg_price(kj, fam.type_j, true, pj)) continue;
                    }
                    Inequality ineq;
                    ineq.family = fam.family;
                    ineq.quote_date = quote_date;
                    ineq.expiry = expiry;
                    ineq.underlying_price = underlying;
                    ineq.strike_i = ki;
                    ineq.strike_j = kj;
                    ineq.type_i = fam.type_i;
                    ineq.type_j = fam.type_j;
                    ineq.sign_j = fam.sign_j;
                    ineq.lhs = fam.sign_j < 0 ? pi - pj : pi + pj;
                    ineq.span_years = span_years;
                    ineq.short_dated = short_dated;
                    bat.inequalities.push_back(ineq);
                }
            }
        }

        // strike-monotonicity pre-filter: every violating ordered pair flags
        for (char type : {'C', 'P'}) {
            for (QuoteSide side :
                 {QuoteSide::trade, QuoteSide::ask, QuoteSide::bid}) {
                std::vector<std::pair<double, double>> curve;
                for (double k : strikes) {
                    const auto it = price.find({k, type, side});
                    if (it != price.end()) curve.emplace_back(k, it->second);
                }
                for (std::size_t a = 0; a < curve.size(); ++a) {
                    for (std::size_t b = a + 1; b < curve.size(); ++b) {
                        const bool bad = type == 'C'
                                             ? curve[a].second < curve[b].second
                                             : curve[a].second > curve[b].second;
                        if (!bad) continue;
                        MonotonicityFlag flag;
                        flag.quote_date = quote_date;
                        flag.expiry = expiry;
                        flag.option_type = type;
                        flag.side = side;
                        flag.strike_lo = curve[a].first;
                        flag.strike_hi = curve[b].first;
                        flag.price_lo = curve[a].second;
                        flag.price_hi = curve[b].second;
                        bat.monotonicity.push_back(flag);
                    }
                }
            }
        }
    }
    return bat;
}

IneqVerdict evaluate_inequality(const Inequality& ineq, const ScanConfig& cfg) {
    IneqVerdict v;
    v.lhs = ineq.lhs;
    if (!(cfg.sigma_for_tree > 0.0)) {
        v.status = IneqStatus::unevaluated;
        v.reason = "sigma_for_tree must be positive";
        return v;
    }
    if (!(ineq.span_years > 0.0)) {
        v.status = IneqStatus::unevaluated;
        v.reason = "non-positive time to expiry";
        return v;
    }
    try {
        const double span = ineq.span_years;
        // the mu^2*span bound keeps mu*sqrt(dt) <= 1, hence the one-step
        // operator monotone, so domination holds node-wise on the lattice
        const int n = std::max(
            {cfg.steps,
             min_steps_for(cfg.mu, 0.0, span, cfg.solver.courant_cap),
             static_cast<int>(std::ceil(cfg.mu * cfg.mu * span)), 1});
        const LatticeModel model = make_lattice(
            build_time_grid(0.0, span, n), 1, {ineq.underlying_price},
            {cfg.sigma_for_tree}, {cfg.drift_for_tree});
        const double ki = ineq.strike_i, kj = ineq.strike_j;
        const char ti = ineq.type_i, tj = ineq.type_j;
        const double sj = ineq.sign_j;
        const Payoff combined = make_custom(
            [ki, kj, ti, tj, sj](const NodeState& node) {
                const double s = node.S[0];
                const double leg_i = ti == 'C' ? std::max(s - ki, 0.0)
                                               : std::max(ki - s, 0.0);
                const double leg_j = tj == 'C' ? std::max(s - kj, 0.0)
                                               : std::max(kj - s, 0.0);
                return leg_i + sj * leg_j;
            },
            span);
        const Driver gmu = make_gmu(cfg.mu, 1);
        v.rhs = solve_bsde(model, gmu, combined, cfg.solver).root_price;
        v.gap = v.lhs - v.rhs;
        v.status = v.gap > cfg.tolerance_scale * ineq.underlying_price
                       ? IneqStatus::violation
                       : IneqStatus::pass;
    } catch (const std::exception& ex) {
        v.status = IneqStatus::unevaluated;
        v.reason = ex.what();
    }
    return v;
}

ViolationReport scan(const std::vector<QuoteRecord>& quotes,
                     const ScanConfig& cfg) {
    if (!(cfg.mu > 0.0))
        throw std::invalid_argument("scan: mu must be positive");
    if (!(cfg.sigma_for_tree > 0.0))
        throw std::invalid_argument("scan: sigma_for_tree must be positive");
    Battery bat = build_inequality_battery(quotes, cfg);

    ViolationReport rep;
    rep.notes = std::move(bat.notes);
    rep.flagged_monotonicity = std::move(bat.monotonicity);
    const long count = static_cast<long>(bat.inequalities.size());
    rep.records.resize(count);

    const bool par = cfg.solver.exec == Exec::parallel && count > 8;
#pragma omp parallel for schedule(dynamic) if (par)
    for (long i = 0; i < count; ++i) {
        rep.records[i].ineq = bat.inequalities[i];
        rep.records[i].verdict = evaluate_inequality(bat.inequalities[i], cfg);
    }

    int unevaluated = 0;
    for (long i = 0; i < count; ++i) {
        const auto& rec = rep.records[i];
        switch (rec.verdict.status) {
        case IneqStatus::pass:
            ++rep.passes;
            break;
        case IneqStatus::violation:
            rep.violations.push_back(static_cast<int>(i));
            break;
        case IneqStatus::unevaluated:
            ++unevaluated;
            break;
        }
        if (rec.ineq.short_dated)
            rep.flagged_short_dated.push_back(static_cast<int>(i));
    }
    rep.total = rep.passes + static_cast<int>(rep.violations.size());
    if (unevaluated > 0)
        rep.notes.push_back(std::to_string(unevaluated) +
                            " inequalities unevaluated");
    return rep;
}

std::string report_to_text(const ViolationReport& report) {
    std::ostringstream out;
    out << "# family\tstrike_i\tstrike_j\tquote_date\texpiry\tspan_years\tlhs\t"
           "rhs\tgap\tstatus\n";
    char buf[192];
    std::map<std::string, std::pair<int, int>> per_family;
    for (const auto& rec : report.records) {
        const char* status = rec.verdict.status == IneqStatus::pass
                                 ? "pass"
                                 : rec.verdict.status == IneqStatus::violation
                                       ? "violation"
                                       : "unevaluated";
        std::snprintf(buf, sizeof buf,
                      "%s\t%.10g\t%.10g\t%s\t%s\t%.10g\t%.10g\t%.10g\t%.10g\t%s",
                      family_name(rec.ineq.family), rec.ineq.strike_i,
                      rec.ineq.strike_j, rec.ineq.quote_date.to_string().c_str(),
                      rec.ineq.expiry.to_string().c_str(), rec.ineq.span_years,
                      rec.verdict.lhs, rec.verdict.rhs, rec.verdict.gap, status);
        out << buf;
        if (!rec.verdict.reason.empty()) out << '\t' << rec.verdict.reason;
        out << '\n';
        auto& f = per_family[family_name(rec.ineq.family)];
        ++f.first;
        if (rec.verdict.status == IneqStatus::violation) ++f.second;
    }
    out << "summary\ttotal\t" << report.total << "\tpasses\t" << report.passes
        << "\tviolations\t" << report.violations.size() << '\n';
    for (const auto& [name, counts] : per_family)
        out << "family\t" << name << "\ttotal\t" << counts.first
            << "\tviolations\t" << counts.second << '\n';
    out << "flagged_short_dated\t" << report.flagged_short_dated.size() << '\n';
    out << "flagged_monotonicity\t" << report.flagged_monotonicity.size() << '\n';
    for (const auto& f : report.flagged_monotonicity) {
        std::snprintf(buf, sizeof buf,
                      "monotonicity\t%c\t%s\t%s\t%s\t%.10g\t%.10g\t%.10g\t%.10g\n",
                      f.option_type, side_name(f.side),
                      f.quote_date.to_string().c_str(),
                      f.expiry.to_string().c_str(), f.strike_lo, f.price_lo,
                      f.strike_hi, f.price_hi);
        out << buf;
    }
    out << "daycount\tACT/365\n";
    for (const auto& n : report.notes) out << "note\t" << n << '\n';
    return out.str();
}

std::vector<QuoteRecord> synthesize_quotes(const Driver& driver,
                                           const ChainSpec& chain,
                                           const SolverConfig& cfg) {
    if (chain.strikes.empty() || chain.expiries_years.empty())
        throw std::invalid_argument("synthesize_quotes: empty strikes or expiries");
    if (!(chain.s0 > 0.0) || !(chain.sigma > 0.0))
        throw std::invalid_argument("synthesize_quotes: requires s0, sigma > 0");
    if (chain.steps < 1)
        throw std::invalid_argument("synthesize_quotes: steps must be >= 1");
    std::vector<QuoteRecord> out;
    for (double T : chain.expiries_years) {
        if (!(T > 0.0))
            throw std::invalid_argument("synthesize_quotes: expiries must be positive");
        const int n = std::max(chain.steps,
                               min_steps_for(driver.mu, 0.0, T, cfg.courant_cap));
        const LatticeModel model =
            make_lattice(build_time_grid(0.0, T, n), 1, {chain.s0},
                         {chain.sigma}, {chain.drift});
        const Date expiry =
            Date::from_serial(chain.quote_date.serial() +
                              static_cast<long>(std::lround(T * 365.0)));
        for (double k : chain.strikes) {
            for (char type : {'C', 'P'}) {
                const Payoff longp =
                    type == 'C' ? make_call(k, T) : make_put(k, T);
                const double ask =
                    solve_bsde(model, driver, longp, cfg).root_price;
                QuoteRecord q;
                q.quote_date = chain.quote_date;
                q.expiry = expiry;
                q.underlying_price = chain.s0;
                q.strike = k;
                q.option_type = type;
                if (!chain.bid_ask) {
                    q.side = QuoteSide::trade;
                    q.price = ask;
                    out.push_back(q);
                } else {
                    const Payoff shortp = type == 'C' ? make_short_call(k, T)
                                                      : make_short_put(k, T);
                    const double bid =
                        -solve_bsde(model, driver, shortp, cfg).root_price;
                    q.side = QuoteSide::ask;
                    q.price = ask;
                    out.push_back(q);
                    q.side = QuoteSide::bid;
                    q.price = bid;
                    out.push_back(q);
                }
            }
        }
    }
    return out;
}

} // namespace gexp
