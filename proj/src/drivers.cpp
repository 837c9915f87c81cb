#include "gexp/drivers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace gexp {

double CoefficientSchedule::at(double t) const {
    if (table.empty())
        throw std::invalid_argument("CoefficientSchedule: empty table");
    double v = table.front().second;
    for (const auto& [start, value] : table) {
        if (start > t) break;
        v = value;
    }
    return v;
}

namespace {

void check_dim(int dim_z) {
    if (dim_z < 1 || dim_z > max_dim)
        throw std::invalid_argument("driver: dim_z out of range 1.." +
                                    std::to_string(max_dim));
}

void check_schedule(const CoefficientSchedule& s, const std::string& name) {
    if (s.table.empty())
        throw std::invalid_argument("driver: empty schedule for " + name);
    for (std::size_t i = 0; i < s.table.size(); ++i) {
        if (!std::isfinite(s.table[i].first) || !std::isfinite(s.table[i].second))
            throw std::invalid_argument("driver: non-finite schedule entry for " + name);
        if (i > 0 && s.table[i].first <= s.table[i - 1].first)
            throw std::invalid_argument("driver: schedule times for " + name +
                                        " must be strictly increasing");
    }
}

// All start times appearing in any of the schedules; the coefficient vector
// is constant between consecutive ones, so per-segment bounds are exact.
std::vector<double> breakpoints(std::initializer_list<const CoefficientSchedule*> list) {
    std::set<double> ts;
    for (const auto* s : list)
        for (const auto& [start, value] : s->table) ts.insert(start);
    return {ts.begin(), ts.end()};
}

} // namespace

Driver make_gmu(double mu, int dim_z) {
    if (!(mu > 0.0) || !std::isfinite(mu))
        throw std::invalid_argument("make_gmu: mu must be positive and finite");
    check_dim(dim_z);
    Driver drv;
    drv.name = "gmu";
    drv.dim_z = dim_z;
    drv.mu = mu;
    drv.depends_on_y = true;
    drv.parameters = {{"mu", mu}};
    drv.eval = [mu](double, double y, const double* z, int d) {
        double s = std::abs(y);
        for (int k = 0; k < d; ++k) s += std::abs(z[k]);
        return mu * s;
    };
    drv.traits.zero_at_origin = true;
    drv.traits.zero_for_zero_z = false;
    drv.traits.shape = DriverTraits::Shape::convex;
    drv.traits.positively_homogeneous = true;
    drv.traits.subadditive = true;
    return drv;
}

Driver make_black_scholes(const CoefficientSchedule& r,
                          const CoefficientSchedule& b,
                          const CoefficientSchedule& sigma) {
    check_schedule(r, "r");
    check_schedule(b, "b");
    check_schedule(sigma, "sigma");
    for (const auto& [start, value] : sigma.table)
        if (value == 0.0)
            throw std::invalid_argument("make_black_scholes: sigma must be nonzero");
    Driver drv;
    drv.name = "black_scholes";
    drv.dim_z = 1;
    double mu = 0.0;
    bool any_r = false;
    for (double t : breakpoints({&r, &b, &sigma})) {
        const double rv = r.at(t), bv = b.at(t), sv = sigma.at(t);
        mu = std::max(mu, std::abs(rv) + std::abs(bv - rv) / std::abs(sv));
        if (rv != 0.0) any_r = true;
    }
    drv.mu = mu;
    drv.depends_on_y = any_r;
    drv.parameters = {{"r", r.at(0.0)}, {"b", b.at(0.0)}, {"sigma", sigma.at(0.0)}};
    drv.eval = [r, b, sigma](double t, double y, const double* z, int) {
        const double rv = r.at(t);
        return -rv * y - (b.at(t) - rv) * z[0] / sigma.at(t);
    };
    drv.traits.zero_at_origin = true;
    drv.traits.zero_for_zero_z = !any_r;
    drv.traits.shape = DriverTraits::Shape::linear;
    drv.traits.positively_homogeneous = true;
    drv.traits.subadditive = true;
    return drv;
}

Driver make_black_scholes(double r, double b, double sigma) {
    return make_black_scholes(CoefficientSchedule::constant(r),
                              CoefficientSchedule::constant(b),
                              CoefficientSchedule::constant(sigma));
}

Driver make_borrowing(double r, double R, double b, double sigma) {
    if (!std::isfinite(r) || !std::isfinite(R) || !std::isfinite(b) ||
        !std::isfinite(sigma))
        throw std::invalid_argument("make_borrowing: non-finite parameter");
    if (!(R > r))
        throw std::invalid_argument("make_borrowing: requires R > r");
    if (sigma == 0.0)
        throw std::invalid_argument("make_borrowing: sigma must be nonzero");
    Driver drv;
    drv.name = "borrowing";
    drv.dim_z = 1;
    drv.mu = std::abs(r) + std::abs(b - r) / std::abs(sigma) +
             (R - r) * (1.0 + 1.0 / std::abs(sigma));
    drv.depends_on_y = true;
    drv.parameters = {{"r", r}, {"R", R}, {"b", b}, {"sigma", sigma}};
    drv.eval = [r, R, b, sigma](double, double y, const double* z, int) {
        const double base = -r * y - (b - r) * z[0] / sigma;
        const double short_cash = std::max(z[0] / sigma - y, 0.0);
        return base + (R - r) * short_cash;
    };
    drv.traits.zero_at_origin = true;
    drv.traits.zero_for_zero_z = false;
    drv.traits.shape = DriverTraits::Shape::convex;
    drv.traits.positively_homogeneous = true;
    drv.traits.subadditive = true;
    return drv;
}

Driver make_short_premium(double r, double b, double sigma, double k) {
    if (!std::isfinite(r) || !std::isfinite(b) || !std::isfinite(sigma) ||
        !std::isfinite(k))
        throw std::invalid_argument("make_short_premium: non-finite parameter");
    if (k < 0.0)
        throw std::invalid_argument("make_short_premium: requires k >= 0");
    if (sigma == 0.0)
        throw std::invalid_argument("make_short_premium: sigma must be nonzero");
    Driver drv;
    drv.name = "short_premium";
    drv.dim_z = 1;
    drv.mu = std::abs(r) + std::abs(b - r) / std::abs(sigma) + k;
    drv.depends_on_y = r != 0.0;
    drv.parameters = {{"r", r}, {"b", b}, {"sigma", sigma}, {"k", k}};
    drv.eval = [r, b, sigma, k](double, double y, const double* z, int) {
        return -r * y - (b - r) * z[0] / sigma + k * std::max(-z[0], 0.0);
    };
    drv.traits.zero_at_origin = true;
    drv.traits.zero_for_zero_z = r == 0.0;
    drv.traits.shape = DriverTraits::Shape::convex;
    drv.traits.positively_homogeneous = true;
    drv.traits.subadditive = true;
    return drv;
}

Driver make_zero(int dim_z) {
    check_dim(dim_z);
    Driver drv;
    drv.name = "zero";
    drv.dim_z = dim_z;
    drv.mu = 0.0;
    drv.depends_on_y = false;
    drv.eval = [](double, double, const double*, int) { return 0.0; };
    drv.traits.zero_at_origin = true;
    drv.traits.zero_for_zero_z = true;
    drv.traits.shape = DriverTraits::Shape::linear;
    drv.traits.positively_homogeneous = true;
    drv.traits.subadditive = true;
    return drv;
}

Driver make_constant_driver(double c, int dim_z) {
    if (!std::isfinite(c))
        throw std::invalid_argument("make_constant_driver: non-finite parameter");
    check_dim(dim_z);
    Driver drv;
    drv.name = "constant";
    drv.dim_z = dim_z;
    drv.mu = 0.0;
    drv.depends_on_y = false;
    drv.parameters = {{"c", c}};
    drv.eval = [c](double, double, const double*, int) { return c; };
    drv.traits.zero_at_origin = c == 0.0;
    drv.traits.zero_for_zero_z = c == 0.0;
    drv.traits.shape = DriverTraits::Shape::linear;
    drv.traits.positively_homogeneous = c == 0.0;
    drv.traits.subadditive = c >= 0.0;
    return drv;
}

namespace {

struct Registration {
    std::set<std::string> required;
    std::set<std::string> optional;
    bool schedules_allowed = false;
    std::function<Driver(const std::map<std::string, CoefficientSchedule>&)> make;
};

double scalar(const std::map<std::string, CoefficientSchedule>& p,
              const std::string& key) {
    const auto& s = p.at(key);
    if (!s.is_constant())
        throw std::invalid_argument("driver config: parameter " + key +
                                    " does not accept a schedule");
    return s.table.front().second;
}

std::map<std::string, Registration>& registry() {
    static std::map<std::string, Registration> reg = [] {
        std::map<std::string, Registration> m;
        m["gmu"] = {{"mu"},
                    {"d"},
                    false,
                    [](const auto& p) {
                        int d = 1;
                        if (p.count("d")) {
                            const double dv = scalar(p, "d");
                            d = static_cast<int>(dv);
                            if (d != dv)
                                throw std::invalid_argument(
                                    "driver config: d must be an integer");
                        }
                        return make_gmu(scalar(p, "mu"), d);
                    }};
        m["black_scholes"] = {{"r", "b", "sigma"},
                              {},
                              true,
                              [](const auto& p) {
                                  return make_black_scholes(p.at("r"), p.at("b"),
                                                            p.at("sigma"));
                              }};
        m["borrowing"] = {{"r", "R", "b", "sigma"},
                          {},
                          false,
                          [](const auto& p) {
                              return make_borrowing(scalar(p, "r"), scalar(p, "R"),
                                                    scalar(p, "b"),
                                                    scalar(p, "sigma"));
                          }};
        m["short_premium"] = {{"r", "b", "sigma", "k"},
                              {},
                              false,
                              [](const auto& p) {
                                  return make_short_premium(
                                      scalar(p, "r"), scalar(p, "b"),
                                      scalar(p, "sigma"), scalar(p, "k"));
                              }};
        m["zero"] = {{}, {"d"}, false, [](const auto& p) {
                         return make_zero(p.count("d")
                                              ? static_cast<int>(scalar(p, "d"))
                                              : 1);
                     }};
        m["constant"] = {{"c"}, {"d"}, false, [](const auto& p) {
                             return make_constant_driver(
                                 scalar(p, "c"),
                                 p.count("d") ? static_cast<int>(scalar(p, "d"))
                                              : 1);
                         }};
        return m;
    }();
    return reg;
}

std::mutex& registry_mutex() {
    static std::mutex m;
    return m;
}

} // namespace

void register_driver(
    const std::string& name,
    std::function<Driver(const std::map<std::string, double>&)> factory) {
    if (name.empty())
        throw std::invalid_argument("register_driver: empty name");
    std::lock_guard<std::mutex> lock(registry_mutex());
    Registration reg;
    reg.schedules_allowed = false;
    reg.make = [factory](const std::map<std::string, CoefficientSchedule>& p) {
        std::map<std::string, double> flat;
        for (const auto& kv : p) flat[kv.first] = scalar(p, kv.first);
        return factory(flat);
    };
    registry()[name] = std::move(reg);
}

bool driver_registered(const std::string& name) {
    std::lock_guard<std::mutex> lock(registry_mutex());
    return registry().count(name) > 0;
}

namespace {

double parse_number(const std::string& text, const std::string& key) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(text, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("driver config: bad number '" + text +
                                    "' for " + key);
    }
    if (pos != text.size())
        throw std::invalid_argument("driver config: bad number '" + text +
                                    "' for " + key);
    if (!std::isfinite(v))
        throw std::invalid_argument("driver config: non-finite value for " + key);
    return v;
}

CoefficientSchedule parse_value(const std::string& text, const std::string& key) {
    if (text.find(':') == std::string::npos)
        return CoefficientSchedule::constant(parse_number(text, key));
    CoefficientSchedule sched;
    std::stringstream ss(text);
    std::string entry;
    while (std::getline(ss, entry, ',')) {
        const auto colon = entry.find(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == entry.size())
            throw std::invalid_argument("driver config: bad schedule entry '" +
                                        entry + "' for " + key);
        sched.table.emplace_back(parse_number(entry.substr(0, colon), key),
                                 parse_number(entry.substr(colon + 1), key));
    }
    check_schedule(sched, key);
    return sched;
}

} // namespace

Driver parse_driver_config(const std::string& text) {
    std::map<std::string, std::string> raw;
    std::stringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::stringstream words(line);
        std::string token;
        while (words >> token) {
            const auto eq = token.find('=');
            if (eq == std::string::npos || eq == 0)
                throw std::invalid_argument(
                    "driver config: expected key=value, got '" + token + "'");
            const std::string key = token.substr(0, eq);
            if (raw.count(key))
                throw std::invalid_argument("driver config: duplicate key " + key);
            raw[key] = token.substr(eq + 1);
        }
    }
    const auto name_it = raw.find("driver");
    if (name_it == raw.end())
        throw std::invalid_argument("driver config: missing driver=<name>");
    const std::string name = name_it->second;
    raw.erase(name_it);

    Registration reg;
    {
        std::lock_guard<std::mutex> lock(registry_mutex());
        const auto it = registry().find(name);
        if (it == registry().end())
            throw std::invalid_argument("driver config: unknown driver '" + name + "'");
        reg = it->second;
    }

    std::map<std::string, CoefficientSchedule> params;
    for (const auto& [key, value] : raw) {
        const bool known = reg.required.count(key) || reg.optional.count(key);
        if (!known && (reg.required.size() || reg.optional.size()))
            throw std::invalid_argument("driver config: unknown parameter '" +
                                        key + "' for driver " + name);
        params[key] = parse_value(value, key);
        if (!params[key].is_constant() && !reg.schedules_allowed)
            throw std::invalid_argument("driver config: driver " + name +
                                        " does not accept schedules");
    }
    for (const auto& key : reg.required)
        if (!params.count(key))
            throw std::invalid_argument("driver config: missing parameter " +
                                        key + " for driver " + name);
    return reg.make(params);
}

Driver load_driver_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("driver config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_driver_config(ss.str());
}

double estimate_lipschitz(const Driver& driver, const LipschitzBox& box,
                          int samples, std::uint64_t rng_seed) {
    if (samples < 1)
        throw std::invalid_argument("estimate_lipschitz: samples must be positive");
    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> uy(box.y_lo, box.y_hi);
    std::uniform_real_distribution<double> uz(box.z_lo, box.z_hi);
    std::uniform_real_distribution<double> ut(box.t_lo, box.t_hi);
    const int d = driver.dim_z;
    double best = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double t = ut(rng);
        const double y1 = uy(rng), y2 = uy(rng);
        double z1[max_dim], z2[max_dim];
        for (int k = 0; k < d; ++k) {
            z1[k] = uz(rng);
            z2[k] = uz(rng);
        }
        double denom = std::abs(y1 - y2);
        for (int k = 0; k < d; ++k) denom += std::abs(z1[k] - z2[k]);
        if (denom < 1e-12) continue;
        const double diff =
            std::abs(driver.eval(t, y1, z1, d) - driver.eval(t, y2, z2, d));
        best = std::max(best, diff / denom);
    }
    return best;
}

} // namespace gexp
