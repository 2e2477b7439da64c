#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "rsma/channel.hpp"
#include "rsma/gmi.hpp"
#include "rsma/optimize.hpp"
#include "rsma/rates.hpp"

namespace rsma {

// Experiment description, one file per sweep. Text format:
//
//   [experiment]
//   snr_db = -5, 0, 5        # required
//   master_seed = 42         # required
//   ...
//
// Sections are [experiment], [channel], [gmi], [barrier]. '#' starts a
// comment line. Keys are single-valued; setting one twice is an error, as is
// any key or section the schema does not know.
struct ExperimentConfig {
    // [experiment]
    int n_t = 2;
    int users = 2;
    int delta_complexity = 16;
    std::vector<double> snr_db;                 // required
    int realizations = 20;
    std::vector<Scheme> schemes{Scheme::cs};
    Objective objective = Objective::sum_rate;
    std::uint64_t master_seed = 0;              // required
    int restarts = 3;
    std::vector<std::string> modes;             // empty = full catalog ("all")
    // [channel]
    double theta = 1.0471975511965976;          // pi/3
    double delta_spread = 0.17453292519943295;  // pi/18
    CovarianceVariant covariance_variant = CovarianceVariant::standard;
    int quadrature_points = 32768;
    // [gmi]
    int mc_samples = 2000;
    RateMethod final_method = RateMethod::exact;
    SGrouping s_grouping = SGrouping::consistent;
    bool emit_timings = false;
    // [barrier]
    BarrierConfig barrier;

    bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

inline std::string cfg_trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] inline void cfg_fail(int line, const std::string& what) {
    throw std::runtime_error("config line " + std::to_string(line) + ": " + what);
}

inline double cfg_double(const std::string& v, int line) {
    double out = 0.0;
    const char* b = v.data();
    const char* e = b + v.size();
    auto [p, ec] = std::from_chars(b, e, out, std::chars_format::general);
    if (ec != std::errc() || p != e) cfg_fail(line, "not a number: '" + v + "'");
    return out;
}

inline long long cfg_int(const std::string& v, int line) {
    long long out = 0;
    const char* b = v.data();
    const char* e = b + v.size();
    auto [p, ec] = std::from_chars(b, e, out);
    if (ec != std::errc() || p != e) cfg_fail(line, "not an integer: '" + v + "'");
    return out;
}

inline std::uint64_t cfg_u64(const std::string& v, int line) {
    std::uint64_t out = 0;
    const char* b = v.data();
    const char* e = b + v.size();
    auto [p, ec] = std::from_chars(b, e, out);
    if (ec != std::errc() || p != e)
        cfg_fail(line, "not an unsigned integer: '" + v + "'");
    return out;
}

inline bool cfg_bool(const std::string& v, int line) {
    if (v == "true") return true;
    if (v == "false") return false;
    cfg_fail(line, "expected true or false, got '" + v + "'");
}

inline std::vector<std::string> cfg_list(const std::string& v, int line) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(v);
    while (std::getline(ss, cur, ',')) {
        cur = cfg_trim(cur);
        if (cur.empty()) cfg_fail(line, "empty list element");
        out.push_back(cur);
    }
    if (out.empty()) cfg_fail(line, "empty list");
    return out;
}

inline std::string fmt_double(double x) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    (void)ec;
    return std::string(buf, p);
}

} // namespace detail

inline ExperimentConfig parse_config(const std::string& text) {
    using detail::cfg_fail;
    ExperimentConfig cfg;
    std::map<std::string, int> seen; // "section.key" -> first line
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    bool have_snr = false, have_seed = false;
    while (std::getline(in, raw)) {
        ++line;
        // '#' never appears in a value, so everything after one is a comment
        if (const auto hash = raw.find('#'); hash != std::string::npos)
            raw.erase(hash);
        std::string s = detail::cfg_trim(raw);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') cfg_fail(line, "unterminated section header");
            section = s.substr(1, s.size() - 2);
            if (section != "experiment" && section != "channel" && section != "gmi" &&
                section != "barrier")
                cfg_fail(line, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) cfg_fail(line, "expected key = value");
        if (section.empty()) cfg_fail(line, "key outside any section");
        const std::string key = detail::cfg_trim(s.substr(0, eq));
        const std::string val = detail::cfg_trim(s.substr(eq + 1));
        if (key.empty()) cfg_fail(line, "empty key");
        if (val.empty()) cfg_fail(line, "empty value for '" + key + "'");
        const std::string qual = section + "." + key;
        if (auto it = seen.find(qual); it != seen.end())
            cfg_fail(line, "duplicate key '" + key + "' in [" + section +
                               "] (first set at line " + std::to_string(it->second) +
                               ")");
        seen[qual] = line;

        auto unknown = [&]() {
            cfg_fail(line, "unknown key '" + key + "' in [" + section + "]");
        };
        try {
            if (section == "experiment") {
                if (key == "n_t")
                    cfg.n_t = int(detail::cfg_int(val, line));
                else if (key == "users")
                    cfg.users = int(detail::cfg_int(val, line));
                else if (key == "delta_complexity")
                    cfg.delta_complexity = int(detail::cfg_int(val, line));
                else if (key == "snr_db") {
                    cfg.snr_db.clear();
                    for (const auto& e : detail::cfg_list(val, line))
                        cfg.snr_db.push_back(detail::cfg_double(e, line));
                    have_snr = true;
                } else if (key == "realizations")
                    cfg.realizations = int(detail::cfg_int(val, line));
                else if (key == "schemes") {
                    cfg.schemes.clear();
                    for (const auto& e : detail::cfg_list(val, line))
                        cfg.schemes.push_back(parse_scheme(e));
                } else if (key == "objective")
                    cfg.objective = parse_objective(val);
                else if (key == "master_seed") {
                    cfg.master_seed = detail::cfg_u64(val, line);
                    have_seed = true;
                } else if (key == "restarts")
                    cfg.restarts = int(detail::cfg_int(val, line));
                else if (key == "modes") {
                    cfg.modes.clear();
                    if (val != "all") {
                        for (const auto& e : detail::cfg_list(val, line)) {
                            parse_mode_name(e); // validates
                            cfg.modes.push_back(e);
                        }
                    }
                } else
                    unknown();
            } else if (section == "channel") {
                if (key == "theta")
                    cfg.theta = detail::cfg_double(val, line);
                else if (key == "delta_spread")
                    cfg.delta_spread = detail::cfg_double(val, line);
                else if (key == "covariance_variant") {
                    if (val == "standard")
                        cfg.covariance_variant = CovarianceVariant::standard;
                    else if (val == "printed")
                        cfg.covariance_variant = CovarianceVariant::printed;
                    else
                        cfg_fail(line, "unknown covariance variant '" + val + "'");
                } else if (key == "quadrature_points")
                    cfg.quadrature_points = int(detail::cfg_int(val, line));
                else
                    unknown();
            } else if (section == "gmi") {
                if (key == "mc_samples")
                    cfg.mc_samples = int(detail::cfg_int(val, line));
                else if (key == "final_method") {
                    if (val == "exact")
                        cfg.final_method = RateMethod::exact;
                    else if (val == "approx")
                        cfg.final_method = RateMethod::approx;
                    else
                        cfg_fail(line, "unknown rate method '" + val + "'");
                } else if (key == "s_grouping") {
                    if (val == "consistent")
                        cfg.s_grouping = SGrouping::consistent;
                    else if (val == "printed")
                        cfg.s_grouping = SGrouping::printed;
                    else
                        cfg_fail(line, "unknown s grouping '" + val + "'");
                } else if (key == "emit_timings")
                    cfg.emit_timings = detail::cfg_bool(val, line);
                else
                    unknown();
            } else { // barrier
                if (key == "tau0")
                    cfg.barrier.tau0 = detail::cfg_double(val, line);
                else if (key == "beta")
                    cfg.barrier.beta = detail::cfg_double(val, line);
                else if (key == "tau_max")
                    cfg.barrier.tau_max = detail::cfg_double(val, line);
                else if (key == "eps")
                    cfg.barrier.eps = detail::cfg_double(val, line);
                else if (key == "v_max")
                    cfg.barrier.v_max = int(detail::cfg_int(val, line));
                else if (key == "armijo_c")
                    cfg.barrier.armijo_c = detail::cfg_double(val, line);
                else if (key == "armijo_shrink")
                    cfg.barrier.armijo_shrink = detail::cfg_double(val, line);
                else if (key == "gamma")
                    cfg.barrier.gamma = detail::cfg_double(val, line);
                else
                    unknown();
            }
        } catch (const std::invalid_argument& ex) {
            cfg_fail(line, ex.what());
        }
    }
    if (!have_snr) throw std::runtime_error("config: required key snr_db missing");
    if (!have_seed)
        throw std::runtime_error("config: required key master_seed missing");
    if (cfg.n_t < 1) throw std::runtime_error("config: n_t must be >= 1");
    if (cfg.users < 1) throw std::runtime_error("config: users must be >= 1");
    if (cfg.realizations < 1)
        throw std::runtime_error("config: realizations must be >= 1");
    if (cfg.restarts < 1) throw std::runtime_error("config: restarts must be >= 1");
    if (cfg.mc_samples < 2) throw std::runtime_error("config: mc_samples must be >= 2");
    if (cfg.quadrature_points < 1)
        throw std::runtime_error("config: quadrature_points must be >= 1");
    if (cfg.schemes.empty()) throw std::runtime_error("config: schemes is empty");
    try {
        modes_for_complexity(cfg.delta_complexity); // validates the budget
    } catch (const std::invalid_argument& ex) {
        throw std::runtime_error(std::string("config: delta_complexity: ") + ex.what());
    }
    for (const auto& m : cfg.modes)
        if (!mode_feasible(parse_mode_name(m), cfg.delta_complexity))
            throw std::runtime_error("config: mode " + m +
                                     " exceeds delta_complexity");
    return cfg;
}

inline ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

// Canonical text form; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const ExperimentConfig& c) {
    using detail::fmt_double;
    std::ostringstream o;
    o << "[experiment]\n";
    o << "n_t = " << c.n_t << "\n";
    o << "users = " << c.users << "\n";
    o << "delta_complexity = " << c.delta_complexity << "\n";
    o << "snr_db = ";
    for (std::size_t i = 0; i < c.snr_db.size(); ++i)
        o << (i ? ", " : "") << fmt_double(c.snr_db[i]);
    o << "\n";
    o << "realizations = " << c.realizations << "\n";
    o << "schemes = ";
    for (std::size_t i = 0; i < c.schemes.size(); ++i)
        o << (i ? ", " : "") << scheme_name(c.schemes[i]);
    o << "\n";
    o << "objective = " << objective_name(c.objective) << "\n";
    o << "master_seed = " << c.master_seed << "\n";
    o << "restarts = " << c.restarts << "\n";
    o << "modes = ";
    if (c.modes.empty())
        o << "all";
    else
        for (std::size_t i = 0; i < c.modes.size(); ++i)
            o << (i ? ", " : "") << c.modes[i];
    o << "\n\n";
    o << "[channel]\n";
    o << "theta = " << fmt_double(c.theta) << "\n";
    o << "delta_spread = " << fmt_double(c.delta_spread) << "\n";
    o << "covariance_variant = "
      << (c.covariance_variant == CovarianceVariant::standard ? "standard"
                                                              : "printed")
      << "\n";
    o << "quadrature_points = " << c.quadrature_points << "\n\n";
    o << "[gmi]\n";
    o << "mc_samples = " << c.mc_samples << "\n";
    o << "final_method = "
      << (c.final_method == RateMethod::exact ? "exact" : "approx") << "\n";
    o << "s_grouping = "
      << (c.s_grouping == SGrouping::consistent ? "consistent" : "printed") << "\n";
    o << "emit_timings = " << (c.emit_timings ? "true" : "false") << "\n\n";
    o << "[barrier]\n";
    o << "tau0 = " << fmt_double(c.barrier.tau0) << "\n";
    o << "beta = " << fmt_double(c.barrier.beta) << "\n";
    o << "tau_max = " << fmt_double(c.barrier.tau_max) << "\n";
    o << "eps = " << fmt_double(c.barrier.eps) << "\n";
    o << "v_max = " << c.barrier.v_max << "\n";
    o << "armijo_c = " << fmt_double(c.barrier.armijo_c) << "\n";
    o << "armijo_shrink = " << fmt_double(c.barrier.armijo_shrink) << "\n";
    o << "gamma = " << fmt_double(c.barrier.gamma) << "\n";
    return o.str();
}

} // namespace rsma
