#include "floqpatch/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace floq::app {

std::string fnv1a_hex(const std::string& bytes)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

[[noreturn]] void cfg_fail(const std::string& origin, int line, const std::string& msg)
{
    fail(ErrorCode::parse, origin + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s)
{
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else cur += c;
    }
    if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
    return out;
}

double parse_double(const std::string& origin, int line, const std::string& s)
{
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) cfg_fail(origin, line, "trailing characters in number '" + s + "'");
        return v;
    } catch (const Error&) {
        throw;
    } catch (...) {
        cfg_fail(origin, line, "expected a number, got '" + s + "'");
    }
}

std::vector<double> parse_double_list(const std::string& origin, int line, const std::string& s)
{
    std::vector<double> out;
    for (const auto& item : split_list(s)) {
        if (item.empty()) cfg_fail(origin, line, "empty element in list");
        out.push_back(parse_double(origin, line, item));
    }
    if (out.empty()) cfg_fail(origin, line, "empty list");
    return out;
}

std::string unquote(const std::string& origin, int line, const std::string& s)
{
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    cfg_fail(origin, line, "expressions must be double-quoted");
}

} // namespace

AnalysisConfig parse_config_text(const std::string& text, const std::string& origin)
{
    AnalysisConfig cfg;
    cfg.source_text = text;
    cfg.hash = fnv1a_hex(text);

    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line = 0;
    std::vector<double> e_entries;
    bool has_cycle = false;

    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        // strip comments outside quotes
        bool inq = false;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '"') inq = !inq;
            else if (s[i] == '#' && !inq) {
                s = s.substr(0, i);
                break;
            }
        }
        s = trim(s);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') cfg_fail(origin, line, "unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            if (section != "model" && section != "patch" && section != "cycle" && section != "analysis")
                cfg_fail(origin, line, "unknown section [" + section + "]");
            if (section == "model") cfg.has_model = true;
            if (section == "patch") cfg.has_patch = true;
            if (section == "cycle") has_cycle = true;
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string::npos) cfg_fail(origin, line, "expected key = value");
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        if (key.empty()) cfg_fail(origin, line, "empty key");
        if (val.empty()) cfg_fail(origin, line, "empty value for '" + key + "'");
        if (section.empty()) cfg_fail(origin, line, "key '" + key + "' outside any [section]");

        if (section == "model") {
            if (key == "builtin") cfg.model.builtin = val;
            else if (key == "vars") {
                for (auto& v : split_list(val)) {
                    if (v.empty()) cfg_fail(origin, line, "empty variable name");
                    cfg.model.vars.push_back(v);
                }
            } else if (key == "params") {
                for (auto& item : split_list(val)) {
                    auto e2 = item.find('=');
                    if (e2 == std::string::npos)
                        cfg_fail(origin, line, "params entries must be name = value");
                    cfg.model.params.emplace_back(trim(item.substr(0, e2)),
                                                  parse_double(origin, line, trim(item.substr(e2 + 1))));
                }
            } else if (key.size() > 1 && key[0] == 'd' && !cfg.model.vars.empty() &&
                       std::find(cfg.model.vars.begin(), cfg.model.vars.end(), key.substr(1)) !=
                           cfg.model.vars.end()) {
                cfg.model.equations[key.substr(1)] = unquote(origin, line, val);
            } else if (!cfg.model.builtin.empty()) {
                // builtin models take their parameters as plain keys
                cfg.model.params.emplace_back(key, parse_double(origin, line, val));
            } else {
                cfg_fail(origin, line, "unknown key '" + key + "' in [model]");
            }
        } else if (section == "patch") {
            if (key == "n") {
                double v = parse_double(origin, line, val);
                if (v < 2 || v != std::floor(v)) cfg_fail(origin, line, "n must be an integer >= 2");
                cfg.patch.n = static_cast<int>(v);
            } else if (key == "delta" || key == "deltas") {
                cfg.patch.deltas = parse_double_list(origin, line, val);
                for (double d : cfg.patch.deltas)
                    if (d < 0) cfg_fail(origin, line, "delta must be >= 0");
            } else if (key == "E") {
                e_entries = parse_double_list(origin, line, val);
            } else cfg_fail(origin, line, "unknown key '" + key + "' in [patch]");
        } else if (section == "cycle") {
            if (key == "seed") cfg.cycle.seed = parse_double_list(origin, line, val);
            else if (key == "burn_in") cfg.cycle.burn_in = parse_double(origin, line, val);
            else if (key == "scan_time") cfg.cycle.scan_time = parse_double(origin, line, val);
            else if (key == "max_return_time") cfg.cycle.max_return_time = parse_double(origin, line, val);
            else if (key == "rtol") cfg.cycle.rtol = parse_double(origin, line, val);
            else if (key == "atol") cfg.cycle.atol = parse_double(origin, line, val);
            else if (key == "section_index") cfg.cycle.section_index = static_cast<int>(parse_double(origin, line, val));
            else if (key == "section_level") cfg.cycle.section_level = parse_double(origin, line, val);
            else cfg_fail(origin, line, "unknown key '" + key + "' in [cycle]");
        } else if (section == "analysis") {
            if (key == "probes") cfg.probes = parse_double_list(origin, line, val);
            else if (key == "fd_eps") cfg.fd_eps = parse_double_list(origin, line, val);
            else if (key == "lle_burn_in") cfg.lle_burn_in = parse_double(origin, line, val);
            else if (key == "lle_horizon") cfg.lle_horizon = parse_double(origin, line, val);
            else if (key == "lle_delta") cfg.lle_delta = parse_double(origin, line, val);
            else if (key == "urabe_samples") cfg.urabe_samples = static_cast<int>(parse_double(origin, line, val));
            else if (key == "alpha") cfg.alpha = val;
            else if (key == "k") cfg.hopf_k = static_cast<int>(parse_double(origin, line, val));
            else if (key == "k1") cfg.hopf_k1 = static_cast<int>(parse_double(origin, line, val));
            else cfg_fail(origin, line, "unknown key '" + key + "' in [analysis]");
        }
    }

    if (!cfg.has_model) fail(ErrorCode::parse, origin + ": missing [model] section");

    if (cfg.model.builtin.empty()) {
        if (cfg.model.vars.empty())
            fail(ErrorCode::parse, origin + ": [model] needs either builtin = ... or vars/d<var> keys");
        for (const auto& v : cfg.model.vars)
            if (!cfg.model.equations.count(v))
                fail(ErrorCode::parse, origin + ": missing equation d" + v + " in [model]");
    }

    if (cfg.has_patch) {
        if (cfg.patch.deltas.empty()) cfg.patch.deltas = {0.01};
        int m = cfg.model.builtin.empty() ? static_cast<int>(cfg.model.vars.size()) : 2;
        if (e_entries.empty()) {
            cfg.patch.E = Eigen::MatrixXd::Identity(m, m);
        } else {
            if (static_cast<int>(e_entries.size()) != m * m)
                fail(ErrorCode::parse, origin + ": E needs " + std::to_string(m * m) +
                                           " entries (row-major), got " +
                                           std::to_string(e_entries.size()));
            cfg.patch.E.resize(m, m);
            for (int r = 0; r < m; ++r)
                for (int c = 0; c < m; ++c) cfg.patch.E(r, c) = e_entries[static_cast<std::size_t>(r * m + c)];
        }
    }
    (void)has_cycle;
    return cfg;
}

AnalysisConfig parse_config_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

} // namespace floq::app
