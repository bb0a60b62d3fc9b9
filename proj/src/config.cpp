#include "daestab/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace daestab {

void RunConfig::validate() const {
    solver.validate();
    cct.validate();
    if (sweep.from >= sweep.to) throw ConfigError("sweep: from must be < to");
    if (sweep.steps < 2) throw ConfigError("sweep: steps must be >= 2");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (portrait.x1_steps < 0 || portrait.x2_steps < 0 || portrait.trace_points < 2)
        throw ConfigError("portrait: invalid grid or trace settings");
}

RunConfig default_config(const std::string& system_id) {
    const SystemCatalogEntry& entry = find_system(system_id);
    RunConfig cfg;
    cfg.system_id = system_id;
    cfg.params = entry.defaults;
    cfg.cct.bracket_low = entry.bracket_low;
    cfg.cct.bracket_high = entry.bracket_high;
    cfg.solver.t_max = 50.0;
    cfg.portrait.trace_min = entry.trace_scan_min;
    cfg.portrait.trace_max = entry.trace_scan_max;
    return cfg;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double out;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("key " + key + ": not a number: " + v);
    }
    if (pos != v.size()) throw ConfigError("key " + key + ": trailing junk: " + v);
    return out;
}

int to_int(const std::string& key, const std::string& v) {
    const double d = to_double(key, v);
    if (d != std::floor(d)) throw ConfigError("key " + key + ": expected an integer: " + v);
    return static_cast<int>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key " + key + ": expected a boolean: " + v);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    // First pass: pull the system id so parameter defaults exist before
    // overrides are applied.
    std::string section;
    std::string system_id;
    std::istringstream scan(text);
    std::string line;
    while (std::getline(scan, line)) {
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            section = line;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value: " + line);
        if (section == "[scenario]" && trim(line.substr(0, eq)) == "system")
            system_id = trim(line.substr(eq + 1));
    }
    if (system_id.empty()) throw ConfigError("[scenario] system is required");

    RunConfig cfg = default_config(system_id);
    section.clear();
    std::istringstream in(text);
    while (std::getline(in, line)) {
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("bad section header: " + line);
            section = line;
            if (section != "[scenario]" && section != "[params]" && section != "[solver]" &&
                section != "[cct]" && section != "[sweep]" && section != "[oracle]" &&
                section != "[portrait]" && section != "[output]")
                throw ConfigError("unknown section " + section);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));

        if (section == "[scenario]") {
            if (key == "system") continue;  // consumed by the first pass
            throw ConfigError("unknown [scenario] key: " + key);
        } else if (section == "[params]") {
            if (key == "active")
                cfg.params.set_active(val);
            else if (cfg.params.has(key))
                cfg.params.set(key, to_double(key, val));
            else
                throw ConfigError("system " + system_id + " has no parameter " + key);
        } else if (section == "[solver]") {
            if (key == "dt") cfg.solver.dt = to_double(key, val);
            else if (key == "newton_tol") cfg.solver.newton_tol = to_double(key, val);
            else if (key == "newton_max_iter") cfg.solver.newton_max_iter = to_int(key, val);
            else if (key == "delta_floor") cfg.solver.delta_floor = to_double(key, val);
            else if (key == "t_max") cfg.solver.t_max = to_double(key, val);
            else if (key == "shadow_stride") cfg.solver.shadow_stride = to_int(key, val);
            else throw ConfigError("unknown [solver] key: " + key);
        } else if (section == "[cct]") {
            if (key == "bracket_low") cfg.cct.bracket_low = to_double(key, val);
            else if (key == "bracket_high") cfg.cct.bracket_high = to_double(key, val);
            else if (key == "cct_tol") cfg.cct.cct_tol = to_double(key, val);
            else if (key == "eps_sep") cfg.cct.eps_sep = to_double(key, val);
            else if (key == "sep_dwell") cfg.cct.sep_dwell = to_double(key, val);
            else if (key == "eps_uep") cfg.cct.eps_uep = to_double(key, val);
            else if (key == "eps_kappa") cfg.cct.eps_kappa = to_double(key, val);
            else if (key == "trunc_fraction") cfg.cct.trunc_fraction = to_double(key, val);
            else throw ConfigError("unknown [cct] key: " + key);
        } else if (section == "[sweep]") {
            if (key == "from") cfg.sweep.from = to_double(key, val);
            else if (key == "to") cfg.sweep.to = to_double(key, val);
            else if (key == "steps") cfg.sweep.steps = to_int(key, val);
            else throw ConfigError("unknown [sweep] key: " + key);
        } else if (section == "[oracle]") {
            if (key == "fd_delta") cfg.oracle.fd_delta = to_double(key, val);
            else if (key == "cct_tol") cfg.oracle.cct_tol = to_double(key, val);
            else throw ConfigError("unknown [oracle] key: " + key);
        } else if (section == "[portrait]") {
            if (key == "x1_min") cfg.portrait.x1_min = to_double(key, val);
            else if (key == "x1_max") cfg.portrait.x1_max = to_double(key, val);
            else if (key == "x2_min") cfg.portrait.x2_min = to_double(key, val);
            else if (key == "x2_max") cfg.portrait.x2_max = to_double(key, val);
            else if (key == "x1_steps") cfg.portrait.x1_steps = to_int(key, val);
            else if (key == "x2_steps") cfg.portrait.x2_steps = to_int(key, val);
            else if (key == "traj_t") cfg.portrait.traj_t = to_double(key, val);
            else if (key == "trace_points") cfg.portrait.trace_points = to_int(key, val);
            else if (key == "trace_min") cfg.portrait.trace_min = to_double(key, val);
            else if (key == "trace_max") cfg.portrait.trace_max = to_double(key, val);
            else if (key == "with_critical") cfg.portrait.with_critical = to_bool(key, val);
            else throw ConfigError("unknown [portrait] key: " + key);
        } else if (section == "[output]") {
            if (key == "dir") cfg.out_dir = val;
            else if (key == "workers") cfg.workers = to_int(key, val);
            else throw ConfigError("unknown [output] key: " + key);
        } else {
            throw ConfigError("key outside any section: " + key);
        }
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace daestab
