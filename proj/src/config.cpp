#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fermips/io.hpp"

namespace fermips {

namespace {

const std::vector<std::string> kValidKeys = {
    "task",           "model.kind",       "model.sites",       "model.t",
    "model.u",        "model.periodic",   "model.fcidump",     "sector.n_elec",
    "sector.twice_sz", "policy.max_bond", "policy.cutoff",     "policy.bonds",
    "dmrg.sweeps",    "evolve.dt",        "evolve.n_steps",    "evolve.method",
    "prep.tau_max",   "prep.total_time",  "prep.u_start",      "adapt.max_iters",
    "adapt.energy_tol", "adapt.grad_tol", "adapt.energy_window", "trotter.dt",
    "trotter.points", "trotter.eta",      "spectrum.gamma",    "spectrum.t_max",
    "spectrum.omega_min", "spectrum.omega_max", "spectrum.omega_step",
    "spectrum.window", "seed",            "threads",
};

std::string trim(const std::string &s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::map<std::string, std::string> parse_flat(const std::string &text) {
    std::map<std::string, std::string> kv;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        if (trim(line).empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("config line without '=': '" + line + "'");
        std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("config line with empty key");
        if (!kv.emplace(key, val).second) throw ParseError("duplicate config key '" + key + "'");
    }
    return kv;
}

long as_long(const std::string &key, const std::string &v) {
    char *end = nullptr;
    errno = 0;
    long out = std::strtol(v.c_str(), &end, 10);
    if (v.empty() || errno != 0 || !end || *end != '\0')
        throw TypeError(key + " wants an integer, got '" + v + "'");
    return out;
}

double as_double(const std::string &key, const std::string &v) {
    char *end = nullptr;
    errno = 0;
    double out = std::strtod(v.c_str(), &end);
    if (v.empty() || !end || *end != '\0' || !std::isfinite(out))
        throw TypeError(key + " wants a finite number, got '" + v + "'");
    return out;
}

bool as_bool(const std::string &key, const std::string &v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw TypeError(key + " wants a boolean, got '" + v + "'");
}

std::vector<long> as_bond_list(const std::string &key, const std::string &v) {
    std::vector<long> out;
    std::string cur;
    std::istringstream ss(v);
    while (std::getline(ss, cur, ','))
        if (!trim(cur).empty()) out.push_back(as_long(key, trim(cur)));
    return out;
}

std::string task_name(TaskKind t) {
    switch (t) {
    case TaskKind::ground_state: return "ground_state";
    case TaskKind::state_prep: return "state_prep";
    case TaskKind::adapt: return "adapt";
    case TaskKind::trotter: return "trotter";
    case TaskKind::quench: return "quench";
    }
    throw InvalidSpec("unreachable task kind");
}

} // namespace

std::string csv_num(double v) {
    char buf[64];
    for (int p = 1; p <= 17; ++p) {
        std::snprintf(buf, sizeof buf, "%.*g", p, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

RunConfig load_config(const std::string &text) {
    auto kv = parse_flat(text);
    for (auto &[key, val] : kv)
        if (std::find(kValidKeys.begin(), kValidKeys.end(), key) == kValidKeys.end()) {
            std::string valid;
            for (auto &k : kValidKeys) valid += (valid.empty() ? "" : ", ") + k;
            throw ParseError("unknown config key '" + key + "'; valid keys: " + valid);
        }
    auto get = [&](const std::string &key) -> const std::string * {
        auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };

    RunConfig c;
    auto task = get("task");
    if (!task) throw MissingKey("config needs a 'task' entry");
    if (*task == "ground_state" || *task == "ground-state") c.task = TaskKind::ground_state;
    else if (*task == "state_prep" || *task == "state-prep") c.task = TaskKind::state_prep;
    else if (*task == "adapt") c.task = TaskKind::adapt;
    else if (*task == "trotter") c.task = TaskKind::trotter;
    else if (*task == "quench") c.task = TaskKind::quench;
    else throw TypeError("task '" + *task + "' is not one of ground_state, state_prep, adapt, "
                         "trotter, quench");

    if (auto v = get("model.kind")) {
        if (*v == "hubbard") c.use_fcidump = false;
        else if (*v == "fcidump") c.use_fcidump = true;
        else throw TypeError("model.kind wants hubbard or fcidump, got '" + *v + "'");
    }
    if (auto v = get("model.sites")) c.hubbard.sites = static_cast<int>(as_long("model.sites", *v));
    if (auto v = get("model.t")) c.hubbard.t_h = as_double("model.t", *v);
    if (auto v = get("model.u")) c.hubbard.u = as_double("model.u", *v);
    if (auto v = get("model.periodic")) c.hubbard.periodic = as_bool("model.periodic", *v);
    if (auto v = get("model.fcidump")) c.fcidump_path = *v;
    if (c.use_fcidump && c.fcidump_path.empty())
        throw MissingKey("model.kind=fcidump needs model.fcidump");

    if (auto v = get("sector.n_elec")) c.n_elec = static_cast<int>(as_long("sector.n_elec", *v));
    if (auto v = get("sector.twice_sz"))
        c.twice_sz = static_cast<int>(as_long("sector.twice_sz", *v));
    if (c.n_elec < 0 && !c.use_fcidump) c.n_elec = c.hubbard.sites; // half filling
    if (!get("sector.twice_sz") && c.n_elec > 0) c.twice_sz = c.n_elec % 2;

    if (auto v = get("policy.max_bond")) c.policy.max_bond = as_long("policy.max_bond", *v);
    if (auto v = get("policy.cutoff")) c.policy.cutoff = as_double("policy.cutoff", *v);
    if (auto v = get("policy.bonds")) c.bond_series = as_bond_list("policy.bonds", *v);
    if (auto v = get("dmrg.sweeps")) c.sweeps = static_cast<int>(as_long("dmrg.sweeps", *v));

    if (auto v = get("evolve.dt")) c.evolution.dt = as_double("evolve.dt", *v);
    if (auto v = get("evolve.n_steps"))
        c.evolution.n_steps = static_cast<int>(as_long("evolve.n_steps", *v));
    if (auto v = get("evolve.method")) {
        if (*v == "rk4") c.evolution.method = EvolveMethod::rk4;
        else if (*v == "td_sweep") c.evolution.method = EvolveMethod::td_sweep;
        else throw TypeError("evolve.method wants rk4 or td_sweep, got '" + *v + "'");
    }
    c.evolution.policy = c.policy;

    if (auto v = get("prep.tau_max")) c.prep_tau_max = as_double("prep.tau_max", *v);
    if (auto v = get("prep.total_time")) c.prep_total_time = as_double("prep.total_time", *v);
    if (auto v = get("prep.u_start")) c.prep_u_start = as_double("prep.u_start", *v);

    if (auto v = get("adapt.max_iters"))
        c.adapt_stop.max_iters = static_cast<int>(as_long("adapt.max_iters", *v));
    if (auto v = get("adapt.energy_tol")) c.adapt_stop.energy_tol = as_double("adapt.energy_tol", *v);
    if (auto v = get("adapt.grad_tol")) c.adapt_stop.grad_tol = as_double("adapt.grad_tol", *v);
    if (auto v = get("adapt.energy_window"))
        c.adapt_stop.energy_window = static_cast<int>(as_long("adapt.energy_window", *v));

    if (auto v = get("trotter.dt")) c.trotter_dt = as_double("trotter.dt", *v);
    if (auto v = get("trotter.points"))
        c.trotter_points = static_cast<int>(as_long("trotter.points", *v));
    if (auto v = get("trotter.eta")) c.trotter_eta = static_cast<int>(as_long("trotter.eta", *v));

    if (auto v = get("spectrum.gamma")) c.spectrum.gamma = as_double("spectrum.gamma", *v);
    if (auto v = get("spectrum.t_max")) c.spectrum.t_max = as_double("spectrum.t_max", *v);
    if (auto v = get("spectrum.omega_min"))
        c.spectrum.omega_min = as_double("spectrum.omega_min", *v);
    if (auto v = get("spectrum.omega_max"))
        c.spectrum.omega_max = as_double("spectrum.omega_max", *v);
    if (auto v = get("spectrum.omega_step"))
        c.spectrum.omega_step = as_double("spectrum.omega_step", *v);
    if (auto v = get("spectrum.window")) {
        if (*v == "cosine") c.spectrum.window = SpectrumWindow::cosine;
        else if (*v == "none") c.spectrum.window = SpectrumWindow::none;
        else throw TypeError("spectrum.window wants cosine or none, got '" + *v + "'");
    }

    if (auto v = get("seed")) c.seed = static_cast<unsigned long>(as_long("seed", *v));
    if (auto v = get("threads")) c.threads = static_cast<int>(as_long("threads", *v));

    c.policy.validate();
    if (!c.use_fcidump) {
        c.hubbard.validate();
        if (c.n_elec > 2 * c.hubbard.sites)
            throw InvalidSpec("sector.n_elec exceeds 2 * model.sites");
    }
    if (c.n_elec >= 0 &&
        (std::abs(c.twice_sz) > c.n_elec || (c.n_elec - c.twice_sz) % 2 != 0))
        throw InvalidSpec("sector.twice_sz incompatible with sector.n_elec");
    if (c.evolution.dt <= 0 || c.evolution.n_steps < 1)
        throw InvalidSpec("evolve.dt must be positive and evolve.n_steps >= 1");
    if (c.sweeps < 1 || c.trotter_points < 1 || c.threads < 1)
        throw InvalidSpec("dmrg.sweeps, trotter.points and threads must be >= 1");
    if (c.spectrum.omega_step <= 0 || c.spectrum.omega_max < c.spectrum.omega_min)
        throw InvalidSpec("spectrum omega grid is empty");
    return c;
}

std::map<std::string, std::string> config_entries(const RunConfig &c) {
    std::map<std::string, std::string> m;
    m["task"] = task_name(c.task);
    m["model.kind"] = c.use_fcidump ? "fcidump" : "hubbard";
    m["model.sites"] = std::to_string(c.hubbard.sites);
    m["model.t"] = csv_num(c.hubbard.t_h);
    m["model.u"] = csv_num(c.hubbard.u);
    m["model.periodic"] = c.hubbard.periodic ? "true" : "false";
    m["model.fcidump"] = c.fcidump_path;
    m["sector.n_elec"] = std::to_string(c.n_elec);
    m["sector.twice_sz"] = std::to_string(c.twice_sz);
    m["policy.max_bond"] = std::to_string(c.policy.max_bond);
    m["policy.cutoff"] = csv_num(c.policy.cutoff);
    std::string bonds;
    for (auto b : c.bond_series) bonds += (bonds.empty() ? "" : ",") + std::to_string(b);
    m["policy.bonds"] = bonds;
    m["dmrg.sweeps"] = std::to_string(c.sweeps);
    m["evolve.dt"] = csv_num(c.evolution.dt);
    m["evolve.n_steps"] = std::to_string(c.evolution.n_steps);
    m["evolve.method"] = c.evolution.method == EvolveMethod::rk4 ? "rk4" : "td_sweep";
    m["prep.tau_max"] = csv_num(c.prep_tau_max);
    m["prep.total_time"] = csv_num(c.prep_total_time);
    m["prep.u_start"] = csv_num(c.prep_u_start);
    m["adapt.max_iters"] = std::to_string(c.adapt_stop.max_iters);
    m["adapt.energy_tol"] = csv_num(c.adapt_stop.energy_tol);
    m["adapt.grad_tol"] = csv_num(c.adapt_stop.grad_tol);
    m["adapt.energy_window"] = std::to_string(c.adapt_stop.energy_window);
    m["trotter.dt"] = csv_num(c.trotter_dt);
    m["trotter.points"] = std::to_string(c.trotter_points);
    m["trotter.eta"] = std::to_string(c.trotter_eta);
    m["spectrum.gamma"] = csv_num(c.spectrum.gamma);
    m["spectrum.t_max"] = csv_num(c.spectrum.t_max);
    m["spectrum.omega_min"] = csv_num(c.spectrum.omega_min);
    m["spectrum.omega_max"] = csv_num(c.spectrum.omega_max);
    m["spectrum.omega_step"] = csv_num(c.spectrum.omega_step);
    m["spectrum.window"] = c.spectrum.window == SpectrumWindow::cosine ? "cosine" : "none";
    m["seed"] = std::to_string(c.seed);
    m["threads"] = std::to_string(c.threads);
    return m;
}

std::string config_json(const RunConfig &c) {
    nlohmann::json j = nlohmann::json::object();
    for (auto &[key, val] : config_entries(c)) j[key] = val;
    return j.dump(2) + "\n";
}

RunConfig config_from_json(const std::string &json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception &e) {
        throw ParseError(std::string("config sidecar is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("config sidecar must be a JSON object");
    std::string text;
    for (auto &[key, val] : j.items()) {
        if (!val.is_string()) throw TypeError("sidecar entry '" + key + "' must be a string");
        text += key + " = " + val.get<std::string>() + "\n";
    }
    return load_config(text);
}

void write_csv(const std::string &path, const std::string &schema,
               const std::vector<std::string> &columns,
               const std::vector<std::vector<std::string>> &rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << "# fermips-csv v1 " << schema << "\n";
    for (std::size_t k = 0; k < columns.size(); ++k)
        out << columns[k] << (k + 1 < columns.size() ? "," : "\n");
    for (auto &row : rows) {
        if (row.size() != columns.size())
            throw LengthMismatch("CSV row width does not match the header");
        for (std::size_t k = 0; k < row.size(); ++k)
            out << row[k] << (k + 1 < row.size() ? "," : "\n");
    }
    if (!out) throw Error("write to '" + path + "' failed");
}

} // namespace fermips
