#pragma once

#include <map>
#include <string>
#include <vector>

#include "fermips/engines.hpp"

namespace fermips {

// ---------------------------------------------------------------------------
// FCIDUMP

// One body-line of a dump: value plus four 1-based indices. (0,0,0,0) is the
// core energy, (i,j,0,0) one-electron, else two-electron in chemists'
// notation; stored records are as read, before symmetry expansion.
struct FCIDumpRecord {
    double value = 0.0;
    int i = 0, j = 0, k = 0, l = 0;
};

struct FCIDumpData {
    int norb = 0;
    int nelec = 0;
    int ms2 = 0;
    std::vector<FCIDumpRecord> records;
    std::vector<std::string> warnings; // ignored header keys (ISYM, ORBSYM, ...)

    // 8-fold permutational expansion into the full integral table
    IntegralHamiltonian to_integrals() const;
};

FCIDumpData parse_fcidump(const std::string &text);

// Canonical writer: core energy, then unique one-electron (i >= j), then
// unique two-electron tuples with i>=j, k>=l, (i,j)>=(k,l); values printed
// round-trip exact. h1 must be real within 1e-12.
std::string write_fcidump(const IntegralHamiltonian &h, int nelec, int ms2);

// ---------------------------------------------------------------------------
// Run configuration

enum class TaskKind { ground_state, state_prep, adapt, trotter, quench };

struct SpectrumParams {
    double gamma = 0.1;
    double t_max = 20.0;
    double omega_min = 0.0;
    double omega_max = 10.0;
    double omega_step = 0.05;
    SpectrumWindow window = SpectrumWindow::cosine;
};

struct RunConfig {
    TaskKind task = TaskKind::ground_state;
    // model: a Hubbard chain or an FCIDUMP file
    bool use_fcidump = false;
    HubbardSpec hubbard{};
    std::string fcidump_path;
    // sector: n_elec < 0 means "half filling" (or the dump's NELEC)
    int n_elec = -1;
    int twice_sz = 0;
    // truncation
    CompressionPolicy policy{256, 1e-20};
    std::vector<long> bond_series; // stage scan for ground-state / quench
    int sweeps = 8;
    // time evolution (state-prep, trotter substeps, quench)
    EvolutionParams evolution;
    double prep_tau_max = 20.0;    // imaginary-time horizon
    double prep_total_time = 20.0; // adiabatic ramp duration
    double prep_u_start = 8.0;     // ramp starts from the U=prep_u_start chain
    AdaptStopRule adapt_stop;
    double trotter_dt = 0.05; // largest step of the halving series
    int trotter_points = 3;
    int trotter_eta = 2; // particle number for the weighted norms
    SpectrumParams spectrum;
    unsigned long seed = 0;
    int threads = 1;
};

// Flat "key = value" text, '#' comments; unknown keys are hard errors that
// list the valid keys. Missing `task` raises MissingKey, bad values TypeError.
RunConfig load_config(const std::string &text);

// Canonical flat key set of a config (every valid key, defaults filled in).
std::map<std::string, std::string> config_entries(const RunConfig &c);

// JSON sidecar capturing the full config; config_from_json inverts it.
std::string config_json(const RunConfig &c);
RunConfig config_from_json(const std::string &json_text);

// ---------------------------------------------------------------------------
// Result serialization

// CSV with a versioned schema comment line, then the header row, then data.
void write_csv(const std::string &path, const std::string &schema,
               const std::vector<std::string> &columns,
               const std::vector<std::vector<std::string>> &rows);

std::string csv_num(double v); // deterministic round-trip formatting

} // namespace fermips
