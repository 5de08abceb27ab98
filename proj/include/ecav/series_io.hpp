// series_io.hpp — CSV/JSON persistence for time series, sweeps, and configs
//
// CSV is the primary exchange format: UTF-8, one header row, 12 significant
// digits. JSON mirrors every CSV with the same field names plus the pieces
// that have no tabular shape (standard errors, diagnostics, config echoes).
//
// Column layouts (frozen; tests pin the header strings):
//   exact series   t,photon_mean,photon_sq_mean,mol<k>_P1..P3...,photon_var
//   wigner series  same, plus m_abs2,m_abs4 before photon_var; population
//                  columns appear only when the ensemble accumulated them
//   excess sweep   P,N_L,N_R,photon_ss,photon_var_ss,dP
//   N_L sweep      N_L,photon_ss,photon_var_ss
//
// Config documents are strict: keys must match SystemParams field names,
// unknown keys are rejected, and omega31, omega32, kappa, eta, n_left,
// n_right are required. Optional keys default to g=1, all detunings 0,
// phi_L=0, and phi_R=pi (the enantiodistinguishing convention).

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecav/analysis.hpp"
#include "ecav/error.hpp"
#include "ecav/exact_me.hpp"
#include "ecav/gdtwa.hpp"
#include "ecav/params.hpp"

namespace ecav::io {

#ifndef ECAV_VERSION
#define ECAV_VERSION "0.0.0"
#endif
inline constexpr const char* kVersion = ECAV_VERSION;

// One value at 12 significant digits (%.12g), the CSV cell format.
std::string format_g12(double v);

void write_exact_series_csv(const std::string& path,
                            const exact::ObservableSeries& s);
nlohmann::json exact_series_json(const exact::ObservableSeries& s);

void write_wigner_series_csv(const std::string& path,
                             const gdtwa::WignerMomentSeries& s);
nlohmann::json wigner_series_json(const gdtwa::WignerMomentSeries& s);

// `dP` is the detection-uncertainty column; pass an empty vector to emit
// nan (e.g. when the grid is too short for slopes).
void write_excess_sweep_csv(const std::string& path,
                            const analysis::SweepResult& s,
                            const std::vector<double>& dP);
nlohmann::json excess_sweep_json(const analysis::SweepResult& s,
                                 const std::vector<double>& dP,
                                 const nlohmann::json& config_echo);

void write_nmol_sweep_csv(const std::string& path,
                          const analysis::MoleculeNumberSweep& s);
nlohmann::json nmol_sweep_json(const analysis::MoleculeNumberSweep& s,
                               const nlohmann::json& config_echo);

// Strict parse of a SystemParams config object (see the key rules above).
// Throws Error{ConfigKey} naming the offending key; the result is not yet
// validated — callers run validate_params.
SystemParams params_from_json(const nlohmann::json& j);
nlohmann::json params_to_json(const SystemParams& p);

// Parses a JSON document from disk. Throws Error{Io} when the file cannot
// be read and Error{ConfigKey} when it does not parse.
nlohmann::json read_json_file(const std::string& path);

// Pretty-printed with a trailing newline. Throws Error{Io} on failure.
void write_json_file(const std::string& path, const nlohmann::json& j);

// Run manifest: command, merged config echo, seed, version, wall time, and
// the list of files the run produced.
nlohmann::json make_manifest(const std::string& command,
                             const nlohmann::json& config_echo,
                             std::uint64_t seed, double wall_time_s,
                             const std::vector<std::string>& outputs);

} // namespace ecav::io
