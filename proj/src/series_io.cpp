#include "ecav/series_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>

#include "ecav/observables.hpp"

namespace ecav::io {

namespace {

std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // fixed newlines everywhere
    if (!out)
        throw Error(Errc::Io, "cannot open \"" + path + "\" for writing");
    return out;
}

void finish(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw Error(Errc::Io, "write to \"" + path + "\" failed");
}

void write_population_headers(std::ofstream& out, size_t n_molecules) {
    for (size_t m = 0; m < n_molecules; ++m)
        for (int lvl = 1; lvl <= 3; ++lvl)
            out << ",mol" << m << "_P" << lvl;
}

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

} // namespace

std::string format_g12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_exact_series_csv(const std::string& path,
                            const exact::ObservableSeries& s) {
    auto out = open_for_write(path);
    out << "t,photon_mean,photon_sq_mean";
    write_population_headers(out, s.populations.size());
    out << ",photon_var\n";
    for (size_t t = 0; t < s.times.size(); ++t) {
        out << format_g12(s.times[t]) << ',' << format_g12(s.photon_mean[t])
            << ',' << format_g12(s.photon_sq_mean[t]);
        for (const auto& mol : s.populations)
            for (int lvl = 0; lvl < 3; ++lvl)
                out << ',' << format_g12(mol[lvl][t]);
        const double var =
            s.photon_sq_mean[t] - s.photon_mean[t] * s.photon_mean[t];
        out << ',' << format_g12(var) << '\n';
    }
    finish(out, path);
}

nlohmann::json exact_series_json(const exact::ObservableSeries& s) {
    const auto phys = obs::physical_from_exact(s);
    nlohmann::json j;
    j["t"] = s.times;
    j["photon_mean"] = s.photon_mean;
    j["photon_sq_mean"] = s.photon_sq_mean;
    j["photon_var"] = phys.photon_var;
    auto& pops = j["populations"] = nlohmann::json::array();
    for (const auto& mol : s.populations)
        pops.push_back({mol[0], mol[1], mol[2]});
    j["diagnostics"] = {{"max_trace_drift", s.max_trace_drift},
                        {"max_asymmetry", s.max_asymmetry},
                        {"max_top_fock", s.max_top_fock}};
    return j;
}

void write_wigner_series_csv(const std::string& path,
                             const gdtwa::WignerMomentSeries& s) {
    const auto phys = obs::physical_from_wigner(s);
    auto out = open_for_write(path);
    out << "t,photon_mean,photon_sq_mean";
    write_population_headers(out, s.lambda_means.size());
    out << ",m_abs2,m_abs4,photon_var\n";
    for (size_t t = 0; t < s.times.size(); ++t) {
        // <(a+a)^2> = <|alpha|^4>_W - <|alpha|^2>_W, the operatorial second
        // moment recovered from symmetric-ordered ones.
        const double sq_mean = s.m_abs4[t] - s.m_abs2[t];
        out << format_g12(s.times[t]) << ','
            << format_g12(phys.photon_mean[t]) << ',' << format_g12(sq_mean);
        for (const auto& mol : phys.populations)
            for (int lvl = 0; lvl < 3; ++lvl)
                out << ',' << format_g12(mol[lvl][t]);
        out << ',' << format_g12(s.m_abs2[t]) << ','
            << format_g12(s.m_abs4[t]) << ','
            << format_g12(phys.photon_var[t]) << '\n';
    }
    finish(out, path);
}

nlohmann::json wigner_series_json(const gdtwa::WignerMomentSeries& s) {
    const auto phys = obs::physical_from_wigner(s);
    nlohmann::json j;
    j["t"] = s.times;
    j["photon_mean"] = phys.photon_mean;
    auto& sq = j["photon_sq_mean"] = nlohmann::json::array();
    for (size_t t = 0; t < s.times.size(); ++t)
        sq.push_back(s.m_abs4[t] - s.m_abs2[t]);
    j["photon_var"] = phys.photon_var;
    j["photon_stderr"] = phys.photon_stderr;
    j["m_abs2"] = s.m_abs2;
    j["m_abs4"] = s.m_abs4;
    auto& pops = j["populations"] = nlohmann::json::array();
    for (const auto& mol : phys.populations)
        pops.push_back({mol[0], mol[1], mol[2]});
    j["n_effective"] = s.n_effective;
    j["n_requested"] = s.n_requested;
    j["n_blowups"] = s.n_blowups;
    j["n_var_clipped"] = phys.n_clipped;
    return j;
}

void write_excess_sweep_csv(const std::string& path,
                            const analysis::SweepResult& s,
                            const std::vector<double>& dP) {
    if (!dP.empty() && dP.size() != s.excess_grid.size())
        throw Error(Errc::LengthMismatch,
                    "write_excess_sweep_csv: dP column does not match grid");
    auto out = open_for_write(path);
    out << "P,N_L,N_R,photon_ss,photon_var_ss,dP\n";
    for (size_t i = 0; i < s.excess_grid.size(); ++i) {
        out << format_g12(s.excess_grid[i]) << ',' << s.n_left[i] << ','
            << s.n_right[i] << ',' << format_g12(s.photon_ss[i]) << ','
            << format_g12(s.photon_var_ss[i]) << ','
            << format_g12(dP.empty() ? kNan : dP[i]) << '\n';
    }
    finish(out, path);
}

nlohmann::json excess_sweep_json(const analysis::SweepResult& s,
                                 const std::vector<double>& dP,
                                 const nlohmann::json& config_echo) {
    nlohmann::json j;
    j["P"] = s.excess_grid;
    j["N_L"] = s.n_left;
    j["N_R"] = s.n_right;
    j["photon_ss"] = s.photon_ss;
    j["photon_var_ss"] = s.photon_var_ss;
    j["photon_stderr"] = s.photon_stderr;
    j["dP"] = dP;
    j["n_total"] = s.n_total;
    j["eta"] = s.eta;
    j["config"] = config_echo;
    return j;
}

void write_nmol_sweep_csv(const std::string& path,
                          const analysis::MoleculeNumberSweep& s) {
    auto out = open_for_write(path);
    out << "N_L,photon_ss,photon_var_ss\n";
    for (size_t i = 0; i < s.n_left.size(); ++i) {
        out << s.n_left[i] << ',' << format_g12(s.photon_ss[i]) << ','
            << format_g12(s.photon_var_ss[i]) << '\n';
    }
    finish(out, path);
}

nlohmann::json nmol_sweep_json(const analysis::MoleculeNumberSweep& s,
                               const nlohmann::json& config_echo) {
    nlohmann::json j;
    j["N_L"] = s.n_left;
    j["photon_ss"] = s.photon_ss;
    j["photon_var_ss"] = s.photon_var_ss;
    j["photon_stderr"] = s.photon_stderr;
    j["eta"] = s.eta;
    j["config"] = config_echo;
    return j;
}

namespace {

double require_number(const nlohmann::json& j, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_number())
        throw Error(Errc::ConfigKey,
                    "params: key \"" + std::string(key) + "\" must be a number");
    return v.get<double>();
}

int require_count(const nlohmann::json& j, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_number_integer())
        throw Error(Errc::ConfigKey, "params: key \"" + std::string(key) +
                                         "\" must be an integer");
    return v.get<int>();
}

} // namespace

SystemParams params_from_json(const nlohmann::json& j) {
    if (!j.is_object())
        throw Error(Errc::ConfigKey, "params: config must be a JSON object");

    static constexpr const char* kKnown[] = {
        "g",     "omega31", "omega32", "delta_c", "delta31", "delta32",
        "kappa", "eta",     "phi_L",   "phi_R",   "n_left",  "n_right"};
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* k : kKnown) known |= key == k;
        if (!known)
            throw Error(Errc::ConfigKey, "params: unknown key \"" + key + "\"");
    }
    for (const char* key :
         {"omega31", "omega32", "kappa", "eta", "n_left", "n_right"}) {
        if (!j.contains(key))
            throw Error(Errc::ConfigKey,
                        "params: missing required key \"" + std::string(key) +
                            "\"");
    }

    SystemParams p;
    p.omega31 = require_number(j, "omega31");
    p.omega32 = require_number(j, "omega32");
    p.kappa = require_number(j, "kappa");
    p.eta = require_number(j, "eta");
    p.n_left = require_count(j, "n_left");
    p.n_right = require_count(j, "n_right");
    p.g = j.contains("g") ? require_number(j, "g") : 1.0;
    p.delta_c = j.contains("delta_c") ? require_number(j, "delta_c") : 0.0;
    p.delta31 = j.contains("delta31") ? require_number(j, "delta31") : 0.0;
    p.delta32 = j.contains("delta32") ? require_number(j, "delta32") : 0.0;
    p.phi_L = j.contains("phi_L") ? require_number(j, "phi_L") : 0.0;
    p.phi_R = j.contains("phi_R") ? require_number(j, "phi_R")
                                  : std::numbers::pi;
    return p;
}

nlohmann::json params_to_json(const SystemParams& p) {
    return {{"g", p.g},
            {"omega31", p.omega31},
            {"omega32", p.omega32},
            {"delta_c", p.delta_c},
            {"delta31", p.delta31},
            {"delta32", p.delta32},
            {"kappa", p.kappa},
            {"eta", p.eta},
            {"phi_L", p.phi_L},
            {"phi_R", p.phi_R},
            {"n_left", p.n_left},
            {"n_right", p.n_right}};
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open \"" + path + "\" for reading");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::ConfigKey,
                    "cannot parse \"" + path + "\": " + e.what());
    }
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    auto out = open_for_write(path);
    out << j.dump(2) << '\n';
    finish(out, path);
}

nlohmann::json make_manifest(const std::string& command,
                             const nlohmann::json& config_echo,
                             std::uint64_t seed, double wall_time_s,
                             const std::vector<std::string>& outputs) {
    return {{"command", command}, {"config", config_echo},
            {"seed", seed},       {"version", kVersion},
            {"wall_time_s", wall_time_s}, {"outputs", outputs}};
}

} // namespace ecav::io
