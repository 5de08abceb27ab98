// ecav — command-line front end for the cavity enantiodetection solvers
//
// Subcommands: exact (master-equation series), gdtwa (trajectory-ensemble
// series), sweep-excess, sweep-nmol (steady-state sweeps), validate
// (engine cross-check on one instance). Every run reads a strict JSON
// params config, applies flag overrides, writes CSV or JSON results plus a
// <out>.manifest.json with the merged config, seed, version, and wall time.
//
// Exit codes: 0 success, 1 compute error, 2 config error, 3 validation
// verdict "fail". Errors print one machine-readable JSON object on stdout;
// human-oriented progress goes to stderr.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ecav/analysis.hpp"
#include "ecav/error.hpp"
#include "ecav/exact_me.hpp"
#include "ecav/gdtwa.hpp"
#include "ecav/observables.hpp"
#include "ecav/params.hpp"
#include "ecav/series_io.hpp"

namespace {

using nlohmann::json;

int exit_code_for(ecav::Errc c) {
    switch (c) {
        // Runtime/compute failures: the configuration was legal but the
        // numerics did not cooperate.
        case ecav::Errc::CutoffBreach:
        case ecav::Errc::NonPhysical:
        case ecav::Errc::NotConverged:
        case ecav::Errc::BlowUp:
        case ecav::Errc::TooManyBlowUps:
        case ecav::Errc::JensenViolation:
            return 1;
        default:
            return 2;  // config/usage class
    }
}

void print_error_json(const std::string& code, const std::string& message) {
    std::cout << json{{"error", {{"code", code}, {"message", message}}}}.dump()
              << "\n";
}

// All flag-backed values; each subcommand binds the subset it supports.
struct Opts {
    std::string config_path;
    std::string out_path;  // empty -> "<command>.<format>"
    std::string format = "csv";
    std::uint64_t seed = 1;
    long trajectories = 10000;
    double dt = 0.0;  // 0 -> engine default
    double t_final = 10.0;
    int sample_every = 20;
    int threads = 1;
    int fock_cutoff = 0;  // 0 -> default_fock_cutoff
    double tol = 1e-3;
    double window = 0.0;  // 0 -> 2/kappa
    double guard = 1e3;
    bool heun = false;
    int max_extensions = 2;
    double cavity_n = 0.0;
    double cavity_phase = 0.0;
    // sweep-excess
    int n_total = 0;
    double p_max = 0.9;
    int stride = 1;
    std::string engine = "gdtwa";
    // sweep-nmol
    int n_left_max = 0;
    int n_left_stride = 1;

    // Param overrides (applied only when the flag was given).
    double g = 0, omega31 = 0, omega32 = 0, delta_c = 0, delta31 = 0,
           delta32 = 0, kappa = 0, eta = 0, phi_L = 0, phi_R = 0;
    int n_left = 0, n_right = 0;
};

void add_common_flags(CLI::App* cmd, Opts& o) {
    cmd->add_option("--config", o.config_path, "params JSON document")
        ->required();
    cmd->add_option("--out", o.out_path, "output path (default <command>.<format>)");
    cmd->add_option("--format", o.format, "output format")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--seed", o.seed, "master RNG seed");
    cmd->add_option("--dt", o.dt, "integrator step [1/g]; 0 = engine default");
    cmd->add_option("--t-final", o.t_final, "integration horizon [1/g]");
    cmd->add_option("--sample-every", o.sample_every, "record every k steps")
        ->check(CLI::PositiveNumber);

    // Model-parameter overrides (flags win over the config file).
    cmd->add_option("--g", o.g, "override coupling g");
    cmd->add_option("--omega31", o.omega31, "override Omega_31");
    cmd->add_option("--omega32", o.omega32, "override Omega_32");
    cmd->add_option("--delta-c", o.delta_c, "override Delta_c");
    cmd->add_option("--delta31", o.delta31, "override Delta_31");
    cmd->add_option("--delta32", o.delta32, "override Delta_32");
    cmd->add_option("--kappa", o.kappa, "override kappa");
    cmd->add_option("--eta", o.eta, "override eta");
    cmd->add_option("--phi-L", o.phi_L, "override phi_L [rad]");
    cmd->add_option("--phi-R", o.phi_R, "override phi_R [rad]");
    cmd->add_option("--n-left", o.n_left, "override N_L");
    cmd->add_option("--n-right", o.n_right, "override N_R");
}

void add_gdtwa_flags(CLI::App* cmd, Opts& o) {
    cmd->add_option("--trajectories", o.trajectories, "ensemble size")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--threads", o.threads, "trajectory worker threads")
        ->check(CLI::Range(1, 256));
    cmd->add_option("--guard", o.guard, "|alpha| blow-up bound")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--heun", o.heun, "Heun corrector for the drift");
}

void add_steady_flags(CLI::App* cmd, Opts& o) {
    cmd->add_option("--tol", o.tol, "steady-state flatness tolerance")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--window", o.window, "steady window [1/g]; 0 = 2/kappa");
    cmd->add_option("--max-extensions", o.max_extensions,
                    "t_final doublings before giving up")
        ->check(CLI::NonNegativeNumber);
}

ecav::SystemParams load_params(const CLI::App* cmd, const Opts& o) {
    auto p = ecav::io::params_from_json(ecav::io::read_json_file(o.config_path));
    if (cmd->count("--g")) p.g = o.g;
    if (cmd->count("--omega31")) p.omega31 = o.omega31;
    if (cmd->count("--omega32")) p.omega32 = o.omega32;
    if (cmd->count("--delta-c")) p.delta_c = o.delta_c;
    if (cmd->count("--delta31")) p.delta31 = o.delta31;
    if (cmd->count("--delta32")) p.delta32 = o.delta32;
    if (cmd->count("--kappa")) p.kappa = o.kappa;
    if (cmd->count("--eta")) p.eta = o.eta;
    if (cmd->count("--phi-L")) p.phi_L = o.phi_L;
    if (cmd->count("--phi-R")) p.phi_R = o.phi_R;
    if (cmd->count("--n-left")) p.n_left = o.n_left;
    if (cmd->count("--n-right")) p.n_right = o.n_right;
    return ecav::validate_params(p);
}

std::string resolve_out(const Opts& o, const std::string& command) {
    if (!o.out_path.empty()) return o.out_path;
    return command + "." + o.format;
}

class WallClock {
public:
    double seconds() const {
        return std::chrono::duration<double>(
                   std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_ =
        std::chrono::steady_clock::now();
};

void write_manifest(const std::string& command, const json& config_echo,
                    const Opts& o, double wall_s,
                    const std::vector<std::string>& outputs) {
    const auto manifest =
        ecav::io::make_manifest(command, config_echo, o.seed, wall_s, outputs);
    ecav::io::write_json_file(outputs.front() + ".manifest.json", manifest);
}

int run_exact(const CLI::App* cmd, Opts& o) {
    WallClock clock;
    const auto p = load_params(cmd, o);
    const int cutoff =
        o.fock_cutoff > 0 ? o.fock_cutoff : ecav::exact::default_fock_cutoff(p);
    const auto layout = ecav::exact::make_layout(cutoff, p.n_molecules());
    const std::vector<int> digits(static_cast<size_t>(p.n_molecules()), 2);
    const auto rho0 = ecav::exact::pure_basis_density(layout, 0, digits);

    ecav::exact::EvolveOptions opt;
    opt.t_final = o.t_final;
    opt.dt = o.dt;
    opt.sample_every = o.sample_every;
    const auto series = ecav::exact::evolve(p, layout, rho0, opt);

    const auto out = resolve_out(o, "exact");
    if (o.format == "csv")
        ecav::io::write_exact_series_csv(out, series);
    else
        ecav::io::write_json_file(out, ecav::io::exact_series_json(series));

    const json echo = {{"params", ecav::io::params_to_json(p)},
                       {"engine",
                        {{"t_final", o.t_final},
                         {"dt", o.dt},
                         {"sample_every", o.sample_every},
                         {"fock_cutoff", cutoff},
                         {"format", o.format}}}};
    write_manifest("exact", echo, o, clock.seconds(), {out});
    std::cerr << "wrote " << out << " (" << series.times.size()
              << " samples, fock cutoff " << cutoff << ")\n";
    return 0;
}

int run_gdtwa(const CLI::App* cmd, Opts& o) {
    WallClock clock;
    const auto p = load_params(cmd, o);
    Eigen::Matrix3cd mol = Eigen::Matrix3cd::Zero();
    mol(2, 2) = 1.0;  // |3><3|

    ecav::gdtwa::EnsembleConfig ens;
    ens.n_trajectories = o.trajectories;
    ens.dt = o.dt;
    ens.t_final = o.t_final;
    ens.master_seed = o.seed;
    ens.sample_every = o.sample_every;
    ens.guard = o.guard;
    ens.heun = o.heun;
    ens.n_workers = o.threads;
    const auto cavity = ecav::gdtwa::CavityInit::coherent(o.cavity_n,
                                                          o.cavity_phase);
    const auto series = ecav::gdtwa::run_ensemble(p, ens, mol, cavity);

    const auto out = resolve_out(o, "gdtwa");
    if (o.format == "csv")
        ecav::io::write_wigner_series_csv(out, series);
    else
        ecav::io::write_json_file(out, ecav::io::wigner_series_json(series));

    const json echo = {{"params", ecav::io::params_to_json(p)},
                       {"engine",
                        {{"t_final", o.t_final},
                         {"dt", o.dt},
                         {"sample_every", o.sample_every},
                         {"trajectories", o.trajectories},
                         {"guard", o.guard},
                         {"heun", o.heun},
                         {"threads", o.threads},
                         {"cavity_n", o.cavity_n},
                         {"cavity_phase", o.cavity_phase},
                         {"format", o.format}}}};
    write_manifest("gdtwa", echo, o, clock.seconds(), {out});
    std::cerr << "wrote " << out << " (" << series.times.size()
              << " samples, " << series.n_effective << "/"
              << series.n_requested << " trajectories)\n";
    return 0;
}

ecav::analysis::SolveConfig make_solve_config(const Opts& o) {
    ecav::analysis::SolveConfig cfg;
    cfg.t_final = o.t_final;
    cfg.dt = o.dt;
    cfg.tol = o.tol;
    cfg.window = o.window;
    cfg.n_trajectories = o.trajectories;
    cfg.master_seed = o.seed;
    cfg.sample_every = o.sample_every;
    cfg.heun = o.heun;
    cfg.n_workers = o.threads;
    cfg.guard = o.guard;
    cfg.fock_cutoff = o.fock_cutoff;
    cfg.max_extensions = o.max_extensions;
    return cfg;
}

json solve_config_json(const ecav::analysis::SolveConfig& cfg,
                       const std::string& engine) {
    return {{"engine", engine},
            {"t_final", cfg.t_final},
            {"dt", cfg.dt},
            {"tol", cfg.tol},
            {"window", cfg.window},
            {"trajectories", cfg.n_trajectories},
            {"sample_every", cfg.sample_every},
            {"heun", cfg.heun},
            {"threads", cfg.n_workers},
            {"guard", cfg.guard},
            {"fock_cutoff", cfg.fock_cutoff},
            {"max_extensions", cfg.max_extensions}};
}

int run_sweep_excess(const CLI::App* cmd, Opts& o) {
    WallClock clock;
    const auto p = load_params(cmd, o);
    const auto grid = ecav::analysis::realizable_grid(o.n_total, o.p_max,
                                                      o.stride);
    const auto engine = o.engine == "exact"
                            ? ecav::analysis::Engine::ExactMe
                            : ecav::analysis::Engine::Gdtwa;
    const auto cfg = make_solve_config(o);
    const auto sweep = ecav::analysis::sweep_excess(p, o.n_total, grid,
                                                    engine, cfg);

    std::vector<double> dP;
    if (grid.size() >= 3) dP = ecav::analysis::uncertainty_curve(sweep).dP;

    const json echo = {{"params", ecav::io::params_to_json(p)},
                       {"solve", solve_config_json(cfg, o.engine)},
                       {"grid",
                        {{"n_total", o.n_total},
                         {"p_max", o.p_max},
                         {"stride", o.stride}}},
                       {"format", o.format}};
    const auto out = resolve_out(o, "sweep-excess");
    if (o.format == "csv")
        ecav::io::write_excess_sweep_csv(out, sweep, dP);
    else
        ecav::io::write_json_file(out,
                                  ecav::io::excess_sweep_json(sweep, dP, echo));
    write_manifest("sweep-excess", echo, o, clock.seconds(), {out});
    std::cerr << "wrote " << out << " (" << grid.size() << " grid points)\n";
    return 0;
}

int run_sweep_nmol(const CLI::App* cmd, Opts& o) {
    WallClock clock;
    const auto p = load_params(cmd, o);
    std::vector<int> n_left_values;
    for (int n = 0; n <= o.n_left_max; n += o.n_left_stride)
        n_left_values.push_back(n);
    const auto engine = o.engine == "exact"
                            ? ecav::analysis::Engine::ExactMe
                            : ecav::analysis::Engine::Gdtwa;
    const auto cfg = make_solve_config(o);
    const auto sweep = ecav::analysis::sweep_molecule_number(p, n_left_values,
                                                             engine, cfg);

    const json echo = {{"params", ecav::io::params_to_json(p)},
                       {"solve", solve_config_json(cfg, o.engine)},
                       {"grid",
                        {{"n_left_max", o.n_left_max},
                         {"n_left_stride", o.n_left_stride}}},
                       {"format", o.format}};
    const auto out = resolve_out(o, "sweep-nmol");
    if (o.format == "csv")
        ecav::io::write_nmol_sweep_csv(out, sweep);
    else
        ecav::io::write_json_file(out, ecav::io::nmol_sweep_json(sweep, echo));
    write_manifest("sweep-nmol", echo, o, clock.seconds(), {out});
    std::cerr << "wrote " << out << " (" << n_left_values.size()
              << " grid points)\n";
    return 0;
}

// Runs both engines over the same horizon with a shared timestep and sample
// grid, then compares photon-number series pointwise. Pass criterion per
// point: |exact - gdtwa| <= max(5 * stderr, 0.02).
int run_validate(const CLI::App* cmd, Opts& o) {
    WallClock clock;
    const auto p = load_params(cmd, o);
    const double dt = o.dt > 0.0 ? o.dt : ecav::gdtwa::default_timestep(p);

    const int cutoff =
        o.fock_cutoff > 0 ? o.fock_cutoff : ecav::exact::default_fock_cutoff(p);
    const auto layout = ecav::exact::make_layout(cutoff, p.n_molecules());
    const std::vector<int> digits(static_cast<size_t>(p.n_molecules()), 2);
    const auto rho0 = ecav::exact::pure_basis_density(layout, 0, digits);
    ecav::exact::EvolveOptions opt;
    opt.t_final = o.t_final;
    opt.dt = dt;
    opt.sample_every = o.sample_every;
    const auto me = ecav::exact::evolve(p, layout, rho0, opt);

    Eigen::Matrix3cd mol = Eigen::Matrix3cd::Zero();
    mol(2, 2) = 1.0;
    ecav::gdtwa::EnsembleConfig ens;
    ens.n_trajectories = o.trajectories;
    ens.dt = dt;
    ens.t_final = o.t_final;
    ens.master_seed = o.seed;
    ens.sample_every = o.sample_every;
    ens.guard = o.guard;
    ens.heun = o.heun;
    ens.n_workers = o.threads;
    ens.accumulate_lambdas = false;
    const auto gd = ecav::gdtwa::run_ensemble(p, ens, mol,
                                              ecav::gdtwa::CavityInit::vacuum());
    const auto gd_phys = ecav::obs::physical_from_wigner(gd);

    // Identical dt/sample_every/t_final puts both engines on one time grid.
    const size_t n = std::min(me.times.size(), gd.times.size());
    double max_dev = 0.0, mean_dev = 0.0, max_tmis = 0.0, max_se = 0.0;
    bool pass = true;
    for (size_t i = 0; i < n; ++i) {
        max_tmis = std::max(max_tmis, std::abs(me.times[i] - gd.times[i]));
        const double dev =
            std::abs(me.photon_mean[i] - gd_phys.photon_mean[i]);
        const double se = gd_phys.photon_stderr[i];
        max_dev = std::max(max_dev, dev);
        max_se = std::max(max_se, se);
        mean_dev += dev;
        if (dev > std::max(5.0 * se, 0.02)) pass = false;
    }
    mean_dev /= static_cast<double>(n);
    if (max_tmis > 1e-9)
        throw ecav::Error(ecav::Errc::InvalidState,
                          "validate: engine sample grids diverged by " +
                              std::to_string(max_tmis));

    json report = {{"t", std::vector<double>(me.times.begin(),
                                             me.times.begin() + n)},
                   {"photon_mean_exact",
                    std::vector<double>(me.photon_mean.begin(),
                                        me.photon_mean.begin() + n)},
                   {"photon_mean_gdtwa",
                    std::vector<double>(gd_phys.photon_mean.begin(),
                                        gd_phys.photon_mean.begin() + n)},
                   {"photon_stderr",
                    std::vector<double>(gd_phys.photon_stderr.begin(),
                                        gd_phys.photon_stderr.begin() + n)},
                   {"max_abs_deviation", max_dev},
                   {"mean_abs_deviation", mean_dev},
                   {"max_stderr", max_se},
                   {"criterion", "|exact - gdtwa| <= max(5*stderr, 0.02)"},
                   {"verdict", pass ? "pass" : "fail"}};

    const auto out = o.out_path.empty() ? std::string("validate.json")
                                        : o.out_path;
    ecav::io::write_json_file(out, report);
    const json echo = {{"params", ecav::io::params_to_json(p)},
                       {"engine",
                        {{"t_final", o.t_final},
                         {"dt", dt},
                         {"sample_every", o.sample_every},
                         {"trajectories", o.trajectories},
                         {"threads", o.threads},
                         {"fock_cutoff", cutoff}}}};
    write_manifest("validate", echo, o, clock.seconds(), {out});

    // Compact machine-readable verdict on stdout; the full series lives in
    // the report file.
    json brief = report;
    brief.erase("t");
    brief.erase("photon_mean_exact");
    brief.erase("photon_mean_gdtwa");
    brief.erase("photon_stderr");
    std::cout << brief.dump() << "\n";
    std::cerr << "validate: " << (pass ? "pass" : "fail") << " (max dev "
              << max_dev << ", floor 0.02)\n";
    return pass ? 0 : 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cavity enantiodetection simulator"};
    app.require_subcommand(1);
    Opts o;

    auto* exact_cmd =
        app.add_subcommand("exact", "master-equation time series");
    add_common_flags(exact_cmd, o);
    exact_cmd->add_option("--fock-cutoff", o.fock_cutoff,
                          "photon cutoff; 0 = automatic");

    auto* gdtwa_cmd =
        app.add_subcommand("gdtwa", "trajectory-ensemble time series");
    add_common_flags(gdtwa_cmd, o);
    add_gdtwa_flags(gdtwa_cmd, o);
    gdtwa_cmd->add_option("--cavity-n", o.cavity_n,
                          "initial coherent-state photon number")
        ->check(CLI::NonNegativeNumber);
    gdtwa_cmd->add_option("--cavity-phase", o.cavity_phase,
                          "initial coherent-state phase [rad]");

    auto* sweep_p = app.add_subcommand(
        "sweep-excess", "steady photon statistics vs enantiomeric excess");
    add_common_flags(sweep_p, o);
    add_gdtwa_flags(sweep_p, o);
    add_steady_flags(sweep_p, o);
    sweep_p->add_option("--n-total", o.n_total, "total molecule count")
        ->required()
        ->check(CLI::PositiveNumber);
    sweep_p->add_option("--p-max", o.p_max, "sweep window [-p_max, p_max]")
        ->check(CLI::NonNegativeNumber);
    sweep_p->add_option("--stride", o.stride, "grid thinning stride")
        ->check(CLI::PositiveNumber);
    sweep_p->add_option("--engine", o.engine, "steady-state engine")
        ->check(CLI::IsMember({"exact", "gdtwa"}));
    sweep_p->add_option("--fock-cutoff", o.fock_cutoff,
                        "photon cutoff (exact engine); 0 = automatic");

    auto* sweep_n = app.add_subcommand(
        "sweep-nmol", "steady photon number vs molecule count (N_R = 0)");
    add_common_flags(sweep_n, o);
    add_gdtwa_flags(sweep_n, o);
    add_steady_flags(sweep_n, o);
    sweep_n->add_option("--n-left-max", o.n_left_max, "largest N_L")
        ->required()
        ->check(CLI::PositiveNumber);
    sweep_n->add_option("--n-left-stride", o.n_left_stride, "N_L step")
        ->check(CLI::PositiveNumber);
    sweep_n->add_option("--engine", o.engine, "steady-state engine")
        ->check(CLI::IsMember({"exact", "gdtwa"}));
    sweep_n->add_option("--fock-cutoff", o.fock_cutoff,
                        "photon cutoff (exact engine); 0 = automatic");

    auto* validate_cmd = app.add_subcommand(
        "validate", "cross-check gdtwa against the exact engine");
    add_common_flags(validate_cmd, o);
    add_gdtwa_flags(validate_cmd, o);
    validate_cmd->add_option("--fock-cutoff", o.fock_cutoff,
                             "photon cutoff; 0 = automatic");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        print_error_json("Cli", e.what());
        return 2;
    }

    try {
        if (exact_cmd->parsed()) return run_exact(exact_cmd, o);
        if (gdtwa_cmd->parsed()) return run_gdtwa(gdtwa_cmd, o);
        if (sweep_p->parsed()) return run_sweep_excess(sweep_p, o);
        if (sweep_n->parsed()) return run_sweep_nmol(sweep_n, o);
        if (validate_cmd->parsed()) return run_validate(validate_cmd, o);
        print_error_json("Cli", "no subcommand given");
        return 2;
    } catch (const ecav::Error& e) {
        print_error_json(ecav::errc_name(e.code()), e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        print_error_json("Internal", e.what());
        return 1;
    }
}
