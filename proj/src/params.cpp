#include "ecav/params.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ecav {

double normalize_phase(double phi) {
    const double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(phi, two_pi);
    if (r < 0.0) r += two_pi;
    // fmod can land exactly on two_pi after the correction of a tiny negative
    if (r >= two_pi) r = 0.0;
    return r;
}

SystemParams validate_params(const SystemParams& p) {
    if (p.g <= 0.0)
        throw Error(Errc::ZeroUnit, "g must be > 0 (it is the unit), got " + std::to_string(p.g));
    if (p.kappa < 0.0)
        throw Error(Errc::NegativeRate, "kappa must be >= 0, got " + std::to_string(p.kappa));
    if (p.n_left < 0)
        throw Error(Errc::NegativeCount, "n_left must be >= 0, got " + std::to_string(p.n_left));
    if (p.n_right < 0)
        throw Error(Errc::NegativeCount, "n_right must be >= 0, got " + std::to_string(p.n_right));

    SystemParams out = p;
    out.phi_L = normalize_phase(p.phi_L);
    out.phi_R = normalize_phase(p.phi_R);
    return out;
}

double loop_phase(const SystemParams& p, Chirality c) {
    return c == Chirality::Left ? p.phi_L : p.phi_R;
}

double max_rate(const SystemParams& p) {
    return std::max({p.kappa, std::abs(p.eta), p.omega32, p.omega31, p.g,
                     std::abs(p.delta_c), std::abs(p.delta31),
                     std::abs(p.delta32)});
}

} // namespace ecav
