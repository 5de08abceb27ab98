// params.hpp — model parameterization and unit conventions shared by both solvers
//
// All rates are dimensionless multiples of the molecule-cavity coupling g
// (g itself is the unit and defaults to 1); times are in 1/g. Phases are
// stored in [0, 2*pi). Parameters are immutable after validation and safe
// to share across threads by value.

#pragma once

#include <string>

#include "ecav/error.hpp"

namespace ecav {

enum class Chirality { Left, Right };

inline const char* chirality_name(Chirality c) {
    return c == Chirality::Left ? "Left" : "Right";
}

struct SystemParams {
    double g = 1.0;        // Rabi coupling to the cavity mode (the unit)
    double omega31 = 0.0;  // classical Rabi amplitude on the 3<->1 transition
    double omega32 = 0.0;  // classical Rabi amplitude on the 3<->2 transition
    double delta_c = 0.0;  // cavity-drive detuning
    double delta31 = 0.0;  // 3<->1 detuning
    double delta32 = 0.0;  // 3<->2 detuning
    double kappa = 0.0;    // cavity loss rate, >= 0
    double eta = 0.0;      // coherent drive amplitude, signed
    double phi_L = 0.0;    // loop phase, left-handed species [rad]
    double phi_R = 0.0;    // loop phase, right-handed species [rad]
    int n_left = 0;        // number of left-handed molecules
    int n_right = 0;       // number of right-handed molecules

    int n_molecules() const { return n_left + n_right; }

    // Layout order is the left-handed block followed by the right-handed one.
    Chirality chirality_of(int mol) const {
        return mol < n_left ? Chirality::Left : Chirality::Right;
    }
};

// One molecule of the ensemble; index is 1-based within its chirality block.
struct MoleculeId {
    Chirality chirality = Chirality::Left;
    int index = 1;
};

// Checks invariants and returns the parameters with phases normalized into
// [0, 2*pi). Idempotent. Throws Error{NegativeRate, ZeroUnit, NegativeCount}
// naming the offending field.
SystemParams validate_params(const SystemParams& p);

// Loop phase of the given chirality (phi_L or phi_R).
double loop_phase(const SystemParams& p, Chirality c);

// Phase folded into [0, 2*pi).
double normalize_phase(double phi);

// Largest rate in the problem (couplings, loss, drive, detunings); the
// solvers scale their default timesteps off it.
double max_rate(const SystemParams& p);

} // namespace ecav
