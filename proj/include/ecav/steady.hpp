// steady.hpp — trailing-window flatness rule shared by both solvers
//
// A series is declared steady when the photon-mean range (max - min) over
// the trailing window of duration `window` falls below
//     max(tol * max(|window mean|, 1e-6), noise_floor).
// With noise_floor = 0 this is the deterministic rule used on exact-ME
// output. Stochastic series pass a noise_floor derived from their sampling
// error, because an ensemble average at finite n_t fluctuates by ~stderr
// forever and a pure relative tolerance would never be met.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ecav/error.hpp"

namespace ecav {

struct Flatness {
    bool converged = false;
    std::size_t begin = 0;   // first sample index inside the window
    double mean = 0.0;       // window mean of the tested values
    double range = 0.0;      // max - min over the window
    double threshold = 0.0;  // flatness bound that was applied
};

inline Flatness trailing_flatness(const std::vector<double>& times,
                                  const std::vector<double>& values,
                                  double tol, double window,
                                  double noise_floor) {
    if (times.size() != values.size())
        throw Error(Errc::LengthMismatch,
                    "trailing_flatness: " + std::to_string(times.size()) +
                        " times vs " + std::to_string(values.size()) + " values");
    if (times.size() < 2)
        throw Error(Errc::InvalidState,
                    "trailing_flatness: need at least 2 samples");
    if (window <= 0.0)
        throw Error(Errc::InvalidState, "trailing_flatness: window must be positive");
    const double span = times.back() - times.front();
    if (span < 2.0 * window)
        throw Error(Errc::InvalidState,
                    "trailing_flatness: series spans " + std::to_string(span) +
                        ", need at least twice the window " + std::to_string(window));

    const double t_begin = times.back() - window;
    std::size_t begin = times.size() - 1;
    while (begin > 0 && times[begin - 1] >= t_begin) --begin;

    Flatness f;
    f.begin = begin;
    double lo = values[begin], hi = values[begin], sum = 0.0;
    for (std::size_t k = begin; k < values.size(); ++k) {
        lo = std::min(lo, values[k]);
        hi = std::max(hi, values[k]);
        sum += values[k];
    }
    f.mean = sum / static_cast<double>(values.size() - begin);
    f.range = hi - lo;
    f.threshold = std::max(tol * std::max(std::abs(f.mean), 1e-6), noise_floor);
    f.converged = f.range < f.threshold;
    return f;
}

} // namespace ecav
