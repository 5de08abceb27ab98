// error.hpp — typed error codes shared by all modules

#pragma once

#include <stdexcept>
#include <string>

namespace ecav {

enum class Errc {
    NegativeRate,
    NegativeCount,
    ZeroUnit,
    ConfigKey,
    DimensionTooSmall,
    LengthMismatch,
    NonHermitian,
    TraceNotOne,
    InvalidState,
    CutoffTooSmall,
    CutoffBreach,
    NonPhysical,
    MoleculeCap,
    NotConverged,
    BlowUp,
    TooManyBlowUps,
    JensenViolation,
    NonRealizable,
    Io,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::NegativeRate:      return "NegativeRate";
        case Errc::NegativeCount:     return "NegativeCount";
        case Errc::ZeroUnit:          return "ZeroUnit";
        case Errc::ConfigKey:         return "ConfigKey";
        case Errc::DimensionTooSmall: return "DimensionTooSmall";
        case Errc::LengthMismatch:    return "LengthMismatch";
        case Errc::NonHermitian:      return "NonHermitian";
        case Errc::TraceNotOne:       return "TraceNotOne";
        case Errc::InvalidState:      return "InvalidState";
        case Errc::CutoffTooSmall:    return "CutoffTooSmall";
        case Errc::CutoffBreach:      return "CutoffBreach";
        case Errc::NonPhysical:       return "NonPhysical";
        case Errc::MoleculeCap:       return "MoleculeCap";
        case Errc::NotConverged:      return "NotConverged";
        case Errc::BlowUp:            return "BlowUp";
        case Errc::TooManyBlowUps:    return "TooManyBlowUps";
        case Errc::JensenViolation:   return "JensenViolation";
        case Errc::NonRealizable:     return "NonRealizable";
        case Errc::Io:                return "Io";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace ecav
