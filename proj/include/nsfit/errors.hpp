#pragma once

#include <stdexcept>
#include <string>

namespace nsfit {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A transmission value <= 0 was encountered where an absorption
/// conversion was requested. Carries the offending wavelength and value.
class NonPositiveTransmission : public Error {
public:
    NonPositiveTransmission(double wavelength_nm, double value)
        : Error("non-positive transmission " + std::to_string(value) +
                " at " + std::to_string(wavelength_nm) + " nm"),
          wavelength_nm(wavelength_nm), value(value) {}

    double wavelength_nm;
    double value;
};

/// Input already holds absorption data where transmission was expected.
class AlreadyAbsorption : public Error {
public:
    using Error::Error;
};

/// A query wavelength lies outside the data range (extrapolation refused).
class GridOutOfRange : public Error {
public:
    using Error::Error;
};

/// An operation produced or would operate on an empty wavelength range.
class EmptyResult : public Error {
public:
    using Error::Error;
};

/// The fit window does not contain the anchor wavelengths the initial
/// guess heuristic needs.
class WindowTooNarrow : public Error {
public:
    using Error::Error;
};

/// Fewer data points than free parameters.
class DegenerateInput : public Error {
public:
    using Error::Error;
};

/// Decadic/natural conventions of two quantities do not match.
class ConventionMismatch : public Error {
public:
    using Error::Error;
};

/// Too few calibration points for the requested regression model.
class InsufficientPoints : public Error {
public:
    using Error::Error;
};

/// Calibration abscissa carries no information (all x equal, or sum x^2 = 0).
class DegenerateX : public Error {
public:
    using Error::Error;
};

/// Detection limits violate 0 < A_noise < A_max.
class InvalidLimits : public Error {
public:
    using Error::Error;
};

/// Spectrum file header line could not be interpreted.
class MalformedHeader : public Error {
public:
    using Error::Error;
};

/// Wavelength column is not strictly increasing. Carries the line number.
class NonMonotonicWavelength : public Error {
public:
    NonMonotonicWavelength(const std::string& msg, int line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line(line) {}

    int line;
};

/// A data cell failed numeric parsing. Carries the line number.
class BadNumeric : public Error {
public:
    BadNumeric(const std::string& msg, int line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line(line) {}

    int line;
};

/// Thickness is required (absorption conversion) but absent from the metadata.
class MissingThickness : public Error {
public:
    using Error::Error;
};

/// Filesystem-level read/write failure.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace nsfit
