#pragma once

#include "nsfit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nsfit {

/// What the per-point values of a spectrum mean.
enum class Quantity {
    TransmissionFraction,  ///< dimensionless, in [0, 1]
    TransmissionPercent,   ///< dimensionless, in [0, 100]
    AbsorptionDecadic,     ///< cm^-1, -log10(T)/d
    AbsorptionNatural,     ///< cm^-1, -ln(T)/d
};

/// Logarithm base used when deducing absorption from transmission.
enum class Convention { Decadic, Natural };

[[nodiscard]] constexpr bool is_transmission(Quantity q) noexcept {
    return q == Quantity::TransmissionFraction || q == Quantity::TransmissionPercent;
}

[[nodiscard]] constexpr bool is_absorption(Quantity q) noexcept {
    return !is_transmission(q);
}

/// Convention of an absorption quantity. Transmission kinds have none.
[[nodiscard]] inline Convention convention_of(Quantity q) {
    switch (q) {
    case Quantity::AbsorptionDecadic: return Convention::Decadic;
    case Quantity::AbsorptionNatural: return Convention::Natural;
    default: throw Error("transmission data carries no logarithm convention");
    }
}

[[nodiscard]] inline Quantity absorption_quantity(Convention c) noexcept {
    return c == Convention::Decadic ? Quantity::AbsorptionDecadic
                                    : Quantity::AbsorptionNatural;
}

[[nodiscard]] inline std::string to_string(Quantity q) {
    switch (q) {
    case Quantity::TransmissionFraction: return "transmission_fraction";
    case Quantity::TransmissionPercent: return "transmission_percent";
    case Quantity::AbsorptionDecadic: return "absorption_decadic";
    case Quantity::AbsorptionNatural: return "absorption_natural";
    }
    return "unknown";
}

[[nodiscard]] inline std::string to_string(Convention c) {
    return c == Convention::Decadic ? "decadic" : "natural";
}

/// A sampled spectrum: strictly increasing wavelength grid (nm) with one
/// value per point and a tag saying what the values are.
///
/// Immutable after construction; all operations on spectra return new
/// values, so instances are safe to share across threads.
class Spectrum {
public:
    Spectrum(std::vector<double> wavelengths_nm, std::vector<double> values,
             Quantity quantity)
        : wavelengths_nm_(std::move(wavelengths_nm)),
          values_(std::move(values)),
          quantity_(quantity) {
        validate();
    }

    [[nodiscard]] std::size_t size() const noexcept { return wavelengths_nm_.size(); }
    [[nodiscard]] const std::vector<double>& wavelengths_nm() const noexcept {
        return wavelengths_nm_;
    }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
    [[nodiscard]] Quantity quantity() const noexcept { return quantity_; }

    [[nodiscard]] double min_wavelength_nm() const noexcept { return wavelengths_nm_.front(); }
    [[nodiscard]] double max_wavelength_nm() const noexcept { return wavelengths_nm_.back(); }

    /// Linear interpolation at a single wavelength. Exact at grid points.
    [[nodiscard]] double value_at(double wavelength_nm) const {
        if (wavelength_nm < min_wavelength_nm() || wavelength_nm > max_wavelength_nm()) {
            throw GridOutOfRange("query at " + std::to_string(wavelength_nm) +
                                 " nm outside data range [" +
                                 std::to_string(min_wavelength_nm()) + ", " +
                                 std::to_string(max_wavelength_nm()) + "] nm");
        }
        auto it = std::lower_bound(wavelengths_nm_.begin(), wavelengths_nm_.end(),
                                   wavelength_nm);
        const auto i = static_cast<std::size_t>(it - wavelengths_nm_.begin());
        if (i < size() && wavelengths_nm_[i] == wavelength_nm) return values_[i];
        const double x0 = wavelengths_nm_[i - 1];
        const double x1 = wavelengths_nm_[i];
        const double t = (wavelength_nm - x0) / (x1 - x0);
        return values_[i - 1] + t * (values_[i] - values_[i - 1]);
    }

private:
    void validate() const {
        if (wavelengths_nm_.size() < 2) {
            throw Error("spectrum needs at least 2 points, got " +
                        std::to_string(wavelengths_nm_.size()));
        }
        if (values_.size() != wavelengths_nm_.size()) {
            throw Error("wavelength/value length mismatch: " +
                        std::to_string(wavelengths_nm_.size()) + " vs " +
                        std::to_string(values_.size()));
        }
        for (std::size_t i = 1; i < wavelengths_nm_.size(); ++i) {
            if (!(wavelengths_nm_[i] > wavelengths_nm_[i - 1])) {
                throw Error("wavelengths not strictly increasing near " +
                            std::to_string(wavelengths_nm_[i]) + " nm");
            }
        }
        for (std::size_t i = 0; i < values_.size(); ++i) {
            const double v = values_[i];
            if (!std::isfinite(v)) {
                throw Error("non-finite value at " +
                            std::to_string(wavelengths_nm_[i]) + " nm");
            }
            if (quantity_ == Quantity::TransmissionFraction && (v < 0.0 || v > 1.0)) {
                throw Error("transmission fraction " + std::to_string(v) +
                            " outside [0, 1] at " + std::to_string(wavelengths_nm_[i]) +
                            " nm");
            }
            if (quantity_ == Quantity::TransmissionPercent && (v < 0.0 || v > 100.0)) {
                throw Error("transmission percent " + std::to_string(v) +
                            " outside [0, 100] at " +
                            std::to_string(wavelengths_nm_[i]) + " nm");
            }
        }
    }

    std::vector<double> wavelengths_nm_;
    std::vector<double> values_;
    Quantity quantity_;
};

/// Per-sample metadata carried alongside a spectrum.
///
/// Thickness is stored in cm and is optional at parse time; operations
/// that need it (the Lambert-Beer conversion) raise MissingThickness.
struct SampleMeta {
    std::string sample_id;
    std::optional<double> thickness_cm;
    std::optional<double> epr_ppm;
    double epr_rel_err = 0.06;

    [[nodiscard]] double require_thickness_cm() const {
        if (!thickness_cm) {
            throw MissingThickness("sample '" + sample_id +
                                   "' has no thickness; needed for the absorption conversion");
        }
        if (*thickness_cm <= 0.0) {
            throw Error("thickness must be positive, got " +
                        std::to_string(*thickness_cm) + " cm");
        }
        return *thickness_cm;
    }
};

/// Deduce the absorption coefficient spectrum (cm^-1) from a transmission
/// spectrum via the Lambert-Beer relation A = -log10(T)/d, or its
/// natural-logarithm variant A = -ln(T)/d. Percent input is first scaled
/// to a fraction.
[[nodiscard]] inline Spectrum to_absorption(const Spectrum& spec, const SampleMeta& meta,
                                            Convention convention) {
    if (!is_transmission(spec.quantity())) {
        throw AlreadyAbsorption("input is " + to_string(spec.quantity()) +
                                ", expected a transmission kind");
    }
    const double d = meta.require_thickness_cm();
    const double scale = spec.quantity() == Quantity::TransmissionPercent ? 0.01 : 1.0;

    std::vector<double> out(spec.size());
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const double t = spec.values()[i] * scale;
        if (t <= 0.0) {
            throw NonPositiveTransmission(spec.wavelengths_nm()[i], spec.values()[i]);
        }
        out[i] = convention == Convention::Decadic ? -std::log10(t) / d
                                                   : -std::log(t) / d;
    }
    return Spectrum(spec.wavelengths_nm(), std::move(out),
                    absorption_quantity(convention));
}

/// Place a spectrum on a new wavelength grid by linear interpolation.
/// The target grid must be strictly increasing and inside the data range.
[[nodiscard]] inline Spectrum resample(const Spectrum& spec,
                                       std::span<const double> target_grid_nm) {
    if (target_grid_nm.size() < 2) {
        throw Error("target grid needs at least 2 points");
    }
    for (std::size_t i = 1; i < target_grid_nm.size(); ++i) {
        if (!(target_grid_nm[i] > target_grid_nm[i - 1])) {
            throw Error("target grid not strictly increasing");
        }
    }
    std::vector<double> out;
    out.reserve(target_grid_nm.size());
    for (double wl : target_grid_nm) out.push_back(spec.value_at(wl));
    return Spectrum(std::vector<double>(target_grid_nm.begin(), target_grid_nm.end()),
                    std::move(out), spec.quantity());
}

/// Keep only the points with lo_nm <= wavelength <= hi_nm.
[[nodiscard]] inline Spectrum crop(const Spectrum& spec, double lo_nm, double hi_nm) {
    if (!(lo_nm < hi_nm)) {
        throw Error("crop range is empty: lo " + std::to_string(lo_nm) +
                    " >= hi " + std::to_string(hi_nm));
    }
    const auto& wl = spec.wavelengths_nm();
    auto first = std::lower_bound(wl.begin(), wl.end(), lo_nm);
    auto last = std::upper_bound(wl.begin(), wl.end(), hi_nm);
    const auto n = static_cast<std::size_t>(last - first);
    if (n < 2) {
        throw EmptyResult("crop to [" + std::to_string(lo_nm) + ", " +
                          std::to_string(hi_nm) + "] nm leaves " + std::to_string(n) +
                          " point(s)");
    }
    const auto offset = static_cast<std::size_t>(first - wl.begin());
    std::vector<double> w(first, last);
    std::vector<double> v(spec.values().begin() + static_cast<std::ptrdiff_t>(offset),
                          spec.values().begin() + static_cast<std::ptrdiff_t>(offset + n));
    return Spectrum(std::move(w), std::move(v), spec.quantity());
}

} // namespace nsfit
