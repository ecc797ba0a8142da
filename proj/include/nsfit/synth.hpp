#pragma once

#include "nsfit/model.hpp"
#include "nsfit/spectrum.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace nsfit {

/// Recipe for a synthetic spectrum: known truth parameters, a reference,
/// optional contaminant bands outside the model (e.g. an 800 nm feature),
/// and seeded additive white noise on the absorption values.
struct SynthSpec {
    ModelParams truth;
    ReferenceSpectrum ref;
    std::vector<double> grid_nm;
    double noise_sigma = 0.0;  ///< cm^-1
    std::uint64_t rng_seed = 0;
    std::vector<GaussianBand> extra_bands;

    void validate() const {
        truth.validate();
        if (noise_sigma < 0.0) throw Error("noise sigma must be >= 0");
        if (grid_nm.size() < 2) throw Error("synthesis grid needs at least 2 points");
        for (std::size_t i = 1; i < grid_nm.size(); ++i) {
            if (!(grid_nm[i] > grid_nm[i - 1])) {
                throw Error("synthesis grid not strictly increasing");
            }
        }
    }
};

/// Uniform grid helper, inclusive of both ends when the step divides the
/// span exactly.
[[nodiscard]] inline std::vector<double> uniform_grid(double lo_nm, double hi_nm,
                                                      double step_nm) {
    if (!(step_nm > 0.0) || !(lo_nm < hi_nm)) {
        throw Error("invalid grid specification");
    }
    std::vector<double> grid;
    const auto n = static_cast<std::size_t>(std::floor((hi_nm - lo_nm) / step_nm + 0.5)) + 1;
    grid.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double wl = lo_nm + static_cast<double>(i) * step_nm;
        if (wl > hi_nm + 1e-9) break;
        grid.push_back(wl);
    }
    return grid;
}

/// Forward model evaluation plus contaminants plus seeded Gaussian noise.
/// Deterministic for a fixed seed. The output convention follows the
/// reference spectrum.
[[nodiscard]] inline Spectrum generate_absorption(const SynthSpec& s) {
    s.validate();
    std::vector<double> values = eval_model(s.truth, s.grid_nm, s.ref);
    for (const auto& band : s.extra_bands) {
        band.validate();
        for (std::size_t i = 0; i < s.grid_nm.size(); ++i) {
            values[i] += eval_gaussian(band, s.grid_nm[i]);
        }
    }
    if (s.noise_sigma > 0.0) {
        std::mt19937_64 rng(s.rng_seed);
        std::normal_distribution<double> noise(0.0, s.noise_sigma);
        for (double& v : values) v += noise(rng);
    }
    return Spectrum(s.grid_nm, std::move(values),
                    absorption_quantity(s.ref.convention()));
}

/// Invert the Lambert-Beer relation: T = 10^(-A d) or exp(-A d) for a
/// plate of the given thickness, returned as a transmission-fraction
/// spectrum. The convention must match the reference used in synthesis.
[[nodiscard]] inline Spectrum generate_transmission(const SynthSpec& s, double thickness_cm,
                                                    Convention convention) {
    if (!(thickness_cm > 0.0)) {
        throw Error("thickness must be positive, got " + std::to_string(thickness_cm));
    }
    if (convention != s.ref.convention()) {
        throw ConventionMismatch("requested " + to_string(convention) +
                                 " transmission from a " + to_string(s.ref.convention()) +
                                 " reference");
    }
    const Spectrum absorption = generate_absorption(s);
    std::vector<double> t(absorption.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double ad = absorption.values()[i] * thickness_cm;
        t[i] = convention == Convention::Decadic ? std::pow(10.0, -ad) : std::exp(-ad);
    }
    return Spectrum(absorption.wavelengths_nm(), std::move(t),
                    Quantity::TransmissionFraction);
}

} // namespace nsfit
