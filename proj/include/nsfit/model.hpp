#pragma once

#include "nsfit/spectrum.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdlib>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nsfit {

/// One Gaussian absorption band a * exp(-(lambda - b)^2 / (2 c^2)).
/// amplitude in cm^-1, center and RMS width in nm.
struct GaussianBand {
    double amplitude = 0.0;
    double center_nm = 0.0;
    double width_nm = 1.0;

    void validate() const {
        if (amplitude < 0.0) {
            throw Error("band amplitude must be >= 0, got " + std::to_string(amplitude));
        }
        if (!(width_nm > 0.0)) {
            throw Error("band width must be > 0, got " + std::to_string(width_nm));
        }
    }
};

[[nodiscard]] inline double eval_gaussian(const GaussianBand& band, double wavelength_nm) {
    const double u = (wavelength_nm - band.center_nm) / band.width_nm;
    return band.amplitude * std::exp(-0.5 * u * u);
}

/// Background ramp R * lambda^-3 (R in cm^-1 nm^3).
[[nodiscard]] inline double eval_ramp(double ramp_factor, double wavelength_nm) {
    const double inv = 1.0 / wavelength_nm;
    return ramp_factor * inv * inv * inv;
}

/// Full parameter set of the decomposition model: Gaussian bands at
/// 270/360/520 nm, the lambda^-3 ramp, and the weight of the
/// electronic-grade reference spectrum. The 520 nm band is absent in
/// four-component mode.
struct ModelParams {
    GaussianBand g270;
    GaussianBand g360;
    std::optional<GaussianBand> g520;
    double ramp_factor = 0.0;  ///< R, cm^-1 nm^3
    double ref_weight = 0.0;   ///< dimensionless weight of the reference

    [[nodiscard]] bool five_component() const noexcept { return g520.has_value(); }

    /// 11 in five-component mode, 8 in four-component mode.
    [[nodiscard]] int n_params() const noexcept { return five_component() ? 11 : 8; }

    void validate() const {
        g270.validate();
        g360.validate();
        if (g520) g520->validate();
        if (ramp_factor < 0.0) {
            throw Error("ramp factor must be >= 0, got " + std::to_string(ramp_factor));
        }
        if (ref_weight < 0.0) {
            throw Error("reference weight must be >= 0, got " + std::to_string(ref_weight));
        }
    }

    /// Flat parameter vector in the fixed order
    /// [a270, b270, c270, a360, b360, c360, (a520, b520, c520,) R, ref_weight].
    [[nodiscard]] Eigen::VectorXd to_vector() const {
        Eigen::VectorXd p(n_params());
        int k = 0;
        p[k++] = g270.amplitude; p[k++] = g270.center_nm; p[k++] = g270.width_nm;
        p[k++] = g360.amplitude; p[k++] = g360.center_nm; p[k++] = g360.width_nm;
        if (g520) {
            p[k++] = g520->amplitude; p[k++] = g520->center_nm; p[k++] = g520->width_nm;
        }
        p[k++] = ramp_factor;
        p[k++] = ref_weight;
        return p;
    }

    /// Inverse of to_vector(); five_component selects the layout.
    [[nodiscard]] static ModelParams from_vector(const Eigen::VectorXd& p,
                                                 bool five_component) {
        const int expect = five_component ? 11 : 8;
        if (p.size() != expect) {
            throw Error("parameter vector has " + std::to_string(p.size()) +
                        " entries, expected " + std::to_string(expect));
        }
        ModelParams m;
        int k = 0;
        m.g270 = {p[k], p[k + 1], p[k + 2]}; k += 3;
        m.g360 = {p[k], p[k + 1], p[k + 2]}; k += 3;
        if (five_component) {
            m.g520 = GaussianBand{p[k], p[k + 1], p[k + 2]};
            k += 3;
        }
        m.ramp_factor = p[k++];
        m.ref_weight = p[k++];
        return m;
    }

    /// Human-readable name of parameter index i in the fixed order.
    [[nodiscard]] static std::string param_name(int i, bool five_component) {
        static const char* five[] = {"a270", "b270", "c270", "a360", "b360", "c360",
                                     "a520", "b520", "c520", "ramp_R", "ref_weight"};
        static const char* four[] = {"a270", "b270", "c270", "a360", "b360", "c360",
                                     "ramp_R", "ref_weight"};
        if (five_component) return five[i];
        return four[i];
    }
};

/// Where a reference spectrum came from.
enum class ReferenceOrigin { UserFile, BuiltInParametric };

/// Absorption spectrum of an electronic-grade (nominally defect-free)
/// diamond, used as offset and baseline in the decomposition. Values must
/// be non-negative and the spectrum must cover any grid it is evaluated on.
class ReferenceSpectrum {
public:
    ReferenceSpectrum(Spectrum spectrum, ReferenceOrigin origin)
        : spectrum_(std::move(spectrum)), origin_(origin) {
        if (!is_absorption(spectrum_.quantity())) {
            throw Error("reference spectrum must hold absorption data, got " +
                        to_string(spectrum_.quantity()));
        }
        for (double v : spectrum_.values()) {
            if (v < 0.0) {
                throw Error("reference spectrum has a negative value " + std::to_string(v));
            }
        }
    }

    [[nodiscard]] const Spectrum& spectrum() const noexcept { return spectrum_; }
    [[nodiscard]] ReferenceOrigin origin() const noexcept { return origin_; }
    [[nodiscard]] Convention convention() const { return convention_of(spectrum_.quantity()); }

    [[nodiscard]] bool covers(std::span<const double> grid_nm) const {
        return !grid_nm.empty() && grid_nm.front() >= spectrum_.min_wavelength_nm() &&
               grid_nm.back() <= spectrum_.max_wavelength_nm();
    }

    /// Reference values interpolated onto a grid. Throws GridOutOfRange
    /// when the grid extends beyond the reference coverage.
    [[nodiscard]] std::vector<double> values_on(std::span<const double> grid_nm) const {
        std::vector<double> out;
        out.reserve(grid_nm.size());
        for (double wl : grid_nm) out.push_back(spectrum_.value_at(wl));
        return out;
    }

private:
    Spectrum spectrum_;
    ReferenceOrigin origin_;
};

/// Parameters of the built-in parametric reference
/// A(lambda) = height / (1 + exp((lambda - edge_nm) / edge_width_nm)) + floor,
/// a logistic step standing in for the intrinsic absorption edge of an
/// electronic-grade diamond when no measured reference file is available.
struct BuiltinRefParams {
    double edge_nm = 230.0;
    double edge_width_nm = 3.0;
    double height = 10.0;  ///< plateau below the edge, cm^-1
    double floor = 0.0;    ///< flat level in the visible, cm^-1

    /// Parse "edge,width,height,floor" as used by the
    /// NSFIT_BUILTIN_REF_PARAMS environment override.
    [[nodiscard]] static BuiltinRefParams parse(const std::string& csv);

    /// Defaults, overridden by NSFIT_BUILTIN_REF_PARAMS when set.
    [[nodiscard]] static BuiltinRefParams from_env();
};

inline BuiltinRefParams BuiltinRefParams::parse(const std::string& csv) {
    BuiltinRefParams p;
    double* fields[] = {&p.edge_nm, &p.edge_width_nm, &p.height, &p.floor};
    std::size_t pos = 0;
    for (int i = 0; i < 4; ++i) {
        const std::size_t comma = csv.find(',', pos);
        const std::string tok = csv.substr(pos, comma == std::string::npos
                                                    ? std::string::npos
                                                    : comma - pos);
        std::size_t used = 0;
        try {
            *fields[i] = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw Error("cannot parse builtin reference parameters from '" + csv + "'");
        }
        if (used != tok.size()) {
            throw Error("trailing junk in builtin reference parameter '" + tok + "'");
        }
        if (comma == std::string::npos) {
            if (i != 3) throw Error("builtin reference override needs 4 values, got '" + csv + "'");
            break;
        }
        pos = comma + 1;
    }
    if (!(p.edge_width_nm > 0.0) || p.height < 0.0 || p.floor < 0.0) {
        throw Error("builtin reference parameters out of range in '" + csv + "'");
    }
    return p;
}

inline BuiltinRefParams BuiltinRefParams::from_env() {
    if (const char* env = std::getenv("NSFIT_BUILTIN_REF_PARAMS")) {
        return parse(env);
    }
    return BuiltinRefParams{};
}

/// Evaluate the built-in parametric reference on a grid.
[[nodiscard]] inline ReferenceSpectrum make_builtin_reference(
    std::span<const double> grid_nm, Convention convention,
    const BuiltinRefParams& p = BuiltinRefParams{}) {
    std::vector<double> vals;
    vals.reserve(grid_nm.size());
    for (double wl : grid_nm) {
        vals.push_back(p.height / (1.0 + std::exp((wl - p.edge_nm) / p.edge_width_nm)) +
                       p.floor);
    }
    return ReferenceSpectrum(
        Spectrum(std::vector<double>(grid_nm.begin(), grid_nm.end()), std::move(vals),
                 absorption_quantity(convention)),
        ReferenceOrigin::BuiltInParametric);
}

/// Model sum over a grid, taking reference values already aligned with it.
[[nodiscard]] inline std::vector<double> eval_model(const ModelParams& params,
                                                    std::span<const double> grid_nm,
                                                    std::span<const double> ref_values) {
    params.validate();
    if (ref_values.size() != grid_nm.size()) {
        throw Error("reference values not aligned with grid");
    }
    std::vector<double> out(grid_nm.size());
    for (std::size_t i = 0; i < grid_nm.size(); ++i) {
        const double wl = grid_nm[i];
        double y = eval_gaussian(params.g270, wl) + eval_gaussian(params.g360, wl) +
                   eval_ramp(params.ramp_factor, wl) + params.ref_weight * ref_values[i];
        if (params.g520) y += eval_gaussian(*params.g520, wl);
        out[i] = y;
    }
    return out;
}

/// Model sum over a grid; the reference is interpolated onto the grid and
/// must cover it.
[[nodiscard]] inline std::vector<double> eval_model(const ModelParams& params,
                                                    std::span<const double> grid_nm,
                                                    const ReferenceSpectrum& ref) {
    return eval_model(params, grid_nm, ref.values_on(grid_nm));
}

namespace detail {

/// Writes the three partials of one Gaussian band into columns k..k+2.
inline void gaussian_jacobian_cols(const GaussianBand& band,
                                   std::span<const double> grid_nm,
                                   Eigen::MatrixXd& jac, int k) {
    for (std::size_t i = 0; i < grid_nm.size(); ++i) {
        const double dl = grid_nm[i] - band.center_nm;
        const double u = dl / band.width_nm;
        const double g = std::exp(-0.5 * u * u);
        const auto r = static_cast<Eigen::Index>(i);
        jac(r, k) = g;
        jac(r, k + 1) = band.amplitude * g * dl / (band.width_nm * band.width_nm);
        jac(r, k + 2) = band.amplitude * g * dl * dl /
                        (band.width_nm * band.width_nm * band.width_nm);
    }
}

} // namespace detail

/// Analytic Jacobian of eval_model, n_points x n_params, with columns in
/// the to_vector() order
/// [a270, b270, c270, a360, b360, c360, (a520, b520, c520,) R, ref_weight].
[[nodiscard]] inline Eigen::MatrixXd jacobian(const ModelParams& params,
                                              std::span<const double> grid_nm,
                                              std::span<const double> ref_values) {
    params.validate();
    if (ref_values.size() != grid_nm.size()) {
        throw Error("reference values not aligned with grid");
    }
    const auto n = static_cast<Eigen::Index>(grid_nm.size());
    Eigen::MatrixXd jac(n, params.n_params());
    detail::gaussian_jacobian_cols(params.g270, grid_nm, jac, 0);
    detail::gaussian_jacobian_cols(params.g360, grid_nm, jac, 3);
    int k = 6;
    if (params.g520) {
        detail::gaussian_jacobian_cols(*params.g520, grid_nm, jac, k);
        k += 3;
    }
    for (std::size_t i = 0; i < grid_nm.size(); ++i) {
        const double inv = 1.0 / grid_nm[i];
        const auto r = static_cast<Eigen::Index>(i);
        jac(r, k) = inv * inv * inv;
        jac(r, k + 1) = ref_values[i];
    }
    return jac;
}

[[nodiscard]] inline Eigen::MatrixXd jacobian(const ModelParams& params,
                                              std::span<const double> grid_nm,
                                              const ReferenceSpectrum& ref) {
    return jacobian(params, grid_nm, ref.values_on(grid_nm));
}

} // namespace nsfit
