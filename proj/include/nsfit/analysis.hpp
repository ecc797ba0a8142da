#pragma once

#include "nsfit/errors.hpp"
#include "nsfit/fitter.hpp"
#include "nsfit/spectrum.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace nsfit {

/// Absorption cross-section of the 270 nm band: the proportionality
/// constant between the fitted band height mu270 (cm^-1) and the neutral
/// substitutional nitrogen concentration (ppm). The uncertainty is the
/// half-width of a 95% confidence interval.
struct CrossSection {
    double value = 0.0;        ///< cm^-1 ppm^-1
    double uncertainty = 0.0;  ///< cm^-1 ppm^-1
    Convention convention = Convention::Decadic;

    void validate() const {
        if (!(value > 0.0)) {
            throw Error("cross-section must be positive, got " + std::to_string(value));
        }
        if (uncertainty < 0.0) {
            throw Error("cross-section uncertainty must be >= 0");
        }
    }

    /// 1.96 +/- 0.15 cm^-1 ppm^-1, for decadic absorption coefficients.
    [[nodiscard]] static CrossSection builtin_decadic() noexcept {
        return {1.96, 0.15, Convention::Decadic};
    }

    /// 4.51 +/- 0.35 cm^-1 ppm^-1, for natural-log absorption coefficients.
    [[nodiscard]] static CrossSection builtin_natural() noexcept {
        return {4.51, 0.35, Convention::Natural};
    }

    [[nodiscard]] static CrossSection builtin(Convention c) noexcept {
        return c == Convention::Decadic ? builtin_decadic() : builtin_natural();
    }
};

struct ConcentrationEstimate {
    double ppm = 0.0;
    double ppm_uncertainty = 0.0;
    double mu270 = 0.0;  ///< cm^-1
    CrossSection cross_section_used;
};

/// Fit error on mu270 assumed when the caller does not provide one.
inline constexpr double default_mu270_rel_err = 0.01;

/// N_s^0 concentration from the fitted 270 nm band height,
/// [N_s^0] = mu270 / sigma. Relative uncertainties of the band height and
/// the cross-section combine in quadrature.
///
/// mu270 must be expressed in the same logarithm convention as the
/// cross-section; pass the convention it was measured in.
[[nodiscard]] inline ConcentrationEstimate concentration(double mu270, double mu270_rel_err,
                                                         const CrossSection& cs,
                                                         Convention mu_convention) {
    cs.validate();
    if (mu_convention != cs.convention) {
        throw ConventionMismatch("mu270 is " + to_string(mu_convention) +
                                 " but the cross-section is " + to_string(cs.convention));
    }
    if (mu270 < 0.0) {
        throw Error("mu270 must be >= 0, got " + std::to_string(mu270));
    }
    if (mu270_rel_err < 0.0) {
        throw Error("mu270 relative error must be >= 0");
    }
    ConcentrationEstimate est;
    est.mu270 = mu270;
    est.cross_section_used = cs;
    est.ppm = mu270 / cs.value;
    const double rel =
        std::sqrt(mu270_rel_err * mu270_rel_err +
                  (cs.uncertainty / cs.value) * (cs.uncertainty / cs.value));
    est.ppm_uncertainty = est.ppm * rel;
    return est;
}

/// Concentration from a fit result, using the convention recorded there.
[[nodiscard]] inline ConcentrationEstimate concentration(
    const FitResult& result, const CrossSection& cs,
    double mu270_rel_err = default_mu270_rel_err) {
    return concentration(result.mu270, mu270_rel_err, cs, result.convention);
}

/// Cross-section in cm^2, converted per site via
/// sigma_cm2 = sigma * 1e6 * m_C / rho_diamond.
[[nodiscard]] inline double cross_section_cm2(const CrossSection& cs) {
    constexpr double carbon_mass_g = 1.99e-23;     // atomic mass of 12C
    constexpr double diamond_density = 3.51;       // g/cm^3
    return cs.value * 1.0e6 * carbon_mass_g / diamond_density;
}

enum class CalibrationModel { ThroughOrigin, WithIntercept };

/// Linear regression of band height against EPR concentration. The slope
/// is the absorption cross-section; its error is a 95% confidence
/// interval from the t-distribution.
struct CalibrationResult {
    double slope = 0.0;                 ///< cm^-1 ppm^-1
    double slope_ci95_half_width = 0.0; ///< infinite when dof = 0
    CalibrationModel model = CalibrationModel::ThroughOrigin;
    std::optional<double> intercept;    ///< cm^-1, WithIntercept only
    int n_points = 0;
    std::vector<double> residuals;      ///< cm^-1, per input point

    [[nodiscard]] bool ci_defined() const noexcept {
        return std::isfinite(slope_ci95_half_width);
    }
};

/// One calibration point: EPR concentration (ppm) against fitted band
/// height (cm^-1).
struct CalibrationPoint {
    double ppm = 0.0;
    double mu270 = 0.0;
};

/// Regress mu270 on ppm. ThroughOrigin uses the closed form
/// slope = sum(x*y) / sum(x^2) with n-1 degrees of freedom for the CI;
/// WithIntercept is ordinary least squares with n-2. A single
/// through-origin point (or two points with an intercept) still yields a
/// slope, with an infinite CI half-width.
[[nodiscard]] inline CalibrationResult calibrate(const std::vector<CalibrationPoint>& pairs,
                                                 CalibrationModel model) {
    const int n = static_cast<int>(pairs.size());
    const int min_points = model == CalibrationModel::ThroughOrigin ? 1 : 2;
    if (n < min_points) {
        throw InsufficientPoints(std::to_string(n) + " point(s) cannot determine a " +
                                 (model == CalibrationModel::ThroughOrigin
                                      ? "through-origin slope"
                                      : "slope and intercept"));
    }
    for (const auto& p : pairs) {
        if (!(p.ppm > 0.0)) {
            throw Error("calibration concentrations must be positive, got " +
                        std::to_string(p.ppm) + " ppm");
        }
    }

    CalibrationResult out;
    out.model = model;
    out.n_points = n;
    out.residuals.reserve(pairs.size());

    double sum_x = 0.0, sum_y = 0.0, sum_xx = 0.0, sum_xy = 0.0;
    for (const auto& p : pairs) {
        sum_x += p.ppm;
        sum_y += p.mu270;
        sum_xx += p.ppm * p.ppm;
        sum_xy += p.ppm * p.mu270;
    }

    int dof = 0;
    double slope_var_unit = 0.0;  // Var(slope) = s^2 * slope_var_unit
    if (model == CalibrationModel::ThroughOrigin) {
        if (sum_xx <= 0.0) throw DegenerateX("sum of squared concentrations is zero");
        out.slope = sum_xy / sum_xx;
        for (const auto& p : pairs) out.residuals.push_back(p.mu270 - out.slope * p.ppm);
        dof = n - 1;
        slope_var_unit = 1.0 / sum_xx;
    } else {
        const double nd = static_cast<double>(n);
        const double sxx = sum_xx - sum_x * sum_x / nd;
        if (sxx <= 0.0) {
            throw DegenerateX("all concentrations identical; slope undefined");
        }
        const double sxy = sum_xy - sum_x * sum_y / nd;
        out.slope = sxy / sxx;
        out.intercept = (sum_y - out.slope * sum_x) / nd;
        for (const auto& p : pairs) {
            out.residuals.push_back(p.mu270 - (*out.intercept + out.slope * p.ppm));
        }
        dof = n - 2;
        slope_var_unit = 1.0 / sxx;
    }

    if (dof < 1) {
        out.slope_ci95_half_width = std::numeric_limits<double>::infinity();
        return out;
    }
    double rss = 0.0;
    for (double r : out.residuals) rss += r * r;
    const double s2 = rss / static_cast<double>(dof);
    const boost::math::students_t_distribution<double> tdist(static_cast<double>(dof));
    const double t975 = boost::math::quantile(tdist, 0.975);
    out.slope_ci95_half_width = t975 * std::sqrt(s2 * slope_var_unit);
    return out;
}

/// Concentration window accessible to an instrument: invert [N] =
/// A / (d * sigma) at the smallest and largest measurable absorbance.
/// Absorbance limits are optical densities (dimensionless), in the same
/// logarithm convention as the cross-section.
[[nodiscard]] inline std::pair<double, double> detectable_range(
    double thickness_cm, double min_detectable_absorbance,
    double max_measurable_absorbance, const CrossSection& cs) {
    cs.validate();
    if (!(thickness_cm > 0.0)) {
        throw Error("thickness must be positive, got " + std::to_string(thickness_cm));
    }
    if (!(min_detectable_absorbance > 0.0) ||
        !(min_detectable_absorbance < max_measurable_absorbance)) {
        throw InvalidLimits("need 0 < A_noise < A_max, got A_noise = " +
                            std::to_string(min_detectable_absorbance) + ", A_max = " +
                            std::to_string(max_measurable_absorbance));
    }
    const double denom = thickness_cm * cs.value;
    return {min_detectable_absorbance / denom, max_measurable_absorbance / denom};
}

/// Default instrument absorbance limits used by the CLI when none are
/// given: a noise floor of 5.9e-4 OD and a saturation ceiling of 2.3 OD.
/// With a 300 um plate and the decadic cross-section these give the
/// canonical 0.01-39 ppm window.
inline constexpr double default_noise_absorbance = 5.9e-4;
inline constexpr double default_max_absorbance = 2.3;

} // namespace nsfit
