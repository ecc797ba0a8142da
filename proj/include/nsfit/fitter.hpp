#pragma once

#include "nsfit/model.hpp"
#include "nsfit/spectrum.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace nsfit {

enum class FitMode { FiveComponent, FourComponent };

/// Inclusive box constraint for one fit parameter.
struct Bounds {
    double lo = 0.0;
    double hi = 0.0;

    [[nodiscard]] double span() const noexcept { return hi - lo; }
};

/// Which side of its box a parameter landed on.
enum class BoundSide { Lower, Upper };

struct BoundaryHit {
    std::string param;
    BoundSide side = BoundSide::Lower;
};

namespace limits {
// Finite stand-ins for "unbounded above". Values this large are far
// outside anything physical for diamond UV-Vis coefficients.
inline constexpr double max_amplitude = 1.0e4;   // cm^-1
inline constexpr double max_ramp = 1.0e11;       // cm^-1 nm^3
inline constexpr double max_ref_weight = 1.0e4;  // dimensionless
} // namespace limits

/// Fit configuration: component mode, wavelength window, per-parameter
/// boxes, and solver tolerances.
///
/// The 270 nm band box (center 268-272 nm, RMS width 13-27 nm) doubles as
/// the reliability check: a fit whose b270 or c270 lands on a bound is
/// flagged unreliable.
struct FitConfig {
    FitMode mode = FitMode::FiveComponent;

    double window_lo_nm = 200.0;
    double window_hi_nm = 800.0;
    /// Convenience flag forcing the upper window edge to 650 nm, for
    /// spectra with features above 650 nm that the model does not cover.
    bool cutoff_650 = false;

    Bounds a270{0.0, limits::max_amplitude};
    Bounds b270{268.0, 272.0};
    Bounds c270{13.0, 27.0};
    Bounds a360{0.0, limits::max_amplitude};
    Bounds b360{340.0, 380.0};
    Bounds c360{20.0, 80.0};
    Bounds a520{0.0, limits::max_amplitude};
    Bounds b520{490.0, 550.0};
    Bounds c520{20.0, 90.0};
    Bounds ramp{0.0, limits::max_ramp};
    Bounds ref_weight{0.0, limits::max_ref_weight};

    int max_iterations = 200;
    double step_tolerance = 1e-10;
    double residual_tolerance = 1e-12;
    /// A parameter within boundary_epsilon * (hi - lo) of a bound counts
    /// as a boundary hit.
    double boundary_epsilon = 1e-6;

    [[nodiscard]] double effective_window_hi() const noexcept {
        return cutoff_650 ? std::min(window_hi_nm, 650.0) : window_hi_nm;
    }

    [[nodiscard]] bool five_component() const noexcept {
        return mode == FitMode::FiveComponent;
    }

    [[nodiscard]] int n_params() const noexcept { return five_component() ? 11 : 8; }

    /// Lower/upper bound vectors in the ModelParams::to_vector() order.
    [[nodiscard]] std::pair<Eigen::VectorXd, Eigen::VectorXd> bound_vectors() const {
        std::vector<Bounds> all{a270, b270, c270, a360, b360, c360};
        if (five_component()) {
            all.push_back(a520);
            all.push_back(b520);
            all.push_back(c520);
        }
        all.push_back(ramp);
        all.push_back(ref_weight);
        Eigen::VectorXd lo(all.size()), hi(all.size());
        for (std::size_t i = 0; i < all.size(); ++i) {
            lo[static_cast<Eigen::Index>(i)] = all[i].lo;
            hi[static_cast<Eigen::Index>(i)] = all[i].hi;
        }
        return {lo, hi};
    }

    void validate() const {
        if (!(window_lo_nm < effective_window_hi())) {
            throw Error("fit window is empty: [" + std::to_string(window_lo_nm) + ", " +
                        std::to_string(effective_window_hi()) + "] nm");
        }
        auto [lo, hi] = bound_vectors();
        for (Eigen::Index i = 0; i < lo.size(); ++i) {
            if (!(lo[i] < hi[i])) {
                throw Error("bounds for " +
                            ModelParams::param_name(static_cast<int>(i), five_component()) +
                            " have lo >= hi");
            }
        }
        if (max_iterations < 1) throw Error("max_iterations must be >= 1");
        if (!(step_tolerance > 0.0) || !(boundary_epsilon > 0.0)) {
            throw Error("tolerances must be positive");
        }
    }
};

/// Outcome of one fit. mu270 is the fitted height of the 270 nm band
/// (equal to params.g270.amplitude); reliable means the fit converged with
/// b270 and c270 strictly inside their boxes.
struct FitResult {
    ModelParams params;
    bool converged = false;
    int iterations = 0;
    double rss = 0.0;   ///< sum of squared residuals, cm^-2
    double rmse = 0.0;  ///< cm^-1
    std::vector<BoundaryHit> boundary_hits;
    double mu270 = 0.0;  ///< cm^-1
    bool reliable = false;
    Convention convention = Convention::Decadic;  ///< of the fitted spectrum
    double window_lo_nm = 0.0;  ///< window actually applied
    double window_hi_nm = 0.0;

    [[nodiscard]] bool hit(const std::string& name) const {
        return std::any_of(boundary_hits.begin(), boundary_hits.end(),
                           [&](const BoundaryHit& h) { return h.param == name; });
    }
};

namespace detail {

inline double interp_at(std::span<const double> grid, std::span<const double> vals,
                        double x) {
    auto it = std::lower_bound(grid.begin(), grid.end(), x);
    auto i = static_cast<std::size_t>(it - grid.begin());
    if (i < grid.size() && grid[i] == x) return vals[i];
    const double t = (x - grid[i - 1]) / (grid[i] - grid[i - 1]);
    return vals[i - 1] + t * (vals[i] - vals[i - 1]);
}

inline double sum_sq(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

} // namespace detail

/// Deterministic starting point for the solver, built from a handful of
/// anchor wavelengths:
///  - ref_weight from the spectrum/reference ratio over the 700-800 nm
///    tail (falling back to a least-squares projection when the
///    reference carries no signal there),
///  - ramp factor from the 450 nm residual after offset removal,
///  - band amplitudes from the residuals at 270/360/520 nm after offset
///    and ramp removal, floored at a small positive value.
[[nodiscard]] inline ModelParams initial_guess(const Spectrum& spec,
                                               const ReferenceSpectrum& ref,
                                               const FitConfig& config) {
    config.validate();
    if (!is_absorption(spec.quantity())) {
        throw Error("initial_guess expects an absorption spectrum, got " +
                    to_string(spec.quantity()));
    }
    const Spectrum windowed = crop(spec, config.window_lo_nm, config.effective_window_hi());
    const auto& grid = windowed.wavelengths_nm();
    const auto& y = windowed.values();
    const std::vector<double> refv = ref.values_on(grid);

    std::vector<double> anchors{270.0, 360.0, 450.0};
    if (config.five_component()) anchors.push_back(520.0);
    for (double a : anchors) {
        if (a < grid.front() || a > grid.back()) {
            throw WindowTooNarrow("fit window [" + std::to_string(grid.front()) + ", " +
                                  std::to_string(grid.back()) + "] nm lacks the " +
                                  std::to_string(a) + " nm anchor");
        }
    }

    // Offset weight from the tail region, where the model is expected to
    // be reference-dominated.
    const double tail_lo = std::max(
        grid.front(),
        std::min(700.0, grid.back() - 0.15 * (grid.back() - grid.front())));
    double sum_y_tail = 0.0, sum_ref_tail = 0.0;
    double max_ref = 0.0, sum_yref = 0.0, sum_refref = 0.0;
    std::size_t n_tail = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        max_ref = std::max(max_ref, refv[i]);
        sum_yref += y[i] * refv[i];
        sum_refref += refv[i] * refv[i];
        if (grid[i] >= tail_lo) {
            sum_y_tail += y[i];
            sum_ref_tail += refv[i];
            ++n_tail;
        }
    }
    double w = 0.0;
    if (n_tail > 0 && sum_ref_tail > 1e-9 * max_ref * static_cast<double>(n_tail)) {
        w = sum_y_tail / sum_ref_tail;
    } else if (sum_refref > 0.0) {
        w = sum_yref / sum_refref;
    }
    w = std::clamp(w, config.ref_weight.lo, config.ref_weight.hi);

    const auto ref_at = [&](double x) { return detail::interp_at(grid, refv, x); };
    const auto y_at = [&](double x) { return detail::interp_at(grid, y, x); };

    const double resid450 = y_at(450.0) - w * ref_at(450.0);
    double ramp = std::max(resid450, 0.0) * 450.0 * 450.0 * 450.0;
    ramp = std::clamp(ramp, config.ramp.lo, config.ramp.hi);

    constexpr double amp_floor = 1e-6;
    const auto band_amp = [&](double center) {
        const double resid = y_at(center) - w * ref_at(center) - eval_ramp(ramp, center);
        return std::max(resid, amp_floor);
    };

    ModelParams guess;
    guess.g270 = {std::clamp(band_amp(270.0), config.a270.lo, config.a270.hi), 270.0, 20.0};
    guess.g360 = {std::clamp(band_amp(360.0), config.a360.lo, config.a360.hi), 360.0, 40.0};
    if (config.five_component()) {
        guess.g520 = GaussianBand{std::clamp(band_amp(520.0), config.a520.lo, config.a520.hi),
                                  520.0, 40.0};
    }
    guess.ramp_factor = ramp;
    guess.ref_weight = w;
    return guess;
}

/// Box-constrained nonlinear least-squares fit of the decomposition model
/// to an absorption spectrum.
///
/// The solver is a Levenberg-Marquardt iteration on the analytic Jacobian
/// with unit column scaling; each trial step is projected onto the box
/// before evaluation. Residuals are unweighted. The algorithm is fully
/// deterministic: identical inputs give bit-identical results.
///
/// Failing to meet the tolerances within max_iterations is not an error;
/// the best parameters found are returned with converged = false.
[[nodiscard]] inline FitResult fit(const Spectrum& spec, const ReferenceSpectrum& ref,
                                   const FitConfig& config,
                                   const std::optional<ModelParams>& init = std::nullopt) {
    config.validate();
    if (!is_absorption(spec.quantity())) {
        throw Error("fit expects an absorption spectrum, got " + to_string(spec.quantity()));
    }
    const Convention conv = convention_of(spec.quantity());
    if (ref.convention() != conv) {
        throw ConventionMismatch("spectrum is " + to_string(conv) + " but reference is " +
                                 to_string(ref.convention()));
    }

    const Spectrum windowed = crop(spec, config.window_lo_nm, config.effective_window_hi());
    const auto& grid = windowed.wavelengths_nm();
    const auto& y = windowed.values();
    const std::vector<double> refv = ref.values_on(grid);

    const int n_params = config.n_params();
    if (static_cast<int>(grid.size()) < n_params) {
        throw DegenerateInput(std::to_string(grid.size()) + " points cannot constrain " +
                              std::to_string(n_params) + " parameters");
    }

    auto [lo, hi] = config.bound_vectors();
    const bool five = config.five_component();

    ModelParams start;
    if (init) {
        if (init->five_component() != five) {
            throw Error("initial parameters do not match the configured component mode");
        }
        start = *init;
    } else {
        start = initial_guess(spec, ref, config);
    }
    Eigen::VectorXd p = start.to_vector().cwiseMax(lo).cwiseMin(hi);

    const auto evaluate = [&](const Eigen::VectorXd& v) {
        return eval_model(ModelParams::from_vector(v, five), grid, refv);
    };

    std::vector<double> model = evaluate(p);
    double rss = detail::sum_sq(y, model);

    bool converged = false;
    int iterations = 0;
    double mu = 1e-3;
    constexpr double mu_max = 1e15;
    constexpr double mu_min = 1e-12;

    for (; iterations < config.max_iterations && !converged; ++iterations) {
        const Eigen::MatrixXd jac =
            jacobian(ModelParams::from_vector(p, five), grid, refv);

        // Residual in the least-squares sense: y - f(p).
        Eigen::VectorXd resid(jac.rows());
        for (Eigen::Index i = 0; i < resid.size(); ++i) {
            resid[i] = y[static_cast<std::size_t>(i)] - model[static_cast<std::size_t>(i)];
        }

        // Coordinates sitting on a bound with the descent direction
        // pointing outward are frozen for this iteration. Solving the
        // reduced system keeps predicted and actual improvement in
        // agreement; naive projection of the full step stalls the damping
        // schedule once any parameter pins.
        const Eigen::VectorXd grad = jac.transpose() * resid;
        std::vector<bool> frozen(static_cast<std::size_t>(n_params), false);
        int n_free = 0;
        for (int j = 0; j < n_params; ++j) {
            frozen[static_cast<std::size_t>(j)] = (p[j] <= lo[j] && grad[j] < 0.0) ||
                                                  (p[j] >= hi[j] && grad[j] > 0.0);
            if (!frozen[static_cast<std::size_t>(j)]) ++n_free;
        }
        if (n_free == 0) {
            // Every parameter is pinned against its bound: constrained
            // stationary point.
            converged = true;
            break;
        }

        // Unit column scaling keeps the normal equations well conditioned
        // despite the huge spread between the ramp and band columns.
        Eigen::VectorXd col_scale(n_params);
        for (int j = 0; j < n_params; ++j) {
            col_scale[j] = std::max(jac.col(j).norm(), 1e-12);
        }
        Eigen::MatrixXd jac_s = jac * col_scale.cwiseInverse().asDiagonal();
        for (int j = 0; j < n_params; ++j) {
            if (frozen[static_cast<std::size_t>(j)]) jac_s.col(j).setZero();
        }
        const Eigen::MatrixXd normal = jac_s.transpose() * jac_s;
        const Eigen::VectorXd grad_s = jac_s.transpose() * resid;

        bool accepted = false;
        while (mu <= mu_max) {
            Eigen::MatrixXd damped = normal;
            damped.diagonal().array() += mu;
            const Eigen::VectorXd step_s = damped.ldlt().solve(grad_s);
            const Eigen::VectorXd candidate =
                (p + step_s.cwiseQuotient(col_scale)).cwiseMax(lo).cwiseMin(hi);

            const std::vector<double> cand_model = evaluate(candidate);
            const double cand_rss = detail::sum_sq(y, cand_model);
            if (cand_rss < rss) {
                double max_rel_step = 0.0;
                for (int j = 0; j < n_params; ++j) {
                    max_rel_step = std::max(max_rel_step,
                                            std::abs(candidate[j] - p[j]) /
                                                std::max(std::abs(candidate[j]), 1.0));
                }
                const double improvement = rss - cand_rss;
                p = candidate;
                model = cand_model;
                const double prev_rss = rss;
                rss = cand_rss;
                mu = std::max(mu * 0.3, mu_min);
                accepted = true;
                // No absolute residual floor: a noiseless synthetic fit
                // keeps polishing until the relative gain dies out, which
                // is what pushes weakly constrained parameters (the ramp)
                // to full precision.
                if (max_rel_step <= config.step_tolerance ||
                    improvement <= config.residual_tolerance * prev_rss) {
                    converged = true;
                }
                break;
            }
            mu *= 4.0;
        }
        if (!accepted) {
            // No feasible damped step improves the objective: the iterate
            // is stationary (possibly pinned by the box) to working
            // precision.
            converged = true;
        }
    }

    FitResult result;
    result.params = ModelParams::from_vector(p, five);
    result.converged = converged;
    result.iterations = iterations;
    result.rss = rss;
    result.rmse = std::sqrt(rss / static_cast<double>(grid.size()));
    result.mu270 = result.params.g270.amplitude;
    result.convention = conv;
    result.window_lo_nm = grid.front();
    result.window_hi_nm = grid.back();

    for (int j = 0; j < n_params; ++j) {
        const double margin = config.boundary_epsilon * (hi[j] - lo[j]);
        if (p[j] <= lo[j] + margin) {
            result.boundary_hits.push_back({ModelParams::param_name(j, five), BoundSide::Lower});
        } else if (p[j] >= hi[j] - margin) {
            result.boundary_hits.push_back({ModelParams::param_name(j, five), BoundSide::Upper});
        }
    }
    result.reliable =
        result.converged && !result.hit("b270") && !result.hit("c270");
    return result;
}

/// Pointwise data minus model over the fit window of a result.
[[nodiscard]] inline Spectrum residual_spectrum(const Spectrum& spec, const FitResult& result,
                                                const ReferenceSpectrum& ref) {
    const Spectrum windowed = crop(spec, result.window_lo_nm, result.window_hi_nm);
    const std::vector<double> model =
        eval_model(result.params, windowed.wavelengths_nm(), ref);
    std::vector<double> resid(windowed.size());
    for (std::size_t i = 0; i < resid.size(); ++i) {
        resid[i] = windowed.values()[i] - model[i];
    }
    return Spectrum(windowed.wavelengths_nm(), std::move(resid), windowed.quantity());
}

} // namespace nsfit
