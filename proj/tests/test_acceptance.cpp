// Acceptance harness. Nine end-to-end checks pin the published anchor
// numbers (calibration slope, cross-sections, detection limits) and the
// statistical behavior of the solver (recovery, Jacobian, reliability
// protocol). Each check prints exactly one PASS/FAIL line; the exit code
// is the number of failures.

#include "nsfit/nsfit.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

using namespace nsfit;

namespace {

int failures = 0;

void report(int criterion, bool ok, const std::string& label, const std::string& detail) {
    std::printf("%s criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", criterion,
                label.c_str(), detail.c_str());
    if (!ok) ++failures;
}

std::string num(double v, const char* fmt = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

const std::vector<CalibrationPoint> epr_pairs{
    {3.2, 5.9}, {9.5, 17.7}, {5.2, 10.9}, {19.3, 37.2}, {11.2, 24.7}, {7.8, 13.9},
};

ModelParams random_truth(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto in = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
    ModelParams p;
    p.g270 = {in(2.0, 40.0), in(268.5, 271.5), in(14.0, 26.0)};
    p.g360 = {p.g270.amplitude * in(0.1, 0.3), in(345.0, 375.0), in(25.0, 70.0)};
    p.g520 = GaussianBand{p.g270.amplitude * in(0.05, 0.2), in(495.0, 545.0),
                          in(25.0, 80.0)};
    p.ramp_factor = in(2.0e5, 3.0e7);
    p.ref_weight = in(0.5, 2.0);
    return p;
}

double worst_param_rel_err(const ModelParams& truth, const ModelParams& fitted) {
    const Eigen::VectorXd t = truth.to_vector();
    const Eigen::VectorXd f = fitted.to_vector();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        worst = std::max(worst, std::abs(f[i] - t[i]) / std::max(std::abs(t[i]), 1e-12));
    }
    return worst;
}

// 1. Slope of the through-origin calibration on the six published
//    (EPR ppm, mu270) pairs: must match an independent closed-form
//    sum(x*y)/sum(x^2) oracle and land within 0.02 of 1.96.
void criterion_1() {
    const auto t0 = Clock::now();
    constexpr double oracle_tol = 1e-12;
    constexpr double anchor = 1.96, anchor_tol = 0.02;
    constexpr double time_budget_s = 1.0;

    double sxy = 0.0, sxx = 0.0;
    for (const auto& p : epr_pairs) {
        sxy += p.ppm * p.mu270;
        sxx += p.ppm * p.ppm;
    }
    const double oracle = sxy / sxx;

    const CalibrationResult r = calibrate(epr_pairs, CalibrationModel::ThroughOrigin);
    const double elapsed = seconds_since(t0);

    const bool ok = std::abs(r.slope - oracle) <= oracle_tol &&
                    std::abs(r.slope - anchor) <= anchor_tol && elapsed < time_budget_s;
    report(1, ok, "calibration slope from the six EPR pairs",
           "slope " + num(r.slope) + ", oracle " + num(oracle) + ", " +
               num(elapsed, "%.3f") + " s");
}

// 2. Each published sample's concentration mu270/sigma agrees with its
//    EPR value within 15% relative; the division is re-done inline as the
//    oracle.
void criterion_2() {
    const auto t0 = Clock::now();
    constexpr double oracle_tol = 1e-12;
    constexpr double epr_tol = 0.15;
    constexpr double time_budget_s = 1.0;

    const CrossSection cs = CrossSection::builtin_decadic();
    double worst = 0.0;
    bool oracle_ok = true;
    for (const auto& p : epr_pairs) {
        const double lib = concentration(p.mu270, 0.0, cs, Convention::Decadic).ppm;
        const double oracle = p.mu270 / 1.96;
        oracle_ok = oracle_ok && std::abs(lib - oracle) <= oracle_tol * oracle;
        worst = std::max(worst, std::abs(lib - p.ppm) / p.ppm);
    }
    const double elapsed = seconds_since(t0);

    const bool ok = oracle_ok && worst <= epr_tol && elapsed < time_budget_s;
    report(2, ok, "per-sample EPR consistency",
           "worst deviation " + num(worst * 100.0, "%.2f") + "%, " + num(elapsed, "%.3f") +
               " s");
}

// 3. The built-in cross-section pair must encode the decadic/natural
//    factor: 4.51/1.96 vs ln 10, and a spectrum fitted through both
//    routes must give the same concentration within 0.2%.
void criterion_3() {
    constexpr double route_tol = 0.002;

    const double ratio = CrossSection::builtin_natural().value /
                         CrossSection::builtin_decadic().value;
    const double ratio_err = std::abs(ratio - std::log(10.0)) / std::log(10.0);

    ModelParams truth;
    truth.g270 = {5.9, 270.0, 20.0};
    truth.g360 = {1.2, 360.0, 40.0};
    truth.g520 = GaussianBand{0.5, 520.0, 50.0};
    truth.ramp_factor = 8.0e6;
    truth.ref_weight = 1.0;
    const std::vector<double> grid = uniform_grid(200.0, 800.0, 1.0);

    const ReferenceSpectrum ref_dec = make_builtin_reference(grid, Convention::Decadic);
    const Spectrum spec_dec = generate_absorption(SynthSpec{truth, ref_dec, grid, 0.0, 0, {}});
    const FitResult fit_dec = fit(spec_dec, ref_dec, FitConfig{});
    const double ppm_dec =
        concentration(fit_dec, CrossSection::builtin_decadic(), 0.0).ppm;

    // same physical sample, expressed as a natural-log coefficient
    std::vector<double> nat_values(spec_dec.values());
    for (double& v : nat_values) v *= std::log(10.0);
    const Spectrum spec_nat(grid, std::move(nat_values), Quantity::AbsorptionNatural);
    const ReferenceSpectrum ref_nat = make_builtin_reference(grid, Convention::Natural);
    const FitResult fit_nat = fit(spec_nat, ref_nat, FitConfig{});
    const double ppm_nat =
        concentration(fit_nat, CrossSection::builtin_natural(), 0.0).ppm;

    const double route_err = std::abs(ppm_nat - ppm_dec) / ppm_dec;

    const bool ok = ratio_err <= route_tol && route_err <= route_tol;
    report(3, ok, "decadic and natural routes agree",
           "sigma ratio off ln10 by " + num(ratio_err * 100.0, "%.3f") +
               "%, route difference " + num(route_err * 100.0, "%.3f") + "%");
}

// 4. Cross-section per site in cm^2.
void criterion_4() {
    constexpr double anchor = 1.11e-17, rel_tol = 0.01;
    const double cm2 = cross_section_cm2(CrossSection::builtin_decadic());
    const double err = std::abs(cm2 - anchor) / anchor;
    report(4, err <= rel_tol, "cross-section per site in cm^2",
           num(cm2, "%.4g") + " cm^2, off anchor by " + num(err * 100.0, "%.2f") + "%");
}

// 5. Property-based recovery: 50 randomized truths on the 200-800 nm,
//    1 nm grid. Noiseless fits must recover every parameter to 1e-6
//    relative; with noise at 1% of a270, at least 95% of fits must get
//    a270 within 2%.
void criterion_5() {
    const auto t0 = Clock::now();
    constexpr int n_trials = 50;
    constexpr double noiseless_tol = 1e-6;
    constexpr double noisy_tol = 0.02;
    constexpr double min_success = 0.95;
    constexpr double time_budget_s = 30.0;

    const std::vector<double> grid = uniform_grid(200.0, 800.0, 1.0);
    const ReferenceSpectrum ref = make_builtin_reference(grid, Convention::Decadic);

    std::mt19937_64 rng(0xACCE5501);
    double worst_noiseless = 0.0;
    int noisy_good = 0;
    for (int trial = 0; trial < n_trials; ++trial) {
        const ModelParams truth = random_truth(rng);

        const Spectrum clean =
            generate_absorption(SynthSpec{truth, ref, grid, 0.0, 0, {}});
        const FitResult exact_fit = fit(clean, ref, FitConfig{});
        worst_noiseless =
            std::max(worst_noiseless, worst_param_rel_err(truth, exact_fit.params));

        const double sigma = 0.01 * truth.g270.amplitude;
        const Spectrum noisy = generate_absorption(
            SynthSpec{truth, ref, grid, sigma, 1000u + static_cast<std::uint64_t>(trial), {}});
        const FitResult noisy_fit = fit(noisy, ref, FitConfig{});
        const double a270_err = std::abs(noisy_fit.params.g270.amplitude -
                                         truth.g270.amplitude) /
                                truth.g270.amplitude;
        if (a270_err <= noisy_tol) ++noisy_good;
    }
    const double elapsed = seconds_since(t0);
    const double success = static_cast<double>(noisy_good) / n_trials;

    const bool ok = worst_noiseless <= noiseless_tol && success >= min_success &&
                    elapsed < time_budget_s;
    report(5, ok, "fit recovery on randomized synthetic truths",
           "worst noiseless error " + num(worst_noiseless, "%.2e") + ", noisy success " +
               num(success * 100.0, "%.0f") + "%, " + num(elapsed, "%.1f") + " s");
}

// 6. Analytic Jacobian against central finite differences of the model,
//    100 random parameter sets, column-scaled error <= 1e-6.
void criterion_6() {
    constexpr int n_sets = 100;
    constexpr double tol = 1e-6;

    const std::vector<double> grid = uniform_grid(200.0, 800.0, 5.0);
    const ReferenceSpectrum ref = make_builtin_reference(grid, Convention::Decadic);
    const std::vector<double> refv = ref.values_on(grid);

    std::mt19937_64 rng(0xACCE5506);
    double worst = 0.0;
    for (int set = 0; set < n_sets; ++set) {
        const ModelParams params = random_truth(rng);
        const Eigen::MatrixXd analytic = jacobian(params, grid, refv);
        const Eigen::VectorXd p0 = params.to_vector();

        for (int j = 0; j < params.n_params(); ++j) {
            const double h = 1e-5 * std::max(std::abs(p0[j]), 1.0);
            Eigen::VectorXd lo = p0, hi = p0;
            lo[j] -= h;
            hi[j] += h;
            const auto y_lo = eval_model(ModelParams::from_vector(lo, true), grid, refv);
            const auto y_hi = eval_model(ModelParams::from_vector(hi, true), grid, refv);

            const double scale = std::max(analytic.col(j).cwiseAbs().maxCoeff(), 1e-12);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                const double fd = (y_hi[i] - y_lo[i]) / (2.0 * h);
                const double diff =
                    std::abs(analytic(static_cast<Eigen::Index>(i), j) - fd);
                worst = std::max(worst, diff / scale);
            }
        }
    }

    report(6, worst <= tol, "analytic Jacobian versus finite differences",
           "worst column-scaled error " + num(worst, "%.2e"));
}

// 7. Reliability protocol: a 270 nm center outside its 268-272 box must
//    flag the fit unreliable with a named hit; a centered truth must not.
void criterion_7() {
    const std::vector<double> grid = uniform_grid(200.0, 800.0, 1.0);
    const ReferenceSpectrum ref = make_builtin_reference(grid, Convention::Decadic);

    ModelParams truth;
    truth.g270 = {20.0, 270.0, 20.0};
    truth.g360 = {4.0, 360.0, 40.0};
    truth.g520 = GaussianBand{2.0, 520.0, 50.0};
    truth.ramp_factor = 1.0e6;
    truth.ref_weight = 1.0;

    ModelParams shifted = truth;
    shifted.g270.center_nm = 280.0;
    const FitResult bad = fit(
        generate_absorption(SynthSpec{shifted, ref, grid, 0.0, 0, {}}), ref, FitConfig{});
    const bool flags_shifted = !bad.reliable && bad.hit("b270");

    const FitResult good = fit(
        generate_absorption(SynthSpec{truth, ref, grid, 0.0, 0, {}}), ref, FitConfig{});
    const bool accepts_centered = good.reliable && good.boundary_hits.empty();

    report(7, flags_shifted && accepts_centered, "boundary-hit reliability protocol",
           std::string("shifted: ") + (flags_shifted ? "flagged" : "missed") +
               ", centered: " + (accepts_centered ? "clean" : "flagged"));
}

// 8. A contaminant band at 800 nm must not move the recovered a270 by
//    more than 1e-4 relative once the fit window is capped at 650 nm.
void criterion_8() {
    constexpr double tol = 1e-4;

    const std::vector<double> grid = uniform_grid(200.0, 800.0, 1.0);
    const ReferenceSpectrum ref = make_builtin_reference(grid, Convention::Decadic);

    ModelParams truth;
    truth.g270 = {20.0, 270.0, 20.0};
    truth.g360 = {4.0, 360.0, 40.0};
    truth.g520 = GaussianBand{2.0, 520.0, 50.0};
    truth.ramp_factor = 1.0e6;
    truth.ref_weight = 1.0;

    const FitResult clean = fit(
        generate_absorption(SynthSpec{truth, ref, grid, 0.0, 0, {}}), ref, FitConfig{});

    SynthSpec contaminated{truth, ref, grid, 0.0, 0, {{4.0, 800.0, 35.0}}};
    FitConfig capped;
    capped.cutoff_650 = true;
    const FitResult cut = fit(generate_absorption(contaminated), ref, capped);

    const double shift = std::abs(cut.params.g270.amplitude - clean.params.g270.amplitude) /
                         clean.params.g270.amplitude;
    const bool ok = shift <= tol && cut.window_hi_nm <= 650.0;
    report(8, ok, "contaminant robustness with the 650 nm cutoff",
           "a270 shift " + num(shift, "%.2e") + ", window top " +
               num(cut.window_hi_nm, "%.0f") + " nm");
}

// 9. Detection window for a 0.03 cm plate with the default instrument
//    limits: lower end at 0.01 ppm, upper end between 30 and 50 ppm.
void criterion_9() {
    const auto [lo, hi] = detectable_range(0.03, default_noise_absorbance,
                                           default_max_absorbance,
                                           CrossSection::builtin_decadic());
    const bool ok = std::abs(lo - 0.01) <= 0.0005 && hi >= 30.0 && hi <= 50.0;
    report(9, ok, "detectable concentration range",
           num(lo, "%.4f") + " to " + num(hi, "%.1f") + " ppm");
}

} // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    if (failures == 0) {
        std::printf("all 9 criteria passed\n");
    } else {
        std::printf("%d of 9 criteria FAILED\n", failures);
    }
    return failures;
}
