#pragma once

#include "nsfit/analysis.hpp"
#include "nsfit/fitter.hpp"
#include "nsfit/io.hpp"
#include "nsfit/model.hpp"
#include "nsfit/spectrum.hpp"
#include "nsfit/synth.hpp"
#include "nsfit/version.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <future>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace nsfit {
namespace cli_detail {

[[nodiscard]] inline Convention parse_convention(const std::string& s) {
    if (s == "decadic") return Convention::Decadic;
    if (s == "natural") return Convention::Natural;
    throw Error("unknown convention '" + s + "', expected decadic or natural");
}

[[nodiscard]] inline std::optional<Convention> optional_convention(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return parse_convention(s);
}

/// "lo:hi" in nm.
[[nodiscard]] inline std::pair<double, double> parse_window(const std::string& s) {
    const std::size_t colon = s.find(':');
    if (colon != std::string::npos) {
        const auto lo = detail::parse_double(std::string_view(s).substr(0, colon));
        const auto hi = detail::parse_double(std::string_view(s).substr(colon + 1));
        if (lo && hi && *lo < *hi) return {*lo, *hi};
    }
    throw Error("bad window '" + s + "', expected lo:hi in nm");
}

/// "lo:hi:step" in nm.
[[nodiscard]] inline std::vector<double> parse_grid(const std::string& s) {
    const std::size_t c1 = s.find(':');
    const std::size_t c2 = c1 == std::string::npos ? c1 : s.find(':', c1 + 1);
    if (c2 != std::string::npos) {
        const std::string_view sv{s};
        const auto lo = detail::parse_double(sv.substr(0, c1));
        const auto hi = detail::parse_double(sv.substr(c1 + 1, c2 - c1 - 1));
        const auto step = detail::parse_double(sv.substr(c2 + 1));
        if (lo && hi && step) return uniform_grid(*lo, *hi, *step);
    }
    throw Error("bad grid '" + s + "', expected lo:hi:step in nm");
}

/// "amplitude,center,width".
[[nodiscard]] inline GaussianBand parse_band(const std::string& s) {
    const std::size_t c1 = s.find(',');
    const std::size_t c2 = c1 == std::string::npos ? c1 : s.find(',', c1 + 1);
    if (c2 != std::string::npos) {
        const std::string_view sv{s};
        const auto a = detail::parse_double(sv.substr(0, c1));
        const auto b = detail::parse_double(sv.substr(c1 + 1, c2 - c1 - 1));
        const auto c = detail::parse_double(sv.substr(c2 + 1));
        if (a && b && c) {
            GaussianBand band{*a, *b, *c};
            band.validate();
            return band;
        }
    }
    throw Error("bad band '" + s + "', expected amplitude,center_nm,width_nm");
}

/// Input file in any quantity kind, normalized to absorption. Transmission
/// converts through the file's own thickness into `want` (default
/// decadic); absorption files must already match `want` when it is given.
[[nodiscard]] inline Spectrum normalize_to_absorption(const Spectrum& spec,
                                                      const SampleMeta& meta,
                                                      std::optional<Convention> want,
                                                      const std::string& origin) {
    if (is_transmission(spec.quantity())) {
        return to_absorption(spec, meta, want.value_or(Convention::Decadic));
    }
    if (want && *want != convention_of(spec.quantity())) {
        throw ConventionMismatch(origin + " holds " + to_string(spec.quantity()) +
                                 " but --convention asks for " + to_string(*want));
    }
    return spec;
}

[[nodiscard]] inline ReferenceSpectrum load_reference(const std::string& ref_path,
                                                      bool builtin,
                                                      std::span<const double> grid_nm,
                                                      Convention conv) {
    if (builtin) {
        return make_builtin_reference(grid_nm, conv, BuiltinRefParams::from_env());
    }
    auto [raw, meta] = parse_spectrum_file(ref_path);
    return ReferenceSpectrum(normalize_to_absorption(raw, meta, conv, ref_path),
                             ReferenceOrigin::UserFile);
}

inline std::string fmt(double v, const char* f = "%.6g") { return detail::format_double(v, f); }

struct FitFlags {
    std::string input;
    std::string reference;
    bool builtin_ref = false;
    std::string convention;
    bool four_component = false;
    bool cutoff_650 = false;
    std::string window;
    std::string report;
    std::string plot;
    bool strict = false;
    double mu270_rel_err = default_mu270_rel_err;
};

[[nodiscard]] inline FitConfig make_fit_config(const FitFlags& f) {
    FitConfig config;
    config.mode = f.four_component ? FitMode::FourComponent : FitMode::FiveComponent;
    config.cutoff_650 = f.cutoff_650;
    if (!f.window.empty()) {
        std::tie(config.window_lo_nm, config.window_hi_nm) = parse_window(f.window);
    }
    return config;
}

struct FitOutcome {
    FitResult result;
    ConcentrationEstimate estimate;
    SampleMeta meta;
    json report;
};

/// Shared fit pipeline: parse, normalize, fit, estimate, build report.
[[nodiscard]] inline FitOutcome run_fit_pipeline(const std::string& input_path,
                                                 const FitFlags& f) {
    const FitConfig config = make_fit_config(f);  // flag errors before any file access
    const std::string content = read_file(input_path);
    auto [raw, meta] = parse_spectrum_text(content, input_path);
    const Spectrum absorption =
        normalize_to_absorption(raw, meta, optional_convention(f.convention), input_path);
    const Convention conv = convention_of(absorption.quantity());
    const ReferenceSpectrum ref = load_reference(
        f.reference, f.builtin_ref, absorption.wavelengths_nm(), conv);

    FitOutcome o{fit(absorption, ref, config), {}, meta, {}};
    o.estimate = concentration(o.result, CrossSection::builtin(conv), f.mu270_rel_err);
    o.report = make_fit_report(meta, o.result, config, o.estimate, input_path,
                               fnv1a64_hex(content));
    if (!f.plot.empty()) emit_plot_data(absorption, o.result, ref, f.plot);
    return o;
}

inline void print_fit_summary(const FitOutcome& o, const SampleMeta& meta,
                              std::ostream& out) {
    out << "sample:     " << (meta.sample_id.empty() ? "(unnamed)" : meta.sample_id)
        << "\n";
    out << "converged:  " << (o.result.converged ? "yes" : "no") << " ("
        << o.result.iterations << " iterations)\n";
    out << "reliable:   " << (o.result.reliable ? "yes" : "no");
    if (!o.result.boundary_hits.empty()) {
        out << "  [at bound:";
        for (const auto& h : o.result.boundary_hits) {
            out << ' ' << h.param << (h.side == BoundSide::Lower ? "(lo)" : "(hi)");
        }
        out << ']';
    }
    out << "\n";
    out << "rmse:       " << fmt(o.result.rmse) << " 1/cm\n";
    out << "mu270:      " << fmt(o.result.mu270) << " 1/cm ("
        << to_string(o.result.convention) << ")\n";
    out << "N_s0:       " << fmt(o.estimate.ppm, "%.3g") << " +/- "
        << fmt(o.estimate.ppm_uncertainty, "%.2g") << " ppm\n";
    if (meta.epr_ppm) {
        const double dev = (o.estimate.ppm - *meta.epr_ppm) / *meta.epr_ppm * 100.0;
        out << "epr:        " << fmt(*meta.epr_ppm, "%.3g") << " ppm (deviation "
            << fmt(dev, "%.2g") << "%)\n";
    }
}

inline int cmd_fit(const FitFlags& f, std::ostream& out) {
    const FitOutcome o = run_fit_pipeline(f.input, f);
    if (!f.report.empty()) write_file(f.report, o.report.dump(2) + "\n");
    print_fit_summary(o, o.meta, out);
    return f.strict && !o.result.reliable ? 3 : 0;
}

struct ConvertFlags {
    std::string input;
    std::string output;
    std::string convention = "decadic";
};

inline int cmd_convert(const ConvertFlags& f, std::ostream& out) {
    auto [raw, meta] = parse_spectrum_file(f.input);
    const Spectrum absorption = to_absorption(raw, meta, parse_convention(f.convention));
    write_spectrum_file(f.output, absorption, meta);
    out << "wrote " << f.output << " (" << to_string(absorption.quantity()) << ", "
        << absorption.size() << " points)\n";
    return 0;
}

struct ConcFlags {
    double mu270 = 0.0;
    std::string convention = "decadic";
    double sigma = 0.0;       // 0 means built-in
    double sigma_err = -1.0;  // <0 means built-in
    double mu270_rel_err = default_mu270_rel_err;
};

inline int cmd_conc(const ConcFlags& f, std::ostream& out) {
    const Convention conv = parse_convention(f.convention);
    CrossSection cs = CrossSection::builtin(conv);
    if (f.sigma > 0.0) cs.value = f.sigma;
    if (f.sigma_err >= 0.0) cs.uncertainty = f.sigma_err;
    const ConcentrationEstimate est =
        concentration(f.mu270, f.mu270_rel_err, cs, conv);
    out << "N_s0: " << fmt(est.ppm, "%.3g") << " +/- "
        << fmt(est.ppm_uncertainty, "%.2g") << " ppm  (mu270 = " << fmt(f.mu270)
        << " 1/cm " << to_string(conv) << ", sigma = " << fmt(cs.value) << " +/- "
        << fmt(cs.uncertainty) << ")\n";
    return 0;
}

struct CalibrateFlags {
    std::string input;
    bool with_intercept = false;
};

/// Pairs file: '#' comments and blank lines skipped, rows "ppm,mu270".
[[nodiscard]] inline std::vector<CalibrationPoint> parse_pairs(const std::string& path) {
    const std::string content = read_file(path);
    std::vector<CalibrationPoint> pairs;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        const std::size_t eol = content.find('\n', pos);
        std::string_view line = std::string_view(content).substr(
            pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? content.size() + 1 : eol + 1;
        ++line_no;
        line = detail::trim(line);
        if (line.empty() || line.front() == '#') continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string_view::npos) {
            throw BadNumeric("pair row has no comma in " + path, line_no);
        }
        const auto ppm = detail::parse_double(line.substr(0, comma));
        const auto mu = detail::parse_double(line.substr(comma + 1));
        if (!ppm || !mu) {
            throw BadNumeric("bad pair '" + std::string(line) + "' in " + path, line_no);
        }
        pairs.push_back({*ppm, *mu});
    }
    return pairs;
}

inline int cmd_calibrate(const CalibrateFlags& f, std::ostream& out) {
    const auto pairs = parse_pairs(f.input);
    const CalibrationModel model = f.with_intercept ? CalibrationModel::WithIntercept
                                                    : CalibrationModel::ThroughOrigin;
    const CalibrationResult r = calibrate(pairs, model);
    out << "model:      "
        << (model == CalibrationModel::ThroughOrigin ? "through-origin" : "with-intercept")
        << "\n";
    out << "n:          " << r.n_points << "\n";
    out << "slope:      " << fmt(r.slope) << " 1/cm/ppm\n";
    if (r.ci_defined()) {
        out << "ci95:       +/- " << fmt(r.slope_ci95_half_width) << "\n";
    } else {
        out << "ci95:       undefined (too few points)\n";
    }
    if (r.intercept) out << "intercept:  " << fmt(*r.intercept) << " 1/cm\n";
    return 0;
}

struct RangeFlags {
    std::string thickness;
    double a_noise = default_noise_absorbance;
    double a_max = default_max_absorbance;
    std::string convention = "decadic";
};

inline int cmd_range(const RangeFlags& f, std::ostream& out) {
    const Convention conv = parse_convention(f.convention);
    const double d = parse_thickness_cm(f.thickness);
    const auto [lo, hi] = detectable_range(d, f.a_noise, f.a_max,
                                           CrossSection::builtin(conv));
    out << "detectable N_s0 range: " << fmt(lo, "%.3g") << " to " << fmt(hi, "%.3g")
        << " ppm  (thickness " << fmt(d) << " cm, " << to_string(conv) << ")\n";
    return 0;
}

struct SynthSettings {
    double a270 = 20.0, b270 = 270.0, c270 = 20.0;
    double a360 = 4.0, b360 = 360.0, c360 = 40.0;
    double a520 = 2.0, b520 = 520.0, c520 = 50.0;
    double ramp = 1e6;
    double ref_weight = 1.0;
    bool four_component = false;
    std::string grid = "200:800:1";
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::string> extra_bands;
    std::string quantity = "absorption";
    std::string convention = "decadic";
    std::string thickness;
    std::string sample_id = "synthetic";
};

/// Same keys as the synth flags, as a flat JSON object.
[[nodiscard]] inline SynthSettings parse_synth_config(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw MalformedHeader("cannot parse config " + path + ": " + e.what());
    }
    SynthSettings s;
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "a270") s.a270 = value.get<double>();
            else if (key == "b270") s.b270 = value.get<double>();
            else if (key == "c270") s.c270 = value.get<double>();
            else if (key == "a360") s.a360 = value.get<double>();
            else if (key == "b360") s.b360 = value.get<double>();
            else if (key == "c360") s.c360 = value.get<double>();
            else if (key == "a520") s.a520 = value.get<double>();
            else if (key == "b520") s.b520 = value.get<double>();
            else if (key == "c520") s.c520 = value.get<double>();
            else if (key == "ramp") s.ramp = value.get<double>();
            else if (key == "ref_weight") s.ref_weight = value.get<double>();
            else if (key == "four_component") s.four_component = value.get<bool>();
            else if (key == "grid") s.grid = value.get<std::string>();
            else if (key == "noise_sigma") s.noise_sigma = value.get<double>();
            else if (key == "seed") s.seed = value.get<std::uint64_t>();
            else if (key == "extra_bands") s.extra_bands = value.get<std::vector<std::string>>();
            else if (key == "quantity") s.quantity = value.get<std::string>();
            else if (key == "convention") s.convention = value.get<std::string>();
            else if (key == "thickness") s.thickness = value.get<std::string>();
            else if (key == "sample_id") s.sample_id = value.get<std::string>();
            else throw MalformedHeader("unknown config key '" + key + "' in " + path);
        } catch (const json::exception& e) {
            throw MalformedHeader("bad config value for '" + key + "' in " + path + ": " +
                                  e.what());
        }
    }
    return s;
}

inline int cmd_synth(const SynthSettings& s, const std::string& output, std::ostream& out) {
    const std::vector<double> grid = parse_grid(s.grid);
    const Convention conv = parse_convention(s.convention);

    ModelParams truth;
    truth.g270 = {s.a270, s.b270, s.c270};
    truth.g360 = {s.a360, s.b360, s.c360};
    if (!s.four_component) truth.g520 = GaussianBand{s.a520, s.b520, s.c520};
    truth.ramp_factor = s.ramp;
    truth.ref_weight = s.ref_weight;

    SynthSpec spec{truth, make_builtin_reference(grid, conv, BuiltinRefParams::from_env()),
                   grid, s.noise_sigma, s.seed, {}};
    for (const auto& b : s.extra_bands) spec.extra_bands.push_back(parse_band(b));

    SampleMeta meta;
    meta.sample_id = s.sample_id;
    if (!s.thickness.empty()) meta.thickness_cm = parse_thickness_cm(s.thickness);

    if (s.quantity == "absorption") {
        write_spectrum_file(output, generate_absorption(spec), meta);
    } else if (s.quantity == "transmission") {
        write_spectrum_file(output,
                            generate_transmission(spec, meta.require_thickness_cm(), conv),
                            meta);
    } else {
        throw Error("unknown synth quantity '" + s.quantity +
                    "', expected absorption or transmission");
    }
    out << "wrote " << output << " (" << grid.size() << " points)\n";
    return 0;
}

struct BatchFlags {
    std::string directory;
    std::string out_dir;
    FitFlags fit;  // input unused; shared fit options
};

struct BatchRow {
    std::string sample_id;
    std::string file;         // basename
    double ppm = 0.0;
    double ppm_err = 0.0;
    bool reliable = false;
    std::string error;        // empty on success
};

[[nodiscard]] inline BatchRow batch_one(const std::filesystem::path& path,
                                        const FitFlags& f,
                                        const std::filesystem::path& out_dir) {
    BatchRow row;
    row.file = path.filename().string();
    try {
        auto [raw, meta] = parse_spectrum_file(path);
        row.sample_id = meta.sample_id;
        const FitOutcome o = run_fit_pipeline(path.string(), f);
        const auto report_path = out_dir / (path.stem().string() + ".report.json");
        write_file(report_path, o.report.dump(2) + "\n");
        row.ppm = o.estimate.ppm;
        row.ppm_err = o.estimate.ppm_uncertainty;
        row.reliable = o.result.reliable;
    } catch (const std::exception& e) {
        row.error = e.what();
    }
    return row;
}

inline int cmd_batch(const BatchFlags& f, std::ostream& out) {
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    try {
        for (const auto& entry : fs::directory_iterator(f.directory)) {
            if (entry.is_regular_file() && entry.path().extension() == ".csv") {
                files.push_back(entry.path());
            }
        }
    } catch (const fs::filesystem_error& e) {
        throw IoError(std::string("cannot scan directory: ") + e.what());
    }
    if (files.empty()) {
        throw IoError("no .csv spectrum files in '" + f.directory + "'");
    }
    std::sort(files.begin(), files.end());

    const fs::path out_dir = f.out_dir.empty() ? fs::path(f.directory) : fs::path(f.out_dir);
    if (!f.out_dir.empty()) fs::create_directories(out_dir);

    std::vector<std::future<BatchRow>> futures;
    futures.reserve(files.size());
    for (const auto& path : files) {
        futures.push_back(std::async(std::launch::async, batch_one, path, f.fit, out_dir));
    }
    std::vector<BatchRow> rows;
    rows.reserve(files.size());
    for (auto& fut : futures) rows.push_back(fut.get());

    std::sort(rows.begin(), rows.end(), [](const BatchRow& a, const BatchRow& b) {
        return std::tie(a.sample_id, a.file) < std::tie(b.sample_id, b.file);
    });

    out << std::left << std::setw(16) << "sample_id" << std::setw(28) << "file"
        << std::setw(10) << "ppm" << std::setw(10) << "+/-" << "status" << "\n";
    std::size_t failed = 0, unreliable = 0;
    for (const auto& r : rows) {
        out << std::left << std::setw(16)
            << (r.sample_id.empty() ? "(unnamed)" : r.sample_id) << std::setw(28) << r.file;
        if (!r.error.empty()) {
            ++failed;
            out << std::setw(10) << "-" << std::setw(10) << "-" << "failed: " << r.error
                << "\n";
            continue;
        }
        if (!r.reliable) ++unreliable;
        out << std::setw(10) << fmt(r.ppm, "%.4g") << std::setw(10)
            << fmt(r.ppm_err, "%.3g") << (r.reliable ? "ok" : "unreliable") << "\n";
    }
    out << failed << " of " << rows.size() << " failed\n";

    if (failed == rows.size()) return 2;
    if (f.fit.strict && unreliable > 0) return 3;
    return 0;
}

} // namespace cli_detail

/// Command-line front end. `args` excludes the program name. Returns the
/// process exit code: 0 success, 1 usage error, 2 data or io error, 3
/// unreliable fit under --strict.
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    using namespace cli_detail;

    CLI::App app{"Neutral substitutional nitrogen quantification from UV-Vis absorption",
                 tool_name};
    app.set_version_flag("--version", std::string(tool_name) + " " + tool_version);
    app.require_subcommand(1);

    // Flag values with their own grammar are vetted at parse time so a
    // typo is a usage error, not a data error.
    const auto vetted = [](auto parser, const std::string& label) {
        return CLI::Validator(
            [parser](std::string& s) -> std::string {
                try {
                    (void)parser(s);
                    return {};
                } catch (const Error& e) {
                    return std::string(e.what());
                }
            },
            label);
    };
    const CLI::Validator window_format =
        vetted([](const std::string& s) { return parse_window(s); }, "LO:HI");
    const CLI::Validator grid_format =
        vetted([](const std::string& s) { return parse_grid(s); }, "LO:HI:STEP");
    const CLI::Validator band_format =
        vetted([](const std::string& s) { return parse_band(s); }, "A,B,C");
    const CLI::Validator thickness_format =
        vetted([](const std::string& s) { return parse_thickness_cm(s); }, "NUM UNIT");

    const auto add_fit_flags = [&window_format](CLI::App* sub, FitFlags& f,
                                                bool with_outputs) {
        sub->add_option("--reference", f.reference,
                        "reference spectrum file (fitted as weighted offset)");
        sub->add_flag("--builtin-ref", f.builtin_ref,
                      "use the built-in parametric reference");
        sub->add_option("--convention", f.convention,
                        "absorption convention for transmission input")
            ->check(CLI::IsMember({"decadic", "natural"}));
        sub->add_flag("--four-component", f.four_component,
                      "fit without the 520 nm band");
        sub->add_flag("--cutoff-650", f.cutoff_650, "restrict the fit window to <= 650 nm");
        sub->add_option("--window", f.window, "fit window lo:hi in nm")
            ->check(window_format);
        sub->add_flag("--strict", f.strict, "exit 3 when the fit is unreliable");
        sub->add_option("--mu270-rel-err", f.mu270_rel_err,
                        "relative uncertainty assigned to the fitted mu270");
        if (with_outputs) {
            sub->add_option("--report", f.report, "write a JSON fit report here");
            sub->add_option("--plot", f.plot, "write <prefix>.csv and <prefix>.svg");
        }
    };

    auto* convert = app.add_subcommand("convert", "transmission file to absorption file");
    ConvertFlags convert_flags;
    convert->add_option("input", convert_flags.input, "transmission spectrum file")
        ->required();
    convert->add_option("-o,--output", convert_flags.output, "output file")->required();
    convert->add_option("--convention", convert_flags.convention, "decadic or natural")
        ->check(CLI::IsMember({"decadic", "natural"}));

    auto* fit_cmd = app.add_subcommand("fit", "decompose one spectrum and estimate N_s0");
    FitFlags fit_flags;
    fit_cmd->add_option("input", fit_flags.input, "spectrum file")->required();
    add_fit_flags(fit_cmd, fit_flags, true);

    auto* conc = app.add_subcommand("conc", "concentration from a known mu270");
    ConcFlags conc_flags;
    conc->add_option("--mu270", conc_flags.mu270, "fitted 270 nm band height, 1/cm")
        ->required();
    conc->add_option("--convention", conc_flags.convention, "decadic or natural")
        ->check(CLI::IsMember({"decadic", "natural"}));
    conc->add_option("--sigma", conc_flags.sigma, "override cross-section, 1/cm/ppm");
    conc->add_option("--sigma-err", conc_flags.sigma_err, "override its uncertainty");
    conc->add_option("--mu270-rel-err", conc_flags.mu270_rel_err,
                     "relative uncertainty of mu270");

    auto* calib = app.add_subcommand("calibrate", "regress mu270 against EPR ppm pairs");
    CalibrateFlags calib_flags;
    calib->add_option("pairs", calib_flags.input, "CSV of ppm,mu270 rows")->required();
    bool through_origin = false;
    calib->add_flag("--through-origin", through_origin,
                    "force the line through zero (default)");
    calib->add_flag("--with-intercept", calib_flags.with_intercept,
                    "ordinary least squares with intercept");

    auto* synth = app.add_subcommand("synth", "generate a synthetic spectrum file");
    SynthSettings synth_flags;
    std::string synth_config, synth_output;
    synth->add_option("--config", synth_config, "JSON file with the same keys as the flags");
    synth->add_option("-o,--output", synth_output, "output spectrum file")->required();
    synth->add_option("--a270", synth_flags.a270, "270 nm band amplitude, 1/cm");
    synth->add_option("--b270", synth_flags.b270, "270 nm band center, nm");
    synth->add_option("--c270", synth_flags.c270, "270 nm band width, nm");
    synth->add_option("--a360", synth_flags.a360, "360 nm band amplitude, 1/cm");
    synth->add_option("--b360", synth_flags.b360, "360 nm band center, nm");
    synth->add_option("--c360", synth_flags.c360, "360 nm band width, nm");
    synth->add_option("--a520", synth_flags.a520, "520 nm band amplitude, 1/cm");
    synth->add_option("--b520", synth_flags.b520, "520 nm band center, nm");
    synth->add_option("--c520", synth_flags.c520, "520 nm band width, nm");
    synth->add_option("--ramp", synth_flags.ramp, "lambda^-3 ramp factor");
    synth->add_option("--ref-weight", synth_flags.ref_weight, "reference weight");
    synth->add_flag("--four-component", synth_flags.four_component, "omit the 520 nm band");
    synth->add_option("--grid", synth_flags.grid, "wavelength grid lo:hi:step in nm")
        ->check(grid_format);
    synth->add_option("--noise-sigma", synth_flags.noise_sigma,
                      "additive Gaussian noise sigma, 1/cm");
    synth->add_option("--seed", synth_flags.seed, "noise RNG seed");
    synth->add_option("--extra-band", synth_flags.extra_bands,
                      "contaminant band amplitude,center,width (repeatable)")
        ->check(band_format);
    synth->add_option("--quantity", synth_flags.quantity, "absorption or transmission")
        ->check(CLI::IsMember({"absorption", "transmission"}));
    synth->add_option("--convention", synth_flags.convention, "decadic or natural")
        ->check(CLI::IsMember({"decadic", "natural"}));
    synth->add_option("--thickness", synth_flags.thickness,
                      "plate thickness with unit, e.g. '300 um'")
        ->check(thickness_format);
    synth->add_option("--sample-id", synth_flags.sample_id, "sample_id header value");

    auto* range = app.add_subcommand("range", "detectable concentration window");
    RangeFlags range_flags;
    range->add_option("--thickness", range_flags.thickness,
                      "plate thickness with unit, e.g. '300 um'")
        ->required()
        ->check(thickness_format);
    range->add_option("--a-noise", range_flags.a_noise, "noise-floor absorbance, OD");
    range->add_option("--a-max", range_flags.a_max, "saturation absorbance, OD");
    range->add_option("--convention", range_flags.convention, "decadic or natural")
        ->check(CLI::IsMember({"decadic", "natural"}));

    auto* batch = app.add_subcommand("batch", "fit every .csv spectrum in a directory");
    BatchFlags batch_flags;
    batch->add_option("directory", batch_flags.directory, "directory of spectrum files")
        ->required();
    batch->add_option("--out-dir", batch_flags.out_dir,
                      "where reports go (default: the input directory)");
    add_fit_flags(batch, batch_flags.fit, false);

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (convert->parsed()) return cmd_convert(convert_flags, out);
        if (fit_cmd->parsed()) {
            if (fit_flags.builtin_ref == !fit_flags.reference.empty()) {
                err << "error: need exactly one of --reference or --builtin-ref\n";
                return 1;
            }
            return cmd_fit(fit_flags, out);
        }
        if (conc->parsed()) return cmd_conc(conc_flags, out);
        if (calib->parsed()) {
            if (through_origin && calib_flags.with_intercept) {
                err << "error: --through-origin and --with-intercept conflict\n";
                return 1;
            }
            return cmd_calibrate(calib_flags, out);
        }
        if (synth->parsed()) {
            SynthSettings s =
                synth_config.empty() ? SynthSettings{} : parse_synth_config(synth_config);
            const auto ov = [&](const char* name, auto& dst, const auto& src) {
                if (synth->count(name) > 0) dst = src;
            };
            ov("--a270", s.a270, synth_flags.a270);
            ov("--b270", s.b270, synth_flags.b270);
            ov("--c270", s.c270, synth_flags.c270);
            ov("--a360", s.a360, synth_flags.a360);
            ov("--b360", s.b360, synth_flags.b360);
            ov("--c360", s.c360, synth_flags.c360);
            ov("--a520", s.a520, synth_flags.a520);
            ov("--b520", s.b520, synth_flags.b520);
            ov("--c520", s.c520, synth_flags.c520);
            ov("--ramp", s.ramp, synth_flags.ramp);
            ov("--ref-weight", s.ref_weight, synth_flags.ref_weight);
            ov("--four-component", s.four_component, synth_flags.four_component);
            ov("--grid", s.grid, synth_flags.grid);
            ov("--noise-sigma", s.noise_sigma, synth_flags.noise_sigma);
            ov("--seed", s.seed, synth_flags.seed);
            ov("--extra-band", s.extra_bands, synth_flags.extra_bands);
            ov("--quantity", s.quantity, synth_flags.quantity);
            ov("--convention", s.convention, synth_flags.convention);
            ov("--thickness", s.thickness, synth_flags.thickness);
            ov("--sample-id", s.sample_id, synth_flags.sample_id);
            return cmd_synth(s, synth_output, out);
        }
        if (range->parsed()) return cmd_range(range_flags, out);
        if (batch->parsed()) {
            if (batch_flags.fit.builtin_ref == !batch_flags.fit.reference.empty()) {
                err << "error: need exactly one of --reference or --builtin-ref\n";
                return 1;
            }
            return cmd_batch(batch_flags, out);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace nsfit
