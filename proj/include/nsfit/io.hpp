#pragma once

#include "nsfit/analysis.hpp"
#include "nsfit/fitter.hpp"
#include "nsfit/model.hpp"
#include "nsfit/spectrum.hpp"
#include "nsfit/version.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nsfit {

using json = nlohmann::ordered_json;

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    double value = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (ec != std::errc{} || ptr != end || s.empty()) return std::nullopt;
    return value;
}

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline std::string format_double(double v, const char* fmt) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

} // namespace detail

/// Thickness given as "<number> <unit>" with unit um, mm or cm, returned
/// in cm. The unit is mandatory.
[[nodiscard]] inline double parse_thickness_cm(std::string_view text) {
    const std::string_view t = detail::trim(text);
    double divisor = 0.0;
    std::string_view num;
    if (t.ends_with("um")) {
        divisor = 1e4;
        num = t.substr(0, t.size() - 2);
    } else if (t.ends_with("mm")) {
        divisor = 10.0;
        num = t.substr(0, t.size() - 2);
    } else if (t.ends_with("cm")) {
        divisor = 1.0;
        num = t.substr(0, t.size() - 2);
    } else {
        throw MalformedHeader("thickness '" + std::string(text) +
                              "' lacks a unit suffix (um|mm|cm)");
    }
    const auto value = detail::parse_double(num);
    if (!value || !(*value > 0.0)) {
        throw MalformedHeader("cannot parse thickness '" + std::string(text) + "'");
    }
    return *value / divisor;
}

[[nodiscard]] inline Quantity parse_quantity(std::string_view text) {
    const std::string_view t = detail::trim(text);
    if (t == "transmission_fraction") return Quantity::TransmissionFraction;
    if (t == "transmission_percent") return Quantity::TransmissionPercent;
    if (t == "absorption_decadic") return Quantity::AbsorptionDecadic;
    if (t == "absorption_natural") return Quantity::AbsorptionNatural;
    throw MalformedHeader("unknown quantity '" + std::string(t) + "'");
}

/// FNV-1a 64-bit hash of a byte string, as "fnv1a64:<hex>".
[[nodiscard]] inline std::string fnv1a64_hex(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

[[nodiscard]] inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
    return std::move(ss).str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failure on '" + path.string() + "'");
}

/// Parse the spectrum file format: '#'-prefixed "key: value" header lines
/// (sample_id, thickness with unit, quantity, optional epr_ppm and
/// epr_rel_err), then CSV rows "wavelength_nm,value" in ascending
/// wavelength order.
[[nodiscard]] inline std::pair<Spectrum, SampleMeta> parse_spectrum_text(
    std::string_view content, const std::string& origin = "<memory>") {
    SampleMeta meta;
    std::optional<Quantity> quantity;
    std::vector<double> wavelengths;
    std::vector<double> values;

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        const std::size_t eol = content.find('\n', pos);
        std::string_view line = content.substr(
            pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? content.size() + 1 : eol + 1;
        ++line_no;

        line = detail::trim(line);
        if (line.empty()) continue;

        if (line.front() == '#') {
            std::string_view body = detail::trim(line.substr(1));
            if (body.empty()) continue;  // bare comment
            const std::size_t colon = body.find(':');
            if (colon == std::string_view::npos) {
                throw MalformedHeader("header line " + std::to_string(line_no) +
                                      " has no 'key: value' form in " + origin);
            }
            const std::string key{detail::trim(body.substr(0, colon))};
            const std::string_view value = detail::trim(body.substr(colon + 1));
            if (key == "sample_id") {
                meta.sample_id = std::string(value);
            } else if (key == "thickness") {
                meta.thickness_cm = parse_thickness_cm(value);
            } else if (key == "quantity") {
                quantity = parse_quantity(value);
            } else if (key == "epr_ppm") {
                const auto v = detail::parse_double(value);
                if (!v || !(*v > 0.0)) {
                    throw MalformedHeader("bad epr_ppm '" + std::string(value) + "' in " +
                                          origin);
                }
                meta.epr_ppm = *v;
            } else if (key == "epr_rel_err") {
                const auto v = detail::parse_double(value);
                if (!v || !(*v > 0.0) || !(*v < 1.0)) {
                    throw MalformedHeader("bad epr_rel_err '" + std::string(value) +
                                          "' in " + origin);
                }
                meta.epr_rel_err = *v;
            } else {
                throw MalformedHeader("unknown header key '" + key + "' in " + origin);
            }
            continue;
        }

        const std::size_t comma = line.find(',');
        if (comma == std::string_view::npos) {
            throw BadNumeric("data row has no comma in " + origin, line_no);
        }
        const auto wl = detail::parse_double(line.substr(0, comma));
        const auto val = detail::parse_double(line.substr(comma + 1));
        if (!wl) {
            throw BadNumeric("bad wavelength '" + std::string(line.substr(0, comma)) +
                                 "' in " + origin,
                             line_no);
        }
        if (!val) {
            throw BadNumeric("bad value '" + std::string(line.substr(comma + 1)) + "' in " +
                                 origin,
                             line_no);
        }
        if (!wavelengths.empty() && !(*wl > wavelengths.back())) {
            throw NonMonotonicWavelength(
                "wavelength " + detail::format_double(*wl) + " nm does not increase past " +
                    detail::format_double(wavelengths.back()) + " nm in " + origin,
                line_no);
        }
        wavelengths.push_back(*wl);
        values.push_back(*val);
    }

    if (!quantity) {
        throw MalformedHeader("missing 'quantity' header in " + origin);
    }
    return {Spectrum(std::move(wavelengths), std::move(values), *quantity),
            std::move(meta)};
}

[[nodiscard]] inline std::pair<Spectrum, SampleMeta> parse_spectrum_file(
    const std::filesystem::path& path) {
    return parse_spectrum_text(read_file(path), path.string());
}

/// Serialize a spectrum with its metadata. Values are written with
/// shortest-roundtrip precision so a parse reproduces them bit for bit.
[[nodiscard]] inline std::string spectrum_to_text(const Spectrum& spec,
                                                  const SampleMeta& meta) {
    std::string out;
    if (!meta.sample_id.empty()) {
        out += "# sample_id: " + meta.sample_id + "\n";
    }
    if (meta.thickness_cm) {
        out += "# thickness: " + detail::format_double(*meta.thickness_cm) + " cm\n";
    }
    out += "# quantity: " + to_string(spec.quantity()) + "\n";
    if (meta.epr_ppm) {
        out += "# epr_ppm: " + detail::format_double(*meta.epr_ppm) + "\n";
        out += "# epr_rel_err: " + detail::format_double(meta.epr_rel_err) + "\n";
    }
    for (std::size_t i = 0; i < spec.size(); ++i) {
        out += detail::format_double(spec.wavelengths_nm()[i]);
        out += ',';
        out += detail::format_double(spec.values()[i]);
        out += '\n';
    }
    return out;
}

inline void write_spectrum_file(const std::filesystem::path& path, const Spectrum& spec,
                                const SampleMeta& meta) {
    write_file(path, spectrum_to_text(spec, meta));
}

/// Self-describing fit report with stable key order, suitable for audit
/// trails: sample metadata, every fitted parameter with its box and
/// boundary flag, fit quality, and the concentration estimate.
[[nodiscard]] inline json make_fit_report(const SampleMeta& meta, const FitResult& result,
                                          const FitConfig& config,
                                          const ConcentrationEstimate& estimate,
                                          const std::string& input_path,
                                          const std::string& input_checksum) {
    json report;
    report["tool"] = {{"name", tool_name}, {"version", tool_version}};
    json input;
    input["path"] = input_path;
    input["checksum"] = input_checksum;
    input["sample_id"] = meta.sample_id;
    if (meta.thickness_cm) input["thickness_cm"] = *meta.thickness_cm;
    if (meta.epr_ppm) {
        input["epr_ppm"] = *meta.epr_ppm;
        input["epr_rel_err"] = meta.epr_rel_err;
    }
    report["input"] = std::move(input);

    json fitj;
    fitj["mode"] = config.mode == FitMode::FiveComponent ? "five_component"
                                                         : "four_component";
    fitj["window_nm"] = {result.window_lo_nm, result.window_hi_nm};
    fitj["convention"] = to_string(result.convention);
    fitj["converged"] = result.converged;
    fitj["iterations"] = result.iterations;
    fitj["rss"] = result.rss;
    fitj["rmse"] = result.rmse;
    fitj["reliable"] = result.reliable;

    const bool five = result.params.five_component();
    const Eigen::VectorXd p = result.params.to_vector();
    auto [lo, hi] = config.bound_vectors();
    json params;
    for (int i = 0; i < result.params.n_params(); ++i) {
        const std::string name = ModelParams::param_name(i, five);
        json entry;
        entry["value"] = p[i];
        entry["lo"] = lo[i];
        entry["hi"] = hi[i];
        json at_bound;  // null unless hit
        for (const auto& h : result.boundary_hits) {
            if (h.param == name) {
                at_bound = h.side == BoundSide::Lower ? "lower" : "upper";
            }
        }
        entry["at_bound"] = at_bound;
        params[name] = std::move(entry);
    }
    fitj["parameters"] = std::move(params);
    fitj["mu270"] = result.mu270;
    report["fit"] = std::move(fitj);

    json conc;
    conc["ppm"] = estimate.ppm;
    conc["ppm_uncertainty"] = estimate.ppm_uncertainty;
    conc["cross_section"] = {{"value", estimate.cross_section_used.value},
                             {"uncertainty", estimate.cross_section_used.uncertainty},
                             {"convention", to_string(estimate.cross_section_used.convention)}};
    report["concentration"] = std::move(conc);
    return report;
}

namespace detail {

struct PlotSeries {
    std::string label;
    std::string color;
    const std::vector<double>* y;
};

/// Minimal static SVG line plot. Byte output is deterministic for
/// identical inputs.
[[nodiscard]] inline std::string render_svg(std::span<const double> x,
                                            const std::vector<PlotSeries>& series,
                                            const std::string& x_label,
                                            const std::string& y_label) {
    constexpr double width = 960, height = 600;
    constexpr double ml = 70, mr = 180, mt = 30, mb = 55;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double ymin = 0.0, ymax = 1.0;
    bool first = true;
    for (const auto& s : series) {
        for (double v : *s.y) {
            if (first) {
                ymin = ymax = v;
                first = false;
            } else {
                ymin = std::min(ymin, v);
                ymax = std::max(ymax, v);
            }
        }
    }
    if (ymax <= ymin) ymax = ymin + 1.0;
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;
    const double xmin = x.front(), xmax = x.back();

    const auto px = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * pw; };
    const auto py = [&](double v) { return mt + (ymax - v) / (ymax - ymin) * ph; };
    const auto fmt = [](double v, const char* f = "%.2f") { return format_double(v, f); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width, "%.0f") +
           "\" height=\"" + fmt(height, "%.0f") + "\" viewBox=\"0 0 " + fmt(width, "%.0f") +
           " " + fmt(height, "%.0f") + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<rect x=\"" + fmt(ml) + "\" y=\"" + fmt(mt) + "\" width=\"" + fmt(pw) +
           "\" height=\"" + fmt(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";

    constexpr int n_ticks = 6;
    for (int i = 0; i < n_ticks; ++i) {
        const double t = static_cast<double>(i) / (n_ticks - 1);
        const double xv = xmin + t * (xmax - xmin);
        const double yv = ymin + t * (ymax - ymin);
        svg += "<line x1=\"" + fmt(px(xv)) + "\" y1=\"" + fmt(mt + ph) + "\" x2=\"" +
               fmt(px(xv)) + "\" y2=\"" + fmt(mt + ph + 5) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + fmt(px(xv)) + "\" y=\"" + fmt(mt + ph + 20) +
               "\" font-size=\"12\" text-anchor=\"middle\">" + fmt(xv, "%.4g") + "</text>\n";
        svg += "<line x1=\"" + fmt(ml - 5) + "\" y1=\"" + fmt(py(yv)) + "\" x2=\"" + fmt(ml) +
               "\" y2=\"" + fmt(py(yv)) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + fmt(ml - 8) + "\" y=\"" + fmt(py(yv) + 4) +
               "\" font-size=\"12\" text-anchor=\"end\">" + fmt(yv, "%.4g") + "</text>\n";
    }
    svg += "<text x=\"" + fmt(ml + pw / 2) + "\" y=\"" + fmt(height - 12) +
           "\" font-size=\"14\" text-anchor=\"middle\">" + x_label + "</text>\n";
    svg += "<text x=\"18\" y=\"" + fmt(mt + ph / 2) +
           "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
           fmt(mt + ph / 2) + ")\">" + y_label + "</text>\n";

    int legend_row = 0;
    for (const auto& s : series) {
        std::string points;
        for (std::size_t i = 0; i < x.size(); ++i) {
            points += fmt(px(x[i])) + "," + fmt(py((*s.y)[i]));
            if (i + 1 < x.size()) points += ' ';
        }
        svg += "<polyline fill=\"none\" stroke=\"" + s.color +
               "\" stroke-width=\"1.2\" points=\"" + points + "\"/>\n";
        const double ly = mt + 14 + 18 * legend_row++;
        svg += "<line x1=\"" + fmt(ml + pw + 12) + "\" y1=\"" + fmt(ly) + "\" x2=\"" +
               fmt(ml + pw + 36) + "\" y2=\"" + fmt(ly) + "\" stroke=\"" + s.color +
               "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + fmt(ml + pw + 42) + "\" y=\"" + fmt(ly + 4) +
               "\" font-size=\"12\">" + s.label + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace detail

/// Write the per-component decomposition of a fit as "<prefix>.csv"
/// (columns wavelength_nm, data, fit, g270, g360, g520, ramp, offset,
/// residual) and "<prefix>.svg" with the same series. Returns the two
/// paths written.
inline std::vector<std::filesystem::path> emit_plot_data(const Spectrum& spec,
                                                         const FitResult& result,
                                                         const ReferenceSpectrum& ref,
                                                         const std::string& path_prefix) {
    const Spectrum windowed = crop(spec, result.window_lo_nm, result.window_hi_nm);
    const auto& grid = windowed.wavelengths_nm();
    const std::vector<double> refv = ref.values_on(grid);
    const std::size_t n = grid.size();

    std::vector<double> g270(n), g360(n), g520(n, 0.0), ramp(n), offset(n), total(n),
        resid(n);
    const ModelParams& p = result.params;
    for (std::size_t i = 0; i < n; ++i) {
        const double wl = grid[i];
        g270[i] = eval_gaussian(p.g270, wl);
        g360[i] = eval_gaussian(p.g360, wl);
        if (p.g520) g520[i] = eval_gaussian(*p.g520, wl);
        ramp[i] = eval_ramp(p.ramp_factor, wl);
        offset[i] = p.ref_weight * refv[i];
        total[i] = g270[i] + g360[i] + g520[i] + ramp[i] + offset[i];
        resid[i] = windowed.values()[i] - total[i];
    }

    std::string csv = "wavelength_nm,data,fit,g270,g360,g520,ramp,offset,residual\n";
    const auto cell = [](double v) { return detail::format_double(v, "%.12g"); };
    for (std::size_t i = 0; i < n; ++i) {
        csv += cell(grid[i]) + ',' + cell(windowed.values()[i]) + ',' + cell(total[i]) +
               ',' + cell(g270[i]) + ',' + cell(g360[i]) + ',' + cell(g520[i]) + ',' +
               cell(ramp[i]) + ',' + cell(offset[i]) + ',' + cell(resid[i]) + '\n';
    }

    const std::vector<detail::PlotSeries> series{
        {"data", "#000000", &windowed.values()},
        {"fit", "#d62728", &total},
        {"g270", "#1f77b4", &g270},
        {"g360", "#2ca02c", &g360},
        {"g520", "#9467bd", &g520},
        {"ramp", "#ff7f0e", &ramp},
        {"offset", "#8c564b", &offset},
        {"residual", "#7f7f7f", &resid},
    };
    const std::string svg = detail::render_svg(
        grid, series, "wavelength (nm)",
        is_absorption(windowed.quantity()) ? "absorption coefficient (1/cm)" : "value");

    const std::filesystem::path csv_path = path_prefix + ".csv";
    const std::filesystem::path svg_path = path_prefix + ".svg";
    write_file(csv_path, csv);
    write_file(svg_path, svg);
    return {csv_path, svg_path};
}

} // namespace nsfit
