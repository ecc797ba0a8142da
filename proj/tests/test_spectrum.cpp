#include <catch2/catch_amalgamated.hpp>

#include "nsfit/spectrum.hpp"

#include <cmath>
#include <vector>

using namespace nsfit;
using Catch::Approx;

namespace {

Spectrum transmission(std::vector<double> wl, std::vector<double> t) {
    return Spectrum(std::move(wl), std::move(t), Quantity::TransmissionFraction);
}

SampleMeta meta_with(double thickness_cm) {
    SampleMeta m;
    m.sample_id = "test";
    m.thickness_cm = thickness_cm;
    return m;
}

} // namespace

TEST_CASE("Spectrum construction", "[spectrum]") {
    SECTION("valid data") {
        Spectrum s({200.0, 300.0, 400.0}, {1.0, 2.0, 3.0}, Quantity::AbsorptionDecadic);
        REQUIRE(s.size() == 3);
        REQUIRE(s.min_wavelength_nm() == 200.0);
        REQUIRE(s.max_wavelength_nm() == 400.0);
        REQUIRE(s.quantity() == Quantity::AbsorptionDecadic);
    }

    SECTION("fewer than two points throws") {
        REQUIRE_THROWS_AS(Spectrum({200.0}, {1.0}, Quantity::AbsorptionDecadic), Error);
    }

    SECTION("length mismatch throws") {
        REQUIRE_THROWS_AS(Spectrum({200.0, 300.0}, {1.0}, Quantity::AbsorptionDecadic),
                          Error);
    }

    SECTION("non-increasing wavelengths throw") {
        REQUIRE_THROWS_AS(
            Spectrum({200.0, 200.0}, {1.0, 2.0}, Quantity::AbsorptionDecadic), Error);
        REQUIRE_THROWS_AS(
            Spectrum({300.0, 200.0}, {1.0, 2.0}, Quantity::AbsorptionDecadic), Error);
    }

    SECTION("non-finite values throw") {
        REQUIRE_THROWS_AS(Spectrum({200.0, 300.0}, {1.0, std::nan("")},
                                   Quantity::AbsorptionDecadic),
                          Error);
    }

    SECTION("transmission fraction outside [0, 1] throws") {
        REQUIRE_THROWS_AS(transmission({200.0, 300.0}, {0.5, 1.5}), Error);
    }

    SECTION("transmission percent outside [0, 100] throws") {
        REQUIRE_THROWS_AS(
            Spectrum({200.0, 300.0}, {50.0, 120.0}, Quantity::TransmissionPercent), Error);
    }
}

TEST_CASE("Quantity helpers", "[spectrum]") {
    REQUIRE(is_transmission(Quantity::TransmissionFraction));
    REQUIRE(is_transmission(Quantity::TransmissionPercent));
    REQUIRE(is_absorption(Quantity::AbsorptionDecadic));
    REQUIRE(is_absorption(Quantity::AbsorptionNatural));
    REQUIRE(convention_of(Quantity::AbsorptionDecadic) == Convention::Decadic);
    REQUIRE(convention_of(Quantity::AbsorptionNatural) == Convention::Natural);
    REQUIRE(absorption_quantity(Convention::Decadic) == Quantity::AbsorptionDecadic);
    REQUIRE(absorption_quantity(Convention::Natural) == Quantity::AbsorptionNatural);
    REQUIRE_THROWS_AS(convention_of(Quantity::TransmissionFraction), Error);
}

TEST_CASE("value_at interpolation", "[spectrum]") {
    Spectrum s({200.0, 300.0, 400.0}, {0.0, 10.0, 30.0}, Quantity::AbsorptionDecadic);

    SECTION("exact at grid points") {
        REQUIRE(s.value_at(200.0) == 0.0);
        REQUIRE(s.value_at(300.0) == 10.0);
        REQUIRE(s.value_at(400.0) == 30.0);
    }

    SECTION("linear midpoint") {
        REQUIRE(s.value_at(250.0) == Approx(5.0));
        REQUIRE(s.value_at(350.0) == Approx(20.0));
    }

    SECTION("out of range throws") {
        REQUIRE_THROWS_AS(s.value_at(150.0), GridOutOfRange);
        REQUIRE_THROWS_AS(s.value_at(450.0), GridOutOfRange);
    }
}

TEST_CASE("Lambert-Beer conversion", "[spectrum]") {
    SECTION("full transmission gives zero absorption") {
        const Spectrum t = transmission({200.0, 300.0, 400.0}, {1.0, 1.0, 1.0});
        const Spectrum a = to_absorption(t, meta_with(0.5), Convention::Decadic);
        REQUIRE(a.quantity() == Quantity::AbsorptionDecadic);
        for (double v : a.values()) REQUIRE(v == Approx(0.0).margin(1e-15));
    }

    SECTION("T = 10% through 0.1 cm gives 10 per cm decadic") {
        const Spectrum t = transmission({200.0, 300.0}, {0.1, 0.1});
        const Spectrum a = to_absorption(t, meta_with(0.1), Convention::Decadic);
        REQUIRE(a.values()[0] == Approx(10.0));
    }

    SECTION("natural convention is decadic times ln 10") {
        const Spectrum t = transmission({200.0, 300.0}, {0.1, 0.37});
        const Spectrum ad = to_absorption(t, meta_with(0.1), Convention::Decadic);
        const Spectrum an = to_absorption(t, meta_with(0.1), Convention::Natural);
        REQUIRE(an.quantity() == Quantity::AbsorptionNatural);
        for (std::size_t i = 0; i < ad.size(); ++i) {
            REQUIRE(an.values()[i] ==
                    Approx(ad.values()[i] * std::log(10.0)).epsilon(1e-12));
        }
    }

    SECTION("percent input is scaled to a fraction first") {
        const Spectrum tp =
            Spectrum({200.0, 300.0}, {10.0, 10.0}, Quantity::TransmissionPercent);
        const Spectrum a = to_absorption(tp, meta_with(0.1), Convention::Decadic);
        REQUIRE(a.values()[0] == Approx(10.0));
    }

    SECTION("zero transmission throws with location") {
        const Spectrum t = transmission({200.0, 300.0}, {0.0, 0.5});
        try {
            (void)to_absorption(t, meta_with(0.1), Convention::Decadic);
            FAIL("expected NonPositiveTransmission");
        } catch (const NonPositiveTransmission& e) {
            REQUIRE(e.wavelength_nm == 200.0);
            REQUIRE(e.value == 0.0);
        }
    }

    SECTION("absorption input throws AlreadyAbsorption") {
        const Spectrum a =
            Spectrum({200.0, 300.0}, {1.0, 2.0}, Quantity::AbsorptionDecadic);
        REQUIRE_THROWS_AS(to_absorption(a, meta_with(0.1), Convention::Decadic),
                          AlreadyAbsorption);
    }

    SECTION("missing thickness throws") {
        const Spectrum t = transmission({200.0, 300.0}, {0.5, 0.5});
        REQUIRE_THROWS_AS(to_absorption(t, SampleMeta{}, Convention::Decadic),
                          MissingThickness);
    }

    SECTION("round trip through the analytic inverse") {
        const Spectrum t = transmission({200.0, 300.0, 400.0}, {0.9, 0.31, 0.05});
        const double d = 0.03;
        const Spectrum a = to_absorption(t, meta_with(d), Convention::Decadic);
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double back = std::pow(10.0, -a.values()[i] * d);
            REQUIRE(back == Approx(t.values()[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("resample", "[spectrum]") {
    const Spectrum s({200.0, 300.0, 400.0}, {0.0, 10.0, 20.0},
                     Quantity::AbsorptionDecadic);

    SECTION("identity on own grid") {
        const Spectrum r = resample(s, s.wavelengths_nm());
        REQUIRE(r.wavelengths_nm() == s.wavelengths_nm());
        REQUIRE(r.values() == s.values());
    }

    SECTION("linear midpoint") {
        const std::vector<double> grid{250.0, 350.0};
        const Spectrum r = resample(s, grid);
        REQUIRE(r.values()[0] == Approx(5.0));
        REQUIRE(r.values()[1] == Approx(15.0));
    }

    SECTION("exact on affine data") {
        // c0 + c1 * wl survives linear interpolation at any in-range point.
        const double c0 = 3.0, c1 = 0.02;
        std::vector<double> wl, v;
        for (double x = 200.0; x <= 800.0; x += 7.0) {
            wl.push_back(x);
            v.push_back(c0 + c1 * x);
        }
        const Spectrum affine(wl, v, Quantity::AbsorptionDecadic);
        const std::vector<double> grid{203.3, 456.7, 641.9, 788.1};
        const Spectrum r = resample(affine, grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            REQUIRE(r.values()[i] == Approx(c0 + c1 * grid[i]).epsilon(1e-12));
        }
    }

    SECTION("extrapolation throws") {
        REQUIRE_THROWS_AS(resample(s, std::vector<double>{150.0, 250.0}), GridOutOfRange);
        REQUIRE_THROWS_AS(resample(s, std::vector<double>{250.0, 450.0}), GridOutOfRange);
    }
}

TEST_CASE("crop", "[spectrum]") {
    std::vector<double> wl, v;
    for (double x = 200.0; x <= 800.0; x += 50.0) {
        wl.push_back(x);
        v.push_back(x / 100.0);
    }
    const Spectrum s(wl, v, Quantity::AbsorptionDecadic);

    SECTION("650 nm cutoff keeps everything at or below") {
        const Spectrum c = crop(s, 200.0, 650.0);
        REQUIRE(c.max_wavelength_nm() == 650.0);
        REQUIRE(c.size() == 10);
    }

    SECTION("full-range crop is the identity") {
        const Spectrum c = crop(s, 200.0, 800.0);
        REQUIRE(c.wavelengths_nm() == s.wavelengths_nm());
        REQUIRE(c.values() == s.values());
    }

    SECTION("disjoint range throws") {
        REQUIRE_THROWS_AS(crop(s, 900.0, 1000.0), EmptyResult);
    }

    SECTION("nested crops collapse") {
        const Spectrum once = crop(s, 250.0, 650.0);
        const Spectrum twice = crop(crop(s, 200.0, 700.0), 250.0, 650.0);
        REQUIRE(once.wavelengths_nm() == twice.wavelengths_nm());
        REQUIRE(once.values() == twice.values());
    }

    SECTION("source is unmodified") {
        const std::size_t before = s.size();
        (void)crop(s, 300.0, 500.0);
        REQUIRE(s.size() == before);
    }
}

TEST_CASE("SampleMeta thickness requirement", "[spectrum]") {
    SampleMeta m;
    REQUIRE_THROWS_AS(m.require_thickness_cm(), MissingThickness);
    m.thickness_cm = 0.03;
    REQUIRE(m.require_thickness_cm() == 0.03);
    m.thickness_cm = -1.0;
    REQUIRE_THROWS_AS(m.require_thickness_cm(), Error);
}
