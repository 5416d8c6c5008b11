#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "spadsim/errors.hpp"
#include "spadsim/photon_source.hpp"
#include "stat_utils.hpp"

using namespace spadsim;

namespace {

std::vector<picos> collect(const PhotonStream& s, const SimClock& clock) {
    ArrivalStream gen(s, clock);
    std::vector<picos> out;
    while (auto t = gen.next()) out.push_back(*t);
    return out;
}

} // namespace

TEST_CASE("cw source construction") {
    const PhotonStream s = make_cw_source(1e4);
    CHECK(s.kind == SourceKind::cw);
    CHECK(s.rate_n == 1e4);
    CHECK(s.shutter_open);
    CHECK(s.mean_rate() == doctest::Approx(1e4));

    CHECK_THROWS_AS(make_cw_source(-1.0), ConfigError);
}

TEST_CASE("zero-rate cw stream never emits") {
    const auto arr = collect(make_cw_source(0.0), make_clock(1.0, 7));
    CHECK(arr.empty());
}

TEST_CASE("cw arrivals form a Poisson process") {
    // Mean count over independent seeded runs: 1e6 photons/s for 1 s.
    std::vector<double> counts;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        ArrivalStream gen(make_cw_source(1e6), make_clock(1.0, seed));
        std::uint64_t c = 0;
        while (gen.next()) ++c;
        counts.push_back(static_cast<double>(c));
    }
    const double m = testutil::mean(counts);
    CHECK(m > 1e6 - 4e3);
    CHECK(m < 1e6 + 4e3);
    // Variance should be near the mean as well.
    const double sd = testutil::stddev(counts);
    CHECK(sd > 700.0);
    CHECK(sd < 1300.0);
}

TEST_CASE("cw inter-arrival times pass a KS test against Exp(1/rate)") {
    const double rate = 1e5;
    ArrivalStream gen(make_cw_source(rate), make_clock(2.0, 12345));
    std::vector<double> gaps;
    picos prev = 0;
    while (auto t = gen.next()) {
        gaps.push_back(picos_to_seconds(*t - prev));
        prev = *t;
        if (gaps.size() == 100000) break;
    }
    REQUIRE(gaps.size() == 100000);
    const double d = testutil::ks_statistic_exponential(gaps, 1.0 / rate);
    CHECK(d < testutil::ks_critical_01(gaps.size()));
}

TEST_CASE("pulsed source construction and totals") {
    const PhotonStream s = make_pulsed_source(1e4, 1.0);
    CHECK(s.kind == SourceKind::pulsed);
    CHECK(s.mean_rate() == doctest::Approx(1e4));
    CHECK_THROWS_AS(make_pulsed_source(0.0, 1.0), ConfigError);
    CHECK_THROWS_AS(make_pulsed_source(1e4, -0.5), ConfigError);

    SUBCASE("mean 0 gives a photon-free pulse train") {
        const auto arr = collect(make_pulsed_source(1e4, 0.0), make_clock(1.0, 3));
        CHECK(arr.empty());
    }

    SUBCASE("total photons over 100 s match the Poisson sum") {
        ArrivalStream gen(make_pulsed_source(1e4, 1.0), make_clock(100.0, 99));
        std::uint64_t c = 0;
        while (gen.next()) ++c;
        // 1e6 pulses of mean 1: total ~ Poisson(1e6), 4 sigma = 4e3.
        CHECK(c > 1000000 - 4000);
        CHECK(c < 1000000 + 4000);
    }

    SUBCASE("delta envelope puts photons exactly on pulse epochs") {
        ArrivalStream gen(make_pulsed_source(1e4, 5.0), make_clock(0.01, 11));
        const picos period = seconds_to_picos(1e-4);
        while (auto t = gen.next()) CHECK(*t % period == 0);
    }
}

TEST_CASE("gaussian envelope spreads arrivals and keeps order") {
    PhotonStream s = make_pulsed_source(1e4, 3.0);
    s.envelope = PulseEnvelope::gaussian;
    s.envelope_fwhm = 1e-9;
    const auto arr = collect(s, make_clock(0.1, 21));
    REQUIRE(arr.size() > 100);
    bool any_off_epoch = false;
    const picos period = seconds_to_picos(1e-4);
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (i > 0) CHECK(arr[i] >= arr[i - 1]);
        if (arr[i] % period != 0) any_off_epoch = true;
    }
    CHECK(any_off_epoch);
}

TEST_CASE("shutter") {
    const PhotonStream open = make_cw_source(1e4);

    SUBCASE("closed shutter yields zero arrivals") {
        const auto arr = collect(set_shutter(open, false), make_clock(1.0, 5));
        CHECK(arr.empty());
    }
    SUBCASE("opening an open stream is the identity") {
        const PhotonStream same = set_shutter(open, true);
        CHECK(same.kind == open.kind);
        CHECK(same.rate_n == open.rate_n);
        CHECK(same.shutter_open);
        CHECK(collect(same, make_clock(0.01, 5)) ==
              collect(open, make_clock(0.01, 5)));
    }
    SUBCASE("dark kind generates nothing") {
        CHECK(collect(make_dark_source(), make_clock(1.0, 5)).empty());
        CHECK(make_dark_source().mean_rate() == 0.0);
    }
}

TEST_CASE("identical seed and config reproduce the arrival stream exactly") {
    const PhotonStream s = make_cw_source(5e4);
    const auto a = collect(s, make_clock(0.5, 77));
    const auto b = collect(s, make_clock(0.5, 77));
    CHECK(a == b);
    const auto c = collect(s, make_clock(0.5, 78));
    CHECK(a != c);
}

TEST_CASE("all arrivals lie inside [0, duration)") {
    const auto arr = collect(make_cw_source(1e6), make_clock(0.01, 13));
    REQUIRE(!arr.empty());
    for (picos t : arr) {
        CHECK(t >= 0);
        CHECK(t < seconds_to_picos(0.01));
    }
}
