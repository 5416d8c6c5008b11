#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "spadsim/event_engine.hpp"
#include "reference_sim.hpp"

using namespace spadsim;

namespace {

// Candidate times snapped onto the 1 ns grid, so both simulators see
// identical inputs at the reference simulator's resolution.
std::vector<picos> grid_arrivals(const PhotonStream& s, double duration_s,
                                 std::uint64_t seed) {
    ArrivalStream gen(s, make_clock(duration_s, seed));
    std::vector<picos> out;
    while (auto t = gen.next())
        out.push_back((*t / kPicosPerNanosecond) * kPicosPerNanosecond);
    return out;
}

void compare_counts(const EventLog& log, const testutil::ReferenceCounts& ref) {
    auto within_half_percent = [](std::uint64_t a, std::uint64_t b) {
        const double hi = std::max<double>(a, b);
        return std::abs(static_cast<double>(a) - static_cast<double>(b)) <=
               0.005 * std::max(hi, 1.0);
    };
    INFO("engine photon=" << log.meta.detections_photon
                          << " dark=" << log.meta.detections_dark
                          << " afterpulse=" << log.meta.detections_afterpulse);
    INFO("reference photon=" << ref.photon << " dark=" << ref.dark
                             << " afterpulse=" << ref.afterpulse);
    CHECK(within_half_percent(log.meta.detections_photon, ref.photon));
    CHECK(within_half_percent(log.meta.detections_dark, ref.dark));
    CHECK(within_half_percent(log.meta.detections_afterpulse, ref.afterpulse));
    CHECK(within_half_percent(log.meta.total_detections(), ref.total()));
}

DetectorParams b2_detector() {
    DetectorParams d;
    d.dark_n0 = 2000.0;
    d.dark_slope = 0.0;
    return d;
}

} // namespace

TEST_CASE("engine matches the 1 ns reference simulator, free-running") {
    const DetectorParams det = b2_detector();
    QuenchConfig q;
    q.mode = QuenchMode::free_running;
    q.dead_time = seconds_to_picos(24e-6);

    const auto photons = grid_arrivals(make_cw_source(1e5), 1.0, 501);
    const auto darks = grid_arrivals(make_cw_source(2000.0), 1.0, 502);
    const SimClock clock = make_clock(1.0, 77);

    const EventLog log = run_with_arrivals(photons, darks, det, q, clock);
    const auto ref = testutil::reference_simulate(photons, darks, det, q, clock);
    REQUIRE(log.meta.total_detections() > 5000);
    compare_counts(log, ref);
}

TEST_CASE("engine matches the 1 ns reference simulator, gated") {
    const DetectorParams det = b2_detector();
    QuenchConfig q;
    q.mode = QuenchMode::gated;
    q.f_trig = 1e4;
    q.gate_width = seconds_to_picos(100e-9);

    const auto photons = grid_arrivals(make_pulsed_source(1e4, 5.0), 1.0, 601);
    const auto darks = grid_arrivals(make_cw_source(2000.0), 1.0, 602);
    const SimClock clock = make_clock(1.0, 88);

    const EventLog log = run_with_arrivals(photons, darks, det, q, clock);
    const auto ref = testutil::reference_simulate(photons, darks, det, q, clock);
    REQUIRE(log.meta.total_detections() > 1000);
    compare_counts(log, ref);
}
