#include "spadsim/photon_source.hpp"

#include <algorithm>
#include <cmath>

#include "spadsim/errors.hpp"

namespace spadsim {

PhotonStream make_cw_source(double rate_n) {
    if (rate_n < 0.0 || !std::isfinite(rate_n))
        throw ConfigError("cw source: rate_n must be finite and >= 0");
    PhotonStream s;
    s.kind = SourceKind::cw;
    s.rate_n = rate_n;
    return s;
}

PhotonStream make_pulsed_source(double f_trig, double mean_photons_per_pulse) {
    if (f_trig <= 0.0 || !std::isfinite(f_trig))
        throw ConfigError("pulsed source: f_trig must be finite and > 0");
    if (mean_photons_per_pulse < 0.0 || !std::isfinite(mean_photons_per_pulse))
        throw ConfigError("pulsed source: mean_photons_per_pulse must be finite and >= 0");
    PhotonStream s;
    s.kind = SourceKind::pulsed;
    s.f_trig = f_trig;
    s.mean_photons_per_pulse = mean_photons_per_pulse;
    return s;
}

PhotonStream make_dark_source() {
    return PhotonStream{};
}

PhotonStream set_shutter(PhotonStream stream, bool open) {
    stream.shutter_open = open;
    return stream;
}

ArrivalStream::ArrivalStream(const PhotonStream& stream, const SimClock& clock)
    : stream_(stream),
      duration_(clock.duration),
      rng_(make_substream(clock.seed, StreamId::source)) {
    if (stream_.kind == SourceKind::dark || !stream_.shutter_open ||
        stream_.mean_rate() <= 0.0 || duration_ <= 0) {
        exhausted_ = true;
    }
}

void ArrivalStream::refill_pulse() {
    const double period_s = 1.0 / stream_.f_trig;
    while (true) {
        const double epoch_s = static_cast<double>(pulse_index_) * period_s;
        const picos epoch = seconds_to_picos(epoch_s);
        if (epoch >= duration_) {
            exhausted_ = true;
            return;
        }
        ++pulse_index_;
        const std::uint64_t count =
            sample_poisson(rng_, stream_.mean_photons_per_pulse);
        if (count == 0) continue;

        pulse_buffer_.clear();
        const double sigma_s =
            stream_.envelope == PulseEnvelope::gaussian
                ? stream_.envelope_fwhm / 2.3548200450309493
                : 0.0;
        for (std::uint64_t i = 0; i < count; ++i) {
            double t_s = epoch_s;
            if (sigma_s > 0.0) {
                // Offsets are capped at half a period so the merged stream
                // stays monotone across pulses.
                double off = sigma_s * sample_standard_normal(rng_);
                off = std::clamp(off, -0.5 * period_s, 0.5 * period_s);
                t_s += off;
            }
            const picos t = seconds_to_picos(t_s);
            if (t >= 0 && t < duration_) pulse_buffer_.push_back(t);
        }
        if (pulse_buffer_.empty()) continue;
        std::sort(pulse_buffer_.begin(), pulse_buffer_.end());
        pulse_pos_ = 0;
        return;
    }
}

std::optional<picos> ArrivalStream::next() {
    if (exhausted_) return std::nullopt;
    switch (stream_.kind) {
        case SourceKind::cw: {
            next_cw_s_ += sample_exponential(rng_, 1.0 / stream_.rate_n);
            const picos t = seconds_to_picos(next_cw_s_);
            if (t >= duration_) {
                exhausted_ = true;
                return std::nullopt;
            }
            ++generated_;
            return t;
        }
        case SourceKind::pulsed: {
            if (pulse_pos_ >= pulse_buffer_.size()) {
                refill_pulse();
                if (exhausted_) return std::nullopt;
            }
            ++generated_;
            return pulse_buffer_[pulse_pos_++];
        }
        case SourceKind::dark:
            return std::nullopt;
    }
    return std::nullopt;
}

} // namespace spadsim
