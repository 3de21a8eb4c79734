#include "pbfrec/signal_prep.hpp"

#include <cmath>
#include <numbers>

#include "pbfrec/errors.hpp"

namespace pbfrec {

BinaryLaserSignal normalize_laser(std::span<const double> raw, const HysteresisThresholds& th) {
    if (th.threshold_on <= th.threshold_off)
        throw ConfigError("hysteresis thresholds: threshold_on must exceed threshold_off");

    BinaryLaserSignal out;
    out.states.resize(raw.size());
    LaserState state = LaserState::Off;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double v = raw[i];
        if (v >= th.threshold_on)
            state = LaserState::On;
        else if (v <= th.threshold_off)
            state = LaserState::Off;
        out.states[i] = state;
    }
    return out;
}

ButterworthLowpass::ButterworthLowpass(const FilterSpec& spec) {
    if (spec.order < 1)
        throw ConfigError("filter order must be >= 1");
    if (spec.sample_rate_hz <= 0.0)
        throw ConfigError("filter sample rate must be positive");
    if (spec.cutoff_hz <= 0.0 || spec.cutoff_hz >= spec.sample_rate_hz / 2.0)
        throw ConfigError("filter cutoff must lie in (0, Nyquist)");

    const int n_biquads = spec.order / 2;
    const double a = std::tan(std::numbers::pi * spec.cutoff_hz / spec.sample_rate_hz);
    const double a2 = a * a;

    sections_.reserve(static_cast<std::size_t>(n_biquads));
    for (int i = 0; i < n_biquads; ++i) {
        // Analog pole pair of the Butterworth prototype, mapped through the
        // bilinear transform with prewarping.
        const double r = std::sin(std::numbers::pi * (2.0 * i + 1.0) / (2.0 * spec.order));
        const double s = a2 + 2.0 * a * r + 1.0;
        Biquad b;
        b.gain = a2 / s;
        b.d1 = 2.0 * (1.0 - a2) / s;
        b.d2 = -(a2 - 2.0 * a * r + 1.0) / s;
        sections_.push_back(b);
    }
    if (spec.order % 2 == 1) {
        has_first_order_ = true;
        first_order_.a = a;
    }
}

void ButterworthLowpass::prime(double value) {
    // Each section has unity DC gain, so a constant input propagates through
    // the cascade unchanged; the steady-state internal value follows from
    // w = d1*w + d2*w + x.
    for (Biquad& b : sections_) {
        const double w = value / (1.0 - b.d1 - b.d2);
        b.w1 = w;
        b.w2 = w;
    }
    if (has_first_order_) {
        first_order_.x1 = value;
        first_order_.y1 = value;
    }
}

double ButterworthLowpass::step(double x) {
    for (Biquad& b : sections_) {
        const double w0 = b.d1 * b.w1 + b.d2 * b.w2 + x;
        x = b.gain * (w0 + 2.0 * b.w1 + b.w2);
        b.w2 = b.w1;
        b.w1 = w0;
    }
    if (has_first_order_) {
        const double a = first_order_.a;
        const double y = (a * (x + first_order_.x1) - (a - 1.0) * first_order_.y1) / (1.0 + a);
        first_order_.x1 = x;
        first_order_.y1 = y;
        x = y;
    }
    return x;
}

std::vector<double> lowpass_filter(std::span<const double> raw, const FilterSpec& spec) {
    ButterworthLowpass filter(spec);
    std::vector<double> out;
    out.reserve(raw.size());
    if (!raw.empty())
        filter.prime(raw.front());
    for (double v : raw)
        out.push_back(filter.step(v));
    return out;
}

}  // namespace pbfrec
