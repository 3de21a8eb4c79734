#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pbfrec {

enum class LaserState : std::uint8_t { Off = 0, On = 1 };

/// Laser channel normalized to ON/OFF states, same length as the raw channel.
struct BinaryLaserSignal {
    std::vector<LaserState> states;

    std::size_t size() const { return states.size(); }
    bool on(std::size_t i) const { return states[i] == LaserState::On; }
};

/// Two-threshold hysteresis. The separation between the thresholds absorbs
/// noise that would otherwise flip the state on every spike.
struct HysteresisThresholds {
    double threshold_on = 2.2;
    double threshold_off = 1.1;
};

/// Low-pass filter specification. cutoff_hz must stay below Nyquist.
struct FilterSpec {
    int order = 4;
    double cutoff_hz = 6000.0;
    double sample_rate_hz = 20000.0;
};

/// Normalizes a raw laser voltage channel to binary ON/OFF states.
/// state[i] = ON when raw[i] >= threshold_on, OFF when raw[i] <= threshold_off,
/// otherwise the previous state is held (initial state OFF).
BinaryLaserSignal normalize_laser(std::span<const double> raw, const HysteresisThresholds& th);

/// Causal single-pass Butterworth low-pass filter (bilinear design, cascaded
/// second-order sections). Unity DC gain; the phase shift of a causal pass is
/// accepted downstream. Filter state is primed with the first sample so a
/// trace that starts in an idle plateau produces no startup transient.
std::vector<double> lowpass_filter(std::span<const double> raw, const FilterSpec& spec);

/// Streaming form of the same filter, used where channels are processed
/// incrementally.
class ButterworthLowpass {
public:
    explicit ButterworthLowpass(const FilterSpec& spec);

    /// Seeds all internal state to the steady-state response for `value`.
    void prime(double value);
    double step(double x);

private:
    struct Biquad {
        double gain, d1, d2;
        double w1 = 0.0, w2 = 0.0;
    };
    struct FirstOrder {
        double a;  // prewarped tan(pi*fc/fs)
        double x1 = 0.0, y1 = 0.0;
    };
    std::vector<Biquad> sections_;
    bool has_first_order_ = false;
    FirstOrder first_order_{};
};

}  // namespace pbfrec
