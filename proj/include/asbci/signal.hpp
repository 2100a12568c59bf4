#pragma once

#include <complex>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace asbci {

// Continuous multi-channel recording (channels x samples, microvolts).
struct RawRecording {
    std::vector<std::vector<double>> data;
    double rate_hz = 0.0;
    std::vector<std::string> channel_names;
    std::string subject;
    int session = 0;
};

// A stimulus onset at the recording's sampling rate.
struct StimulusEvent {
    std::size_t onset_sample = 0;
    bool is_target = false;
};

// A channels x T window cut from a recording.
struct Epoch {
    std::vector<std::vector<double>> data;
    int label = 0;
    std::string subject;
    int session = 0;
    double window_ms = 1000.0;
    double rate_hz = 0.0;
    std::uint64_t uid = 0;  // process-internal identity for leakage audits

    std::size_t channels() const { return data.size(); }
    std::size_t samples() const { return data.empty() ? 0 : data.front().size(); }
    // channel-major flattening; Euclidean norm on this vector equals the
    // Frobenius norm on the matrix
    std::vector<double> flattened() const;
};

// One second-order IIR section, normalized so a0 = 1.
struct Biquad {
    double b0 = 0, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
};

using SosChain = std::vector<Biquad>;

// Butterworth designs via analog prototype, frequency transform, and
// bilinear mapping with prewarped edges.
SosChain butterworth_bandpass(int order, double low_hz, double high_hz, double rate_hz);
SosChain butterworth_lowpass(int order, double cutoff_hz, double rate_hz);

// Constrained biquad notch at center_hz with -3 dB width center_hz / quality.
SosChain notch_biquad(double center_hz, double quality, double rate_hz);

// Complex frequency response of the cascade at freq_hz.
std::complex<double> sos_response(const SosChain& sos, double freq_hz, double rate_hz);

// Single-pass cascade filter (transposed direct form II) with optional
// per-section initial states scaled for a step of height x0.
std::vector<double> sosfilt(const SosChain& sos, const std::vector<double>& x);

// Zero-phase forward-backward filtering with odd-reflection padding and
// steady-state initial conditions at both ends.
std::vector<double> sosfiltfilt(const SosChain& sos, const std::vector<double>& x);

// Pipeline stages; each preserves channel count and applies per channel.
RawRecording bandpass(const RawRecording& rec, double low_hz = 1.0, double high_hz = 15.0,
                      int order = 6);
RawRecording notch(const RawRecording& rec, double center_hz, double quality = 30.0);
RawRecording decimate(const RawRecording& rec, double target_hz = 32.0);
RawRecording winsorize(const RawRecording& rec, double lower_pct = 5.0,
                       double upper_pct = 95.0);

// Cuts one window per event starting at the event onset. Events are given
// at events_rate_hz (default: the recording's own rate) and converted to
// the recording's rate by floor. Windows that overrun the recording are
// dropped. overlap_ms documents the expected spacing-induced overlap; it
// does not change the cutting rule.
std::vector<Epoch> epoch_windows(const RawRecording& rec,
                                 const std::vector<StimulusEvent>& events,
                                 double window_ms = 1000.0, double overlap_ms = 600.0,
                                 double events_rate_hz = 0.0);

// Recording file format: header `subject,session,rate_hz,channels`, then one
// CSV row per sample; events sidecar rows `onset_sample,is_target`.
void write_recording_csv(std::ostream& out, const RawRecording& rec);
RawRecording read_recording_csv(std::istream& in);
void write_events_csv(std::ostream& out, const std::vector<StimulusEvent>& events);
std::vector<StimulusEvent> read_events_csv(std::istream& in);

// Epoch file format: one row per epoch, `subject,session,label,` then the
// channel-major flattened values.
void write_epochs_csv(std::ostream& out, const std::vector<Epoch>& epochs);
std::vector<Epoch> read_epochs_csv(std::istream& in, std::size_t channels, double rate_hz);

}  // namespace asbci
