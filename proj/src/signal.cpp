#include "asbci/signal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "asbci/point_set.hpp"
#include "asbci/rng.hpp"

namespace asbci {

namespace {

constexpr double kPi = 3.141592653589793238462643383279;

// analog Butterworth prototype poles for unit cutoff, left half-plane
std::vector<std::complex<double>> prototype_poles(int order) {
    std::vector<std::complex<double>> poles;
    poles.reserve(static_cast<std::size_t>(order));
    for (int k = 0; k < order; ++k) {
        const double theta = kPi * (2.0 * k + order + 1.0) / (2.0 * order);
        poles.emplace_back(std::cos(theta), std::sin(theta));
    }
    return poles;
}

struct Zpk {
    std::vector<std::complex<double>> zeros;
    std::vector<std::complex<double>> poles;
    double gain = 1.0;
};

// bilinear transform z = (2 fs + s) / (2 fs - s); fills the relative degree
// with zeros at z = -1
Zpk bilinear(const Zpk& analog, double rate_hz) {
    const double fs2 = 2.0 * rate_hz;
    Zpk digital;
    std::complex<double> num(1.0, 0.0), den(1.0, 0.0);
    for (const auto& z : analog.zeros) {
        digital.zeros.push_back((fs2 + z) / (fs2 - z));
        num *= fs2 - z;
    }
    for (const auto& p : analog.poles) {
        digital.poles.push_back((fs2 + p) / (fs2 - p));
        den *= fs2 - p;
    }
    digital.gain = analog.gain * (num / den).real();
    while (digital.zeros.size() < digital.poles.size())
        digital.zeros.emplace_back(-1.0, 0.0);
    return digital;
}

// groups conjugate pole pairs into biquads, ordered with poles closest to
// the unit circle last; gain is spread evenly across sections
SosChain zpk_to_sos(const Zpk& zpk, double zero_b0, double zero_b1, double zero_b2) {
    std::vector<std::complex<double>> upper;
    for (const auto& p : zpk.poles)
        if (p.imag() > 0.0) upper.push_back(p);
    if (upper.size() * 2 != zpk.poles.size())
        throw std::invalid_argument("zpk_to_sos: expected conjugate pole pairs only");
    std::sort(upper.begin(), upper.end(),
              [](const auto& a, const auto& b) { return std::abs(a) < std::abs(b); });

    const double section_gain = std::pow(zpk.gain, 1.0 / static_cast<double>(upper.size()));
    SosChain sos;
    for (const auto& p : upper) {
        Biquad s;
        s.b0 = section_gain * zero_b0;
        s.b1 = section_gain * zero_b1;
        s.b2 = section_gain * zero_b2;
        s.a1 = -2.0 * p.real();
        s.a2 = std::norm(p);
        sos.push_back(s);
    }
    return sos;
}

std::vector<double> odd_extension(const std::vector<double>& x, std::size_t padlen) {
    std::vector<double> ext;
    ext.reserve(x.size() + 2 * padlen);
    for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x.front() - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 2; i <= padlen + 1; ++i)
        ext.push_back(2.0 * x.back() - x[x.size() - i]);
    return ext;
}

// per-section steady state for a step input of height x0 (transposed
// direct form II); the step height entering each section is the upstream
// cascade's DC gain times x0
std::vector<std::pair<double, double>> steady_state(const SosChain& sos, double x0) {
    std::vector<std::pair<double, double>> zi;
    double level = x0;
    for (const auto& s : sos) {
        const double dc = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
        const double z2 = (s.b2 - s.a2 * dc) * level;
        const double z1 = (s.b1 - s.a1 * dc) * level + z2;
        zi.emplace_back(z1, z2);
        level *= dc;
    }
    return zi;
}

std::vector<double> sosfilt_zi(const SosChain& sos, const std::vector<double>& x,
                               const std::vector<std::pair<double, double>>& zi) {
    std::vector<double> y = x;
    for (std::size_t si = 0; si < sos.size(); ++si) {
        const auto& s = sos[si];
        double z1 = zi.empty() ? 0.0 : zi[si].first;
        double z2 = zi.empty() ? 0.0 : zi[si].second;
        for (double& v : y) {
            const double in = v;
            const double out = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * out + z2;
            z2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
    return y;
}

RawRecording apply_per_channel(const RawRecording& rec, const SosChain& sos) {
    RawRecording out = rec;
    for (auto& channel : out.data) channel = sosfiltfilt(sos, channel);
    return out;
}

}  // namespace

std::vector<double> Epoch::flattened() const {
    std::vector<double> out;
    out.reserve(channels() * samples());
    for (const auto& channel : data) out.insert(out.end(), channel.begin(), channel.end());
    return out;
}

SosChain butterworth_bandpass(int order, double low_hz, double high_hz, double rate_hz) {
    if (order < 2 || order % 2 != 0)
        throw std::invalid_argument("butterworth_bandpass: order must be even and >= 2");
    if (!(0.0 < low_hz && low_hz < high_hz && high_hz < rate_hz / 2.0))
        throw std::invalid_argument("butterworth_bandpass: need 0 < low < high < rate/2");

    const double w1 = 2.0 * rate_hz * std::tan(kPi * low_hz / rate_hz);
    const double w2 = 2.0 * rate_hz * std::tan(kPi * high_hz / rate_hz);
    const double bw = w2 - w1;
    const double w0 = std::sqrt(w1 * w2);

    Zpk analog;
    analog.gain = std::pow(bw, order);
    for (const auto& p : prototype_poles(order)) {
        const std::complex<double> scaled = p * (bw / 2.0);
        const std::complex<double> root = std::sqrt(scaled * scaled - w0 * w0);
        analog.poles.push_back(scaled + root);
        analog.poles.push_back(scaled - root);
    }
    analog.zeros.assign(static_cast<std::size_t>(order), std::complex<double>(0.0, 0.0));

    // band-pass sections carry zeros at z = +1 and z = -1: (z-1)(z+1)
    return zpk_to_sos(bilinear(analog, rate_hz), 1.0, 0.0, -1.0);
}

SosChain butterworth_lowpass(int order, double cutoff_hz, double rate_hz) {
    if (order < 2 || order % 2 != 0)
        throw std::invalid_argument("butterworth_lowpass: order must be even and >= 2");
    if (!(0.0 < cutoff_hz && cutoff_hz < rate_hz / 2.0))
        throw std::invalid_argument("butterworth_lowpass: need 0 < cutoff < rate/2");

    const double wc = 2.0 * rate_hz * std::tan(kPi * cutoff_hz / rate_hz);
    Zpk analog;
    analog.gain = std::pow(wc, order);
    for (const auto& p : prototype_poles(order)) analog.poles.push_back(p * wc);

    // low-pass sections carry double zeros at z = -1: (z+1)^2
    return zpk_to_sos(bilinear(analog, rate_hz), 1.0, 2.0, 1.0);
}

SosChain notch_biquad(double center_hz, double quality, double rate_hz) {
    if (!(0.0 < center_hz && center_hz < rate_hz / 2.0))
        throw std::invalid_argument("notch_biquad: need 0 < center < rate/2");
    if (quality <= 0.0) throw std::invalid_argument("notch_biquad: quality must be > 0");
    const double w0 = 2.0 * kPi * center_hz / rate_hz;
    const double alpha = std::sin(w0) / (2.0 * quality);
    Biquad s;
    const double a0 = 1.0 + alpha;
    s.b0 = 1.0 / a0;
    s.b1 = -2.0 * std::cos(w0) / a0;
    s.b2 = 1.0 / a0;
    s.a1 = -2.0 * std::cos(w0) / a0;
    s.a2 = (1.0 - alpha) / a0;
    return {s};
}

std::complex<double> sos_response(const SosChain& sos, double freq_hz, double rate_hz) {
    const double w = 2.0 * kPi * freq_hz / rate_hz;
    const std::complex<double> zinv = std::exp(std::complex<double>(0.0, -w));
    std::complex<double> h(1.0, 0.0);
    for (const auto& s : sos) {
        h *= (s.b0 + s.b1 * zinv + s.b2 * zinv * zinv) /
             (1.0 + s.a1 * zinv + s.a2 * zinv * zinv);
    }
    return h;
}

std::vector<double> sosfilt(const SosChain& sos, const std::vector<double>& x) {
    return sosfilt_zi(sos, x, {});
}

std::vector<double> sosfiltfilt(const SosChain& sos, const std::vector<double>& x) {
    const std::size_t padlen = 3 * (2 * sos.size() + 1);
    if (x.size() <= padlen)
        throw std::invalid_argument("sosfiltfilt: signal shorter than the padding length");

    std::vector<double> ext = odd_extension(x, padlen);
    ext = sosfilt_zi(sos, ext, steady_state(sos, ext.front()));
    std::reverse(ext.begin(), ext.end());
    ext = sosfilt_zi(sos, ext, steady_state(sos, ext.front()));
    std::reverse(ext.begin(), ext.end());
    return {ext.begin() + static_cast<std::ptrdiff_t>(padlen),
            ext.begin() + static_cast<std::ptrdiff_t>(padlen + x.size())};
}

RawRecording bandpass(const RawRecording& rec, double low_hz, double high_hz, int order) {
    return apply_per_channel(rec, butterworth_bandpass(order, low_hz, high_hz, rec.rate_hz));
}

RawRecording notch(const RawRecording& rec, double center_hz, double quality) {
    return apply_per_channel(rec, notch_biquad(center_hz, quality, rec.rate_hz));
}

RawRecording decimate(const RawRecording& rec, double target_hz) {
    if (target_hz <= 0.0) throw std::invalid_argument("decimate: target rate must be > 0");
    const double ratio = rec.rate_hz / target_hz;
    const auto factor = static_cast<std::size_t>(std::llround(ratio));
    if (factor < 1 || std::abs(ratio - static_cast<double>(factor)) > 1e-9)
        throw std::invalid_argument("decimate: rate must be an integer multiple of target");

    RawRecording filtered =
        factor == 1 ? rec
                    : apply_per_channel(rec, butterworth_lowpass(8, 0.4 * target_hz, rec.rate_hz));
    RawRecording out = rec;
    out.rate_hz = target_hz;
    for (std::size_t c = 0; c < filtered.data.size(); ++c) {
        out.data[c].clear();
        for (std::size_t i = 0; i < filtered.data[c].size(); i += factor)
            out.data[c].push_back(filtered.data[c][i]);
    }
    return out;
}

RawRecording winsorize(const RawRecording& rec, double lower_pct, double upper_pct) {
    if (!(0.0 <= lower_pct && lower_pct < upper_pct && upper_pct <= 100.0))
        throw std::invalid_argument("winsorize: need 0 <= lower < upper <= 100");
    RawRecording out = rec;
    for (auto& channel : out.data) {
        if (channel.empty()) continue;
        const double lo = percentile(channel, lower_pct);
        const double hi = percentile(channel, upper_pct);
        for (double& v : channel) v = std::clamp(v, lo, hi);
    }
    return out;
}

std::vector<Epoch> epoch_windows(const RawRecording& rec,
                                 const std::vector<StimulusEvent>& events,
                                 double window_ms, double overlap_ms,
                                 double events_rate_hz) {
    if (window_ms <= 0.0) throw std::invalid_argument("epoch_windows: window must be > 0 ms");
    if (overlap_ms < 0.0 || overlap_ms >= window_ms)
        throw std::invalid_argument("epoch_windows: overlap must be in [0, window)");
    const double source_rate = events_rate_hz > 0.0 ? events_rate_hz : rec.rate_hz;
    const auto t = static_cast<std::size_t>(std::llround(window_ms / 1000.0 * rec.rate_hz));
    const std::size_t total = rec.data.empty() ? 0 : rec.data.front().size();

    std::vector<Epoch> epochs;
    for (const auto& event : events) {
        const auto start = static_cast<std::size_t>(
            std::floor(static_cast<double>(event.onset_sample) * rec.rate_hz / source_rate));
        if (start + t > total) continue;
        Epoch e;
        e.label = event.is_target ? 1 : 0;
        e.subject = rec.subject;
        e.session = rec.session;
        e.window_ms = window_ms;
        e.rate_hz = rec.rate_hz;
        e.uid = mix_seed(mix_seed(std::hash<std::string>{}(rec.subject),
                                  static_cast<std::uint64_t>(rec.session)),
                         event.onset_sample);
        e.data.reserve(rec.data.size());
        for (const auto& channel : rec.data)
            e.data.emplace_back(channel.begin() + static_cast<std::ptrdiff_t>(start),
                                channel.begin() + static_cast<std::ptrdiff_t>(start + t));
        epochs.push_back(std::move(e));
    }
    return epochs;
}

void write_recording_csv(std::ostream& out, const RawRecording& rec) {
    out << rec.subject << "," << rec.session << "," << rec.rate_hz << ","
        << rec.data.size() << "\n";
    const std::size_t total = rec.data.empty() ? 0 : rec.data.front().size();
    out.precision(17);
    for (std::size_t i = 0; i < total; ++i) {
        for (std::size_t c = 0; c < rec.data.size(); ++c) {
            if (c) out << ",";
            out << rec.data[c][i];
        }
        out << "\n";
    }
}

RawRecording read_recording_csv(std::istream& in) {
    RawRecording rec;
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("read_recording_csv: missing header");
    std::stringstream header(line);
    std::string field;
    std::getline(header, rec.subject, ',');
    std::getline(header, field, ',');
    rec.session = std::stoi(field);
    std::getline(header, field, ',');
    rec.rate_hz = std::stod(field);
    std::getline(header, field, ',');
    const std::size_t channels = std::stoul(field);
    if (channels == 0 || rec.rate_hz <= 0.0)
        throw std::invalid_argument("read_recording_csv: invalid header");
    rec.data.resize(channels);
    for (std::size_t c = 0; c < channels; ++c)
        rec.channel_names.push_back("ch" + std::to_string(c));

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        for (std::size_t c = 0; c < channels; ++c) {
            if (!std::getline(row, field, ','))
                throw std::invalid_argument("read_recording_csv: short sample row");
            rec.data[c].push_back(std::stod(field));
        }
    }
    if (rec.data.front().empty())
        throw std::invalid_argument("read_recording_csv: no samples");
    return rec;
}

void write_events_csv(std::ostream& out, const std::vector<StimulusEvent>& events) {
    out << "onset_sample,is_target\n";
    for (const auto& e : events) out << e.onset_sample << "," << (e.is_target ? 1 : 0) << "\n";
}

std::vector<StimulusEvent> read_events_csv(std::istream& in) {
    std::vector<StimulusEvent> events;
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("read_events_csv: missing header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string field;
        StimulusEvent e;
        std::getline(row, field, ',');
        e.onset_sample = std::stoul(field);
        std::getline(row, field, ',');
        e.is_target = std::stoi(field) != 0;
        events.push_back(e);
    }
    return events;
}

void write_epochs_csv(std::ostream& out, const std::vector<Epoch>& epochs) {
    out.precision(17);
    for (const auto& e : epochs) {
        out << e.subject << "," << e.session << "," << e.label << ",";
        const auto flat = e.flattened();
        for (std::size_t i = 0; i < flat.size(); ++i) {
            if (i) out << ",";
            out << flat[i];
        }
        out << "\n";
    }
}

std::vector<Epoch> read_epochs_csv(std::istream& in, std::size_t channels, double rate_hz) {
    if (channels == 0) throw std::invalid_argument("read_epochs_csv: channels must be > 0");
    std::vector<Epoch> epochs;
    std::string line;
    std::size_t row_index = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string field;
        Epoch e;
        std::getline(row, e.subject, ',');
        std::getline(row, field, ',');
        e.session = std::stoi(field);
        std::getline(row, field, ',');
        e.label = std::stoi(field);
        std::vector<double> flat;
        while (std::getline(row, field, ',')) flat.push_back(std::stod(field));
        if (flat.empty() || flat.size() % channels != 0)
            throw std::invalid_argument("read_epochs_csv: row length not divisible by channels");
        const std::size_t t = flat.size() / channels;
        e.rate_hz = rate_hz;
        e.window_ms = 1000.0 * static_cast<double>(t) / rate_hz;
        e.uid = mix_seed(std::hash<std::string>{}(e.subject),
                         mix_seed(static_cast<std::uint64_t>(e.session), row_index));
        e.data.resize(channels);
        for (std::size_t c = 0; c < channels; ++c)
            e.data[c].assign(flat.begin() + static_cast<std::ptrdiff_t>(c * t),
                             flat.begin() + static_cast<std::ptrdiff_t>((c + 1) * t));
        epochs.push_back(std::move(e));
        ++row_index;
    }
    return epochs;
}

}  // namespace asbci
