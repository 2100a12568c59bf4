#include "asbci/synthetic.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "asbci/rng.hpp"

namespace asbci {

namespace {

std::string subject_id(std::size_t index) {
    std::string digits = std::to_string(index + 1);
    if (digits.size() < 2) digits.insert(digits.begin(), '0');
    return "S" + digits;
}

void validate(const SynthP300Params& p) {
    if (p.subjects == 0) throw std::invalid_argument("generate_synthetic: subjects must be >= 1");
    if (p.channels == 0) throw std::invalid_argument("generate_synthetic: channels must be >= 1");
    if (!(p.rate_hz > 0)) throw std::invalid_argument("generate_synthetic: rate_hz must be positive");
    if (p.epochs_per_session == 0)
        throw std::invalid_argument("generate_synthetic: epochs_per_session must be >= 1");
    if (!(p.target_rate > 0.0 && p.target_rate < 1.0))
        throw std::invalid_argument("generate_synthetic: target_rate must lie in (0, 1)");
    if (!(p.erp_width_ms > 0))
        throw std::invalid_argument("generate_synthetic: erp_width_ms must be positive");
    if (p.noise_std < 0) throw std::invalid_argument("generate_synthetic: noise_std must be >= 0");
}

}  // namespace

std::vector<SubjectDataset> generate_synthetic(const SynthP300Params& params) {
    validate(params);

    const auto samples = static_cast<std::size_t>(std::llround(params.rate_hz));  // 1000 ms window
    const double sigma_samples = params.erp_width_ms / 1000.0 * params.rate_hz;

    std::vector<SubjectDataset> datasets;
    datasets.reserve(params.subjects);
    for (std::size_t s = 0; s < params.subjects; ++s) {
        Rng subject_rng(mix_seed(params.seed, 0x100000 + s));
        const double latency_ms =
            params.erp_latency_ms + params.latency_jitter_ms * subject_rng.next_gaussian();
        const double amplitude =
            params.erp_amplitude * (1.0 + params.amplitude_jitter * subject_rng.next_gaussian());
        const auto peak_sample =
            static_cast<std::ptrdiff_t>(std::llround(latency_ms / 1000.0 * params.rate_hz));

        SubjectDataset sd;
        sd.subject = subject_id(s);
        sd.provenance = Provenance::Synthetic;
        for (int session = 1; session <= 4; ++session) {
            Rng rng(mix_seed(params.seed, s * 8 + static_cast<std::size_t>(session)));
            const std::size_t n = params.epochs_per_session;
            const auto quota = static_cast<std::size_t>(
                std::llround(params.target_rate * static_cast<double>(n)));

            std::vector<int> labels(n, 0);
            for (std::size_t i = 0; i < quota && i < n; ++i) labels[i] = 1;
            rng.shuffle(labels);

            std::vector<Epoch> epochs;
            epochs.reserve(n);
            for (std::size_t i = 0; i < n; ++i) {
                Epoch e;
                e.label = labels[i];
                e.subject = sd.subject;
                e.session = session;
                e.window_ms = 1000.0;
                e.rate_hz = params.rate_hz;
                e.uid = mix_seed(std::hash<std::string>{}(sd.subject),
                                 mix_seed(static_cast<std::uint64_t>(session), i));
                e.data.assign(params.channels, std::vector<double>(samples, 0.0));
                for (auto& channel : e.data)
                    for (auto& v : channel) v = params.noise_std * rng.next_gaussian();
                if (e.label == 1) {
                    for (auto& channel : e.data) {
                        for (std::size_t t = 0; t < samples; ++t) {
                            const double dt =
                                static_cast<double>(static_cast<std::ptrdiff_t>(t) - peak_sample);
                            channel[t] +=
                                amplitude * std::exp(-dt * dt / (2.0 * sigma_samples * sigma_samples));
                        }
                    }
                }
                epochs.push_back(std::move(e));
            }
            sd.sessions.emplace(session, std::move(epochs));
        }
        datasets.push_back(std::move(sd));
    }
    return datasets;
}

}  // namespace asbci
