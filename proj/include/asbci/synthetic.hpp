#pragma once

#include <vector>

#include "asbci/experiment.hpp"

namespace asbci {

// Synthetic oddball recordings at the post-decimation rate: four sessions
// per subject, exact target quota per session, targets carry a Gaussian
// deflection centered at the configured latency on every channel over
// Gaussian noise, non-targets are noise only. Deterministic given the seed.
std::vector<SubjectDataset> generate_synthetic(const SynthP300Params& params);

}  // namespace asbci
