#pragma once

#include <array>
#include <string>
#include <vector>

namespace fixtures {

// Per-subject training seconds on the full corpus and after reduction to
// 1200 epochs per source subject; 17 subjects.
inline const std::vector<double> kTimingFull = {
    23207.00, 22418.51, 25683.09, 23781.20, 23190.75, 24190.93, 23405.82, 22819.26,
    21554.44, 23621.02, 21907.92, 20784.10, 20763.63, 23935.36, 23847.56, 22315.38,
    21813.49};
inline const std::vector<double> kTimingReduced = {
    9112.38, 8991.86, 9168.53, 9025.06, 8406.21, 8337.90, 8318.52, 9274.83, 9260.78,
    9387.30, 9233.98, 8499.96, 8495.82, 8353.36, 8851.04, 9618.95, 8789.19};
inline constexpr double kTimingFullMean = 22896.44;
inline constexpr double kTimingReducedMean = 8889.75;
inline constexpr double kTimingFullStd = 1292.02;
inline constexpr double kTimingReducedStd = 419.14;

// Eight-subject accuracy table in percent: dependent, independent, then
// adaptation rates 10 through 100.
inline const std::vector<std::string> kAccuracySubjects = {
    "S01", "S02", "S03", "S04", "S06", "S07", "S08", "S09"};
inline const std::vector<std::array<double, 12>> kAccuracyRows = {{
    {84.18, 82.49, 82.60, 82.73, 82.36, 83.09, 81.51, 83.21, 81.39, 83.70, 83.09, 82.85},
    {80.30, 82.92, 83.10, 83.10, 82.87, 82.87, 82.87, 83.10, 82.87, 83.10, 83.22, 83.22},
    {88.73, 83.21, 82.84, 82.97, 82.97, 83.70, 82.72, 82.97, 83.09, 82.84, 83.09, 83.09},
    {82.73, 83.21, 83.21, 83.21, 82.37, 82.97, 83.09, 82.97, 82.97, 82.85, 82.85, 82.73},
    {82.49, 83.09, 82.61, 82.61, 82.61, 83.09, 82.97, 82.97, 82.97, 82.97, 82.97, 82.73},
    {82.87, 83.10, 82.52, 82.52, 82.52, 82.52, 82.63, 83.57, 83.57, 82.75, 83.10, 82.52},
    {83.33, 83.21, 82.59, 82.59, 82.96, 82.96, 82.96, 82.84, 82.59, 83.21, 82.59, 82.59},
    {82.49, 83.16, 83.21, 83.33, 83.21, 83.33, 82.97, 83.09, 82.85, 82.97, 83.21, 83.09},
}};
inline const std::array<double, 12> kAccuracyMean = {
    83.39, 83.05, 82.84, 82.88, 82.73, 83.07, 82.72, 83.09, 82.79, 83.05, 83.02, 82.85};
inline const std::array<double, 12> kAccuracyStd = {
    2.42, 0.25, 0.30, 0.31, 0.31, 0.35, 0.51, 0.22, 0.63, 0.30, 0.21, 0.25};

}  // namespace fixtures
