#pragma once

#include <array>
#include <string>
#include <vector>

#include "wcvs/flow.hpp"
#include "wcvs/geometry.hpp"
#include "wcvs/image.hpp"

namespace wcvs {

using Lab = std::array<double, 3>;

// sRGB in [0,1] -> CIELAB (D65). Throws Error(OutOfRange).
Lab rgb_to_lab(const std::array<double, 3>& rgb);
// Inverse of rgb_to_lab (no gamut clamping).
std::array<double, 3> lab_to_rgb(const Lab& lab);

struct ConsistencyReport {
  double delta_rgb = 0.0;  // mean |a - b| on the 0-255 scale
  double delta_lab = 0.0;  // mean per-channel |a - b| in CIELAB
  std::size_t pixel_count = 0;
};

// Full-frame comparison. Throws Error(ShapeMismatch).
ConsistencyReport fb_consistency(const Frame& first, const Frame& last);
// Same statistic restricted to mask-valid pixels; pixel_count may be 0.
ConsistencyReport fb_consistency(const Frame& first, const Frame& last, const Mask& valid);

// Mean over neighboring pairs of the coverage-masked L1 between frame t and
// frame t-1 warped by flows[t]. flows[0] is ignored (flows.size() must equal
// frames.size()). Throws Error(LengthMismatch).
double short_term_consistency(const std::vector<Frame>& frames, const std::vector<FlowField>& flows);

// Multiple sequences, averaged over all pairs of all sequences.
double short_term_consistency(const std::vector<std::vector<Frame>>& sequences,
                              const std::vector<std::vector<FlowField>>& flows);

// cams ++ reverse(cams without its last element). Throws Error(Empty).
std::vector<Camera> reverse_trajectory(const std::vector<Camera>& cams);

// Aligned-column tables in the layout of the consistency tables.
std::string format_fb_table(const std::vector<std::pair<std::string, ConsistencyReport>>& rows);
std::string format_short_term_table(const std::vector<std::pair<std::string, double>>& rows);

}  // namespace wcvs
