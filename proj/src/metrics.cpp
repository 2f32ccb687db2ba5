#include "wcvs/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "wcvs/error.hpp"

namespace wcvs {

namespace {

// sRGB primaries, D65 white.
const Matrix3& rgb_to_xyz_matrix() {
  static const Matrix3 m = (Matrix3() << 0.4124564, 0.3575761, 0.1804375,  //
                            0.2126729, 0.7151522, 0.0721750,                 //
                            0.0193339, 0.1191920, 0.9503041)
                               .finished();
  return m;
}

const Matrix3& xyz_to_rgb_matrix() {
  static const Matrix3 m = rgb_to_xyz_matrix().inverse();
  return m;
}

constexpr double kWhiteX = 0.95047;
constexpr double kWhiteY = 1.0;
constexpr double kWhiteZ = 1.08883;
constexpr double kDelta = 6.0 / 29.0;

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double c) {
  return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

double lab_f(double t) {
  return t > kDelta * kDelta * kDelta ? std::cbrt(t) : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

double lab_f_inv(double f) {
  return f > kDelta ? f * f * f : 3.0 * kDelta * kDelta * (f - 4.0 / 29.0);
}

void check_pair(const Frame& a, const Frame& b) {
  check_frame(a);
  if (!a.same_shape(b)) throw Error(ErrorCode::ShapeMismatch, "frames differ in shape");
}

ConsistencyReport compare(const Frame& first, const Frame& last, const Mask* valid) {
  check_pair(first, last);
  if (valid && (valid->height() != first.height() || valid->width() != first.width())) {
    throw Error(ErrorCode::ShapeMismatch, "mask does not match frames");
  }
  double sum_rgb = 0.0;
  double sum_lab = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < first.height(); ++y) {
    for (int x = 0; x < first.width(); ++x) {
      if (valid && !valid->at(y, x)) continue;
      const std::array<double, 3> a{first.at(y, x, 0), first.at(y, x, 1), first.at(y, x, 2)};
      const std::array<double, 3> b{last.at(y, x, 0), last.at(y, x, 1), last.at(y, x, 2)};
      const Lab la = rgb_to_lab(a);
      const Lab lb = rgb_to_lab(b);
      for (int c = 0; c < 3; ++c) {
        sum_rgb += std::abs(a[c] - b[c]) * 255.0;
        sum_lab += std::abs(la[c] - lb[c]);
      }
      ++count;
    }
  }
  ConsistencyReport r;
  r.pixel_count = count;
  if (count > 0) {
    r.delta_rgb = sum_rgb / (3.0 * static_cast<double>(count));
    r.delta_lab = sum_lab / (3.0 * static_cast<double>(count));
  }
  return r;
}

// Returns (sum of |warped - target| over covered pixels and channels, covered
// pixel count * channels).
std::pair<double, double> pair_l1(const Frame& prev, const Frame& target, const FlowField& flow) {
  check_pair(prev, target);
  const WarpResult w = warp(prev, flow);
  double sum = 0.0;
  double n = 0.0;
  for (int y = 0; y < target.height(); ++y) {
    for (int x = 0; x < target.width(); ++x) {
      if (!w.coverage.at(y, x)) continue;
      for (int c = 0; c < target.channels(); ++c) sum += std::abs(w.image.at(y, x, c) - target.at(y, x, c));
      n += target.channels();
    }
  }
  return {sum, n};
}

}  // namespace

Lab rgb_to_lab(const std::array<double, 3>& rgb) {
  for (double c : rgb) {
    if (!(c >= 0.0 && c <= 1.0)) throw Error(ErrorCode::OutOfRange, "rgb component outside [0,1]");
  }
  const Point3 lin(srgb_to_linear(rgb[0]), srgb_to_linear(rgb[1]), srgb_to_linear(rgb[2]));
  const Point3 xyz = rgb_to_xyz_matrix() * lin;
  const double fx = lab_f(xyz.x() / kWhiteX);
  const double fy = lab_f(xyz.y() / kWhiteY);
  const double fz = lab_f(xyz.z() / kWhiteZ);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

std::array<double, 3> lab_to_rgb(const Lab& lab) {
  const double fy = (lab[0] + 16.0) / 116.0;
  const double fx = fy + lab[1] / 500.0;
  const double fz = fy - lab[2] / 200.0;
  const Point3 xyz(kWhiteX * lab_f_inv(fx), kWhiteY * lab_f_inv(fy), kWhiteZ * lab_f_inv(fz));
  const Point3 lin = xyz_to_rgb_matrix() * xyz;
  return {linear_to_srgb(lin.x()), linear_to_srgb(lin.y()), linear_to_srgb(lin.z())};
}

ConsistencyReport fb_consistency(const Frame& first, const Frame& last) {
  return compare(first, last, nullptr);
}

ConsistencyReport fb_consistency(const Frame& first, const Frame& last, const Mask& valid) {
  return compare(first, last, &valid);
}

double short_term_consistency(const std::vector<Frame>& frames, const std::vector<FlowField>& flows) {
  return short_term_consistency(std::vector<std::vector<Frame>>{frames},
                                std::vector<std::vector<FlowField>>{flows});
}

double short_term_consistency(const std::vector<std::vector<Frame>>& sequences,
                              const std::vector<std::vector<FlowField>>& flows) {
  if (sequences.size() != flows.size()) {
    throw Error(ErrorCode::LengthMismatch, "one flow list per sequence is required");
  }
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    const auto& frames = sequences[s];
    if (flows[s].size() != frames.size()) {
      throw Error(ErrorCode::LengthMismatch, "sequence " + std::to_string(s) + " has " +
                                                 std::to_string(frames.size()) + " frames but " +
                                                 std::to_string(flows[s].size()) + " flows");
    }
    for (std::size_t t = 1; t < frames.size(); ++t) {
      const auto [sum, n] = pair_l1(frames[t - 1], frames[t], flows[s][t]);
      total += n > 0.0 ? sum / n : 0.0;
      ++pairs;
    }
  }
  if (pairs == 0) throw Error(ErrorCode::LengthMismatch, "need at least two frames");
  return total / static_cast<double>(pairs);
}

std::vector<Camera> reverse_trajectory(const std::vector<Camera>& cams) {
  if (cams.empty()) throw Error(ErrorCode::Empty, "trajectory is empty");
  std::vector<Camera> out = cams;
  for (std::size_t k = cams.size() - 1; k-- > 0;) out.push_back(cams[k]);
  return out;
}

std::string format_fb_table(const std::vector<std::pair<std::string, ConsistencyReport>>& rows) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-24s %10s %10s %10s\n", "Method", "dRGB", "dLAB", "Pixels");
  os << line;
  for (const auto& [name, r] : rows) {
    std::snprintf(line, sizeof line, "%-24s %10.4f %10.4f %10zu\n", name.c_str(), r.delta_rgb,
                  r.delta_lab, r.pixel_count);
    os << line;
  }
  return os.str();
}

std::string format_short_term_table(const std::vector<std::pair<std::string, double>>& rows) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-24s %12s\n", "Method", "Short-term");
  os << line;
  for (const auto& [name, v] : rows) {
    std::snprintf(line, sizeof line, "%-24s %12.6f\n", name.c_str(), v);
    os << line;
  }
  return os.str();
}

}  // namespace wcvs
