#include "wcvs/image.hpp"

#include <cmath>
#include <numeric>

#include "wcvs/error.hpp"

namespace wcvs {

Image::Image(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  if (height < 0 || width < 0 || channels < 0) {
    throw Error(ErrorCode::ShapeMismatch, "negative image extent");
  }
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

std::size_t Mask::count() const {
  return std::accumulate(data_.begin(), data_.end(), std::size_t{0},
                         [](std::size_t acc, std::uint8_t v) { return acc + (v != 0); });
}

void check_frame(const Frame& frame, bool check_range) {
  if (frame.channels() != 3) {
    throw Error(ErrorCode::ShapeMismatch, "frame must have 3 channels");
  }
  if (check_range) {
    for (double v : frame.data()) {
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw Error(ErrorCode::OutOfRange, "frame value outside [0,1]");
      }
    }
  }
}

}  // namespace wcvs
