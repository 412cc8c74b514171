#include "mvbev/feature_grid.hpp"

#include <cmath>

#include "mvbev/error.hpp"

namespace mvbev {

std::string GridFrame::to_string() const {
  if (kind == Kind::Bev) return "bev";
  return "image(" + std::to_string(view_id) + ")";
}

GridFrame GridFrame::parse(const std::string& text) {
  if (text == "bev") return bev();
  const std::string prefix = "image(";
  if (text.size() > prefix.size() + 1 && text.compare(0, prefix.size(), prefix) == 0 &&
      text.back() == ')') {
    const std::string digits = text.substr(prefix.size(), text.size() - prefix.size() - 1);
    std::size_t used = 0;
    int view = 0;
    try {
      view = std::stoi(digits, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == digits.size() && used > 0) return image(view);
  }
  throw Error(ErrorCode::ParseError, "frame: expected \"bev\" or \"image(<id>)\", got \"" + text + "\"");
}

FeatureGrid::FeatureGrid(int rows, int cols, int channels, GridFrame frame)
    : FeatureGrid(rows, cols, channels, frame,
                  std::vector<double>(static_cast<std::size_t>(std::max(rows, 0)) *
                                      std::max(cols, 0) * std::max(channels, 0))) {}

FeatureGrid::FeatureGrid(int rows, int cols, int channels, GridFrame frame, std::vector<double> data)
    : rows_(rows), cols_(cols), channels_(channels), frame_(frame), data_(std::move(data)) {
  if (rows <= 0 || cols <= 0 || channels <= 0) {
    throw Error(ErrorCode::ShapeMismatch, "grid shape must be positive, got (" + std::to_string(rows) +
                                              ", " + std::to_string(cols) + ", " +
                                              std::to_string(channels) + ")");
  }
  if (data_.size() != static_cast<std::size_t>(rows) * cols * channels) {
    throw Error(ErrorCode::ShapeMismatch, "data length " + std::to_string(data_.size()) +
                                              " does not match shape");
  }
}

bool FeatureGrid::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

FeatureGrid FeatureGrid::channel(int ch) const {
  if (ch < 0 || ch >= channels_) {
    throw Error(ErrorCode::ShapeMismatch, "channel " + std::to_string(ch) + " out of range");
  }
  FeatureGrid out(rows_, cols_, 1, frame_);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) out.at(r, c, 0) = at(r, c, ch);
  return out;
}

}  // namespace mvbev
