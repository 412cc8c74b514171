#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mvbev {

/// Which raster a grid lives in: an image of one view, or the shared BEV plane.
struct GridFrame {
  enum class Kind { Image, Bev };
  Kind kind = Kind::Bev;
  int view_id = -1;

  static GridFrame image(int view) { return {Kind::Image, view}; }
  static GridFrame bev() { return {Kind::Bev, -1}; }

  /// "image(<id>)" or "bev".
  std::string to_string() const;
  static GridFrame parse(const std::string& text);

  bool operator==(const GridFrame&) const = default;
};

/// Dense row-major (rows, cols, channels) float64 raster.
class FeatureGrid {
 public:
  FeatureGrid() = default;
  FeatureGrid(int rows, int cols, int channels, GridFrame frame);
  FeatureGrid(int rows, int cols, int channels, GridFrame frame, std::vector<double> data);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int channels() const { return channels_; }
  const GridFrame& frame() const { return frame_; }
  void set_frame(GridFrame frame) { frame_ = frame; }

  std::size_t index(int r, int c, int ch) const {
    return (static_cast<std::size_t>(r) * cols_ + c) * channels_ + ch;
  }
  double& at(int r, int c, int ch) { return data_[index(r, c, ch)]; }
  double at(int r, int c, int ch) const { return data_[index(r, c, ch)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool all_finite() const;
  FeatureGrid channel(int ch) const;

  bool operator==(const FeatureGrid&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  int channels_ = 0;
  GridFrame frame_;
  std::vector<double> data_;
};

}  // namespace mvbev
