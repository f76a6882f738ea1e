#pragma once

#include <stdexcept>
#include <string>

namespace dimo {

/// A real-valued position in pixels. Predicted coordinates stay real-valued
/// until they are hit-tested.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct Size {
  int width = 0;
  int height = 0;

  friend bool operator==(const Size&, const Size&) = default;
};

/// Axis-aligned pixel rectangle with an integer origin (top-left corner).
struct Region {
  int x = 0;
  int y = 0;
  Size size;

  Region() = default;
  Region(int x_, int y_, int width, int height) : x(x_), y(y_), size{width, height} {}
  Region(int x_, int y_, Size s) : x(x_), y(y_), size(s) {}

  static Region of(Size s) { return {0, 0, s}; }

  int width() const { return size.width; }
  int height() const { return size.height; }
  int right() const { return x + size.width; }
  int bottom() const { return y + size.height; }
  int min_side() const { return size.width < size.height ? size.width : size.height; }
  Point origin() const { return {static_cast<double>(x), static_cast<double>(y)}; }
  Point center() const;
  double diagonal() const;
  bool contains(const Region& other) const;

  friend bool operator==(const Region&, const Region&) = default;
};

/// How a model expresses coordinates.
enum class CoordConvention { Pixels, Normalized01, Normalized1000 };

/// Raised when a caller violates an operation's documented precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by to_local() for points that do not lie in the region.
class OutOfRegionError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

inline constexpr double kDefaultCropScale = 0.5;
inline constexpr double kDefaultStopRatio = 1.0 / 6.0;

/// Crop of ceil(scale * parent) per dimension, centered on `center` and then
/// translated the minimum distance needed to fit inside `parent`.
/// Throws PreconditionError when `center` is outside `parent` or the scale is
/// not in (0, 1).
Region crop_around(const Region& parent, Point center, double scale = kDefaultCropScale);

Point to_global(const Region& region, Point local);
/// Throws OutOfRegionError when `global` is not inside `region`.
Point to_local(const Region& region, Point global);

double distance(Point a, Point b);

/// Distance below which two consecutive predictions count as converged:
/// `ratio` of the diagonal of the region the earlier prediction was made in.
double stop_threshold(const Region& prev_region, double ratio = kDefaultStopRatio);

bool stop_condition(Point prev, Point curr, const Region& prev_region,
                    double ratio = kDefaultStopRatio);

/// Closed-interval hit test on both edges.
bool point_in_box(Point p, const Region& box);

Point denormalize(Point p, CoordConvention convention, Size frame);

/// Clamp into the closed rectangle [x, right] x [y, bottom].
Point clamp_to(Point p, const Region& region);

std::string to_string(CoordConvention convention);
/// Accepts "pixels", "norm01", "norm1000" and a few long-form aliases.
CoordConvention parse_convention(const std::string& text);

std::string to_string(const Region& region);

}  // namespace dimo
