#include "dimo/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace dimo {

namespace {

int scaled_side(int side, double scale) {
  // Products such as 0.3 * 1000 land a few ulps above the integer.
  const auto scaled = static_cast<int>(std::ceil(scale * side - 1e-9));
  return std::clamp(scaled, 1, side);
}

int place_axis(double center, int extent, int parent_lo, int parent_extent) {
  const int lo = static_cast<int>(std::floor(center - extent / 2.0 + 0.5));
  return std::clamp(lo, parent_lo, parent_lo + parent_extent - extent);
}

}  // namespace

Point Region::center() const {
  return {x + size.width / 2.0, y + size.height / 2.0};
}

double Region::diagonal() const {
  return std::hypot(static_cast<double>(size.width), static_cast<double>(size.height));
}

bool Region::contains(const Region& other) const {
  return other.x >= x && other.y >= y && other.right() <= right() &&
         other.bottom() <= bottom();
}

Region crop_around(const Region& parent, Point center, double scale) {
  if (!(scale > 0.0 && scale < 1.0)) {
    throw PreconditionError(fmt::format("crop scale must lie in (0, 1), got {}", scale));
  }
  if (parent.width() < 1 || parent.height() < 1) {
    throw PreconditionError(fmt::format("cannot crop the empty region {}", to_string(parent)));
  }
  if (!point_in_box(center, parent)) {
    throw PreconditionError(fmt::format("crop center ({}, {}) is outside parent {}", center.x,
                                        center.y, to_string(parent)));
  }
  const int w = scaled_side(parent.width(), scale);
  const int h = scaled_side(parent.height(), scale);
  return {place_axis(center.x, w, parent.x, parent.width()),
          place_axis(center.y, h, parent.y, parent.height()), w, h};
}

Point to_global(const Region& region, Point local) {
  return {local.x + region.x, local.y + region.y};
}

Point to_local(const Region& region, Point global) {
  if (!point_in_box(global, region)) {
    throw OutOfRegionError(fmt::format("point ({}, {}) is outside region {}", global.x,
                                       global.y, to_string(region)));
  }
  return {global.x - region.x, global.y - region.y};
}

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

double stop_threshold(const Region& prev_region, double ratio) {
  return prev_region.diagonal() * ratio;
}

bool stop_condition(Point prev, Point curr, const Region& prev_region, double ratio) {
  return distance(prev, curr) < stop_threshold(prev_region, ratio);
}

bool point_in_box(Point p, const Region& box) {
  return box.x <= p.x && p.x <= box.right() && box.y <= p.y && p.y <= box.bottom();
}

Point denormalize(Point p, CoordConvention convention, Size frame) {
  switch (convention) {
    case CoordConvention::Pixels:
      return p;
    case CoordConvention::Normalized01:
      return {p.x * frame.width, p.y * frame.height};
    case CoordConvention::Normalized1000:
      return {p.x * frame.width / 1000.0, p.y * frame.height / 1000.0};
  }
  return p;
}

Point clamp_to(Point p, const Region& region) {
  return {std::clamp(p.x, static_cast<double>(region.x), static_cast<double>(region.right())),
          std::clamp(p.y, static_cast<double>(region.y), static_cast<double>(region.bottom()))};
}

std::string to_string(CoordConvention convention) {
  switch (convention) {
    case CoordConvention::Pixels:
      return "pixels";
    case CoordConvention::Normalized01:
      return "norm01";
    case CoordConvention::Normalized1000:
      return "norm1000";
  }
  return "pixels";
}

CoordConvention parse_convention(const std::string& text) {
  if (text == "pixels" || text == "px") return CoordConvention::Pixels;
  if (text == "norm01" || text == "normalized-0-1" || text == "normalized01")
    return CoordConvention::Normalized01;
  if (text == "norm1000" || text == "normalized-0-1000" || text == "normalized1000")
    return CoordConvention::Normalized1000;
  throw std::invalid_argument("unknown coordinate convention: " + text);
}

std::string to_string(const Region& region) {
  return fmt::format("({},{},{},{})", region.x, region.y, region.width(), region.height());
}

}  // namespace dimo
