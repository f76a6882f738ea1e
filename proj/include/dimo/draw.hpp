#pragma once

#include <string_view>

#include "dimo/image.hpp"

namespace dimo::draw {

inline constexpr int kGlyphWidth = 5;
inline constexpr int kGlyphHeight = 7;

void fill_rect(Image& image, const Region& rect, Rgb color);
/// Outline drawn inward from the rectangle edges.
void stroke_rect(Image& image, const Region& rect, Rgb color, int thickness = 1);
void fill_disc(Image& image, Point center, double radius, Rgb color);
void ring(Image& image, Point center, double radius, double thickness, Rgb color);

/// 5x7 bitmap text. Lowercase is drawn as uppercase; unknown characters as
/// blanks. Each glyph cell is (kGlyphWidth + 1) * scale wide.
void text(Image& image, int x, int y, std::string_view str, Rgb color, int scale = 1);
int text_width(std::string_view str, int scale = 1);
int text_height(int scale = 1);

}  // namespace dimo::draw
