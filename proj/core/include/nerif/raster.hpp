#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace nerif {

struct Rect {
  int x = 0, y = 0, w = 0, h = 0;

  bool contains(const Rect& inner) const {
    return inner.x >= x && inner.y >= y && inner.x + inner.w <= x + w && inner.y + inner.h <= y + h;
  }
  bool intersects(const Rect& other) const {
    return x < other.x + other.w && other.x < x + w && y < other.y + other.h && other.y < y + h;
  }
  bool operator==(const Rect&) const = default;
};

struct Color {
  std::uint8_t r = 0, g = 0, b = 0;
};

inline constexpr Color kBlack{0, 0, 0};
inline constexpr Color kWhite{255, 255, 255};

/// 8-bit RGB raster, row-major, tightly packed (3 bytes/pixel).
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  bool empty() const { return width <= 0 || height <= 0; }
  Rect bounds() const { return {0, 0, width, height}; }

  static Raster solid(int w, int h, Color c);
};

/// Decode a PNG/JPEG file. Throws MissingImage when the file does not exist
/// and UndecodableImage when it exists but cannot be decoded.
Raster decode_image_file(const std::filesystem::path& path);
Raster decode_image_bytes(const std::vector<std::uint8_t>& bytes);

/// PNG with fixed encoder settings: identical rasters encode to identical bytes.
std::vector<std::uint8_t> encode_png(const Raster& img);
void write_png(const std::filesystem::path& path, const Raster& img);

/// Copy src into dst at (x, y); the source must fit.
void blit(Raster& dst, const Raster& src, int x, int y);
Raster crop(const Raster& src, const Rect& r);
Raster scale_to(const Raster& src, int new_width, int new_height);
void fill_rect(Raster& img, const Rect& r, Color c);

/// Hershey-font text. `scale` sizes the glyphs; origin is the left end of the
/// baseline. Rendering is deterministic.
void draw_text(Raster& img, const std::string& text, int x, int baseline_y, double scale, Color c);
int text_width(const std::string& text, double scale);
int text_height(double scale);

std::uint64_t pixel_hash(const Raster& img);

}  // namespace nerif
