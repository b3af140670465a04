#include "nerif/raster.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <cstring>
#include <fstream>

#include "nerif/error.hpp"
#include "nerif/rng.hpp"

namespace nerif {

namespace {

constexpr int kFontFace = cv::FONT_HERSHEY_SIMPLEX;
constexpr int kFontThickness = 1;

cv::Mat to_mat_bgr(const Raster& img) {
  cv::Mat rgb(img.height, img.width, CV_8UC3,
              const_cast<std::uint8_t*>(img.rgb.data()));
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  return bgr;
}

Raster from_mat_bgr(const cv::Mat& bgr) {
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  Raster out;
  out.width = rgb.cols;
  out.height = rgb.rows;
  out.rgb.resize(static_cast<std::size_t>(rgb.cols) * rgb.rows * 3);
  if (rgb.isContinuous()) {
    std::memcpy(out.rgb.data(), rgb.data, out.rgb.size());
  } else {
    for (int y = 0; y < rgb.rows; ++y)
      std::memcpy(out.rgb.data() + static_cast<std::size_t>(y) * rgb.cols * 3, rgb.ptr(y),
                  static_cast<std::size_t>(rgb.cols) * 3);
  }
  return out;
}

}  // namespace

Raster Raster::solid(int w, int h, Color c) {
  Raster img;
  img.width = w;
  img.height = h;
  img.rgb.resize(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < img.rgb.size(); i += 3) {
    img.rgb[i] = c.r;
    img.rgb[i + 1] = c.g;
    img.rgb[i + 2] = c.b;
  }
  return img;
}

Raster decode_image_file(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec))
    raise(Errc::MissingImage, "no such image file: " + path.string());
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) raise(Errc::UndecodableImage, "cannot decode image: " + path.string());
  return from_mat_bgr(bgr);
}

Raster decode_image_bytes(const std::vector<std::uint8_t>& bytes) {
  cv::Mat bgr = cv::imdecode(bytes, cv::IMREAD_COLOR);
  if (bgr.empty()) raise(Errc::UndecodableImage, "cannot decode image bytes");
  return from_mat_bgr(bgr);
}

std::vector<std::uint8_t> encode_png(const Raster& img) {
  if (img.empty()) raise(Errc::UndecodableImage, "cannot encode empty raster");
  std::vector<std::uint8_t> out;
  const std::vector<int> params = {cv::IMWRITE_PNG_COMPRESSION, 3};
  if (!cv::imencode(".png", to_mat_bgr(img), out, params))
    raise(Errc::UndecodableImage, "png encode failed");
  return out;
}

void write_png(const std::filesystem::path& path, const Raster& img) {
  const auto bytes = encode_png(img);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) raise(Errc::PersistenceError, "cannot open for write: " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) raise(Errc::PersistenceError, "short write: " + path.string());
}

void blit(Raster& dst, const Raster& src, int x, int y) {
  if (x < 0 || y < 0 || x + src.width > dst.width || y + src.height > dst.height)
    raise(Errc::InvalidRequest, "blit outside destination bounds");
  for (int row = 0; row < src.height; ++row) {
    std::memcpy(dst.rgb.data() + (static_cast<std::size_t>(y + row) * dst.width + x) * 3,
                src.rgb.data() + static_cast<std::size_t>(row) * src.width * 3,
                static_cast<std::size_t>(src.width) * 3);
  }
}

Raster crop(const Raster& src, const Rect& r) {
  if (!src.bounds().contains(r)) raise(Errc::InvalidRequest, "crop outside source bounds");
  Raster out;
  out.width = r.w;
  out.height = r.h;
  out.rgb.resize(static_cast<std::size_t>(r.w) * r.h * 3);
  for (int row = 0; row < r.h; ++row) {
    std::memcpy(out.rgb.data() + static_cast<std::size_t>(row) * r.w * 3,
                src.rgb.data() + (static_cast<std::size_t>(r.y + row) * src.width + r.x) * 3,
                static_cast<std::size_t>(r.w) * 3);
  }
  return out;
}

Raster scale_to(const Raster& src, int new_width, int new_height) {
  cv::Mat bgr = to_mat_bgr(src);
  cv::Mat scaled;
  cv::resize(bgr, scaled, cv::Size(new_width, new_height), 0, 0, cv::INTER_AREA);
  return from_mat_bgr(scaled);
}

void fill_rect(Raster& img, const Rect& r, Color c) {
  if (!img.bounds().contains(r)) raise(Errc::InvalidRequest, "fill outside bounds");
  for (int row = 0; row < r.h; ++row) {
    std::uint8_t* p = img.rgb.data() + (static_cast<std::size_t>(r.y + row) * img.width + r.x) * 3;
    for (int col = 0; col < r.w; ++col) {
      p[0] = c.r;
      p[1] = c.g;
      p[2] = c.b;
      p += 3;
    }
  }
}

void draw_text(Raster& img, const std::string& text, int x, int baseline_y, double scale,
               Color c) {
  cv::Mat bgr = to_mat_bgr(img);
  cv::putText(bgr, text, cv::Point(x, baseline_y), kFontFace, scale,
              cv::Scalar(c.b, c.g, c.r), kFontThickness, cv::LINE_8);
  Raster back = from_mat_bgr(bgr);
  img.rgb = std::move(back.rgb);
}

int text_width(const std::string& text, double scale) {
  int baseline = 0;
  return cv::getTextSize(text, kFontFace, scale, kFontThickness, &baseline).width;
}

int text_height(double scale) {
  int baseline = 0;
  return cv::getTextSize("Ag", kFontFace, scale, kFontThickness, &baseline).height + baseline;
}

std::uint64_t pixel_hash(const Raster& img) {
  std::uint64_t h = fnv1a64(std::string_view(reinterpret_cast<const char*>(img.rgb.data()),
                                             img.rgb.size()));
  return mix64(h, (static_cast<std::uint64_t>(img.width) << 32) ^
                      static_cast<std::uint64_t>(img.height));
}

}  // namespace nerif
