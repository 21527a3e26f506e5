// Copyright 2026 The CISE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Small RGB raster with PNG output, used for electrodograms and result plots.

#ifndef CISE_RASTER_H_
#define CISE_RASTER_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cise::raster {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kBlack{0, 0, 0};
inline constexpr Rgb kWhite{255, 255, 255};
inline constexpr Rgb kGrey{160, 160, 160};

class Image {
 public:
  Image(int width, int height, Rgb fill = kWhite);

  int width() const { return width_; }
  int height() const { return height_; }

  // Out-of-bounds writes are ignored.
  void set(int x, int y, Rgb c);
  Rgb at(int x, int y) const;

  void line(int x0, int y0, int x1, int y1, Rgb c, int thickness = 1);
  void fill_rect(int x0, int y0, int x1, int y1, Rgb c);
  // 5x7 glyphs scaled by `scale`; letters are drawn upper-case.
  void text(int x, int y, std::string_view s, Rgb c, int scale = 1);
  static int text_width(std::string_view s, int scale = 1);

  void write_png(const std::filesystem::path& path) const;

 private:
  int width_, height_;
  std::vector<Rgb> pixels_;
};

struct Series {
  std::string label;
  std::vector<double> x, y;
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  double y_min = 0.0;
  double y_max = 1.0;
  int width = 720;
  int height = 480;
};

// Line chart with markers, axis ticks and a legend.
void render_line_chart(const std::filesystem::path& path, const std::vector<Series>& series,
                       const ChartOptions& opts);

// Distinct colour for the i-th series.
Rgb palette(std::size_t i);

}  // namespace cise::raster

#endif  // CISE_RASTER_H_
