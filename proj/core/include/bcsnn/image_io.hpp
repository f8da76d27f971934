#pragma once

#include <string>
#include <vector>

namespace bcsnn {

// 8-bit raster image, row-major with interleaved channels (1 = grayscale,
// 3 = RGB). The decoders normalize every supported source format to this.
struct ImageU8 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<unsigned char> pixels;  // height * width * channels bytes
};

// Decodes a PNG, JPEG, or PNM (P2/P3/P5/P6) file, dispatching on magic
// bytes. Palette, alpha, and 16-bit PNG variants are folded down to 8-bit
// gray or RGB. Throws std::runtime_error with the reason on any failure.
ImageU8 read_image(const std::string& path);

// Writes an 8-bit grayscale or RGB PNG. Throws std::runtime_error on
// failure.
void write_png(const std::string& path, const ImageU8& image);

}  // namespace bcsnn
