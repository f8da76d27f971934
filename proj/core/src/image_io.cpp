#include "bcsnn/image_io.hpp"

#include <jpeglib.h>
#include <png.h>

#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace bcsnn {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw std::runtime_error(path + ": " + why);
}

// ---------------------------------------------------------------------------
// PNG

// libpng reports errors through longjmp; exceptions must not unwind through
// its C frames, so each wrapper jumps back here and throws afterwards.
ImageU8 read_png_file(const std::string& path, std::FILE* fp) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) fail(path, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(path, "png_create_info_struct failed");
  }
  ImageU8 out;
  std::vector<png_bytep> row_ptrs;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "corrupt PNG data");
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  // tRNS expansion can reintroduce alpha after the strip; 4-channel rows are
  // read raw and the alpha byte dropped below
  out.channels = static_cast<int>(png_get_channels(png, info));
  if (out.channels != 1 && out.channels != 3 && out.channels != 4) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "unsupported PNG channel count " + std::to_string(out.channels));
  }
  const int raw_channels = out.channels;
  std::vector<unsigned char> raw(static_cast<size_t>(out.height) * out.width * raw_channels);
  row_ptrs.resize(static_cast<size_t>(out.height));
  for (int r = 0; r < out.height; ++r) {
    row_ptrs[static_cast<size_t>(r)] =
        raw.data() + static_cast<size_t>(r) * out.width * raw_channels;
  }
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (raw_channels == 4) {
    out.channels = 3;
    out.pixels.resize(static_cast<size_t>(out.height) * out.width * 3);
    const size_t n = static_cast<size_t>(out.height) * out.width;
    for (size_t i = 0; i < n; ++i) {
      out.pixels[i * 3 + 0] = raw[i * 4 + 0];
      out.pixels[i * 3 + 1] = raw[i * 4 + 1];
      out.pixels[i * 3 + 2] = raw[i * 4 + 2];
    }
  } else {
    out.pixels = std::move(raw);
  }
  return out;
}

// ---------------------------------------------------------------------------
// JPEG

struct JpegErr {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErr*>(cinfo->err);
  std::longjmp(err->jump, 1);
}

ImageU8 read_jpeg_file(const std::string& path, std::FILE* fp) {
  jpeg_decompress_struct cinfo;
  JpegErr jerr;
  cinfo.err = jpeg_std_error(&jerr.mgr);
  jerr.mgr.error_exit = jpeg_error_exit;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    fail(path, "corrupt JPEG data");
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, fp);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = cinfo.jpeg_color_space == JCS_GRAYSCALE ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);

  ImageU8 out;
  out.width = static_cast<int>(cinfo.output_width);
  out.height = static_cast<int>(cinfo.output_height);
  out.channels = static_cast<int>(cinfo.output_components);
  out.pixels.resize(static_cast<size_t>(out.height) * out.width * out.channels);
  const size_t stride = static_cast<size_t>(out.width) * out.channels;
  while (cinfo.output_scanline < cinfo.output_height) {
    unsigned char* row = out.pixels.data() + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

// ---------------------------------------------------------------------------
// PNM (P2/P3 ASCII, P5/P6 binary)

int pnm_next_int(std::istream& in, const std::string& path) {
  // skips whitespace and '#' comment lines between tokens
  while (true) {
    const int c = in.peek();
    if (c == EOF) fail(path, "truncated PNM header");
    if (std::isspace(c)) {
      in.get();
    } else if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else {
      break;
    }
  }
  int value = 0;
  if (!(in >> value)) fail(path, "malformed PNM header");
  return value;
}

ImageU8 read_pnm_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open file");
  char p = 0;
  char kind = 0;
  in.get(p);
  in.get(kind);
  if (p != 'P' || (kind != '2' && kind != '3' && kind != '5' && kind != '6')) {
    fail(path, "unsupported PNM variant");
  }
  const bool color = kind == '3' || kind == '6';
  const bool binary = kind == '5' || kind == '6';

  ImageU8 out;
  out.width = pnm_next_int(in, path);
  out.height = pnm_next_int(in, path);
  const int maxval = pnm_next_int(in, path);
  if (out.width < 1 || out.height < 1 || maxval < 1 || maxval > 255) {
    fail(path, "unsupported PNM geometry or depth");
  }
  out.channels = color ? 3 : 1;
  const size_t count = static_cast<size_t>(out.width) * out.height * out.channels;
  out.pixels.resize(count);
  if (binary) {
    in.get();  // single whitespace after maxval
    in.read(reinterpret_cast<char*>(out.pixels.data()),
            static_cast<std::streamsize>(count));
    if (static_cast<size_t>(in.gcount()) != count) fail(path, "truncated PNM pixel data");
  } else {
    for (size_t i = 0; i < count; ++i) {
      const int v = pnm_next_int(in, path);
      if (v < 0 || v > maxval) fail(path, "PNM pixel out of range");
      out.pixels[i] = static_cast<unsigned char>(v);
    }
  }
  if (maxval != 255) {
    for (auto& v : out.pixels) {
      v = static_cast<unsigned char>(static_cast<int>(v) * 255 / maxval);
    }
  }
  return out;
}

}  // namespace

ImageU8 read_image(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) fail(path, "cannot open file");
  unsigned char magic[8] = {0};
  const size_t got = std::fread(magic, 1, sizeof(magic), fp.get());
  std::rewind(fp.get());
  if (got >= 8 && png_sig_cmp(magic, 0, 8) == 0) {
    return read_png_file(path, fp.get());
  }
  if (got >= 2 && magic[0] == 0xFF && magic[1] == 0xD8) {
    return read_jpeg_file(path, fp.get());
  }
  if (got >= 2 && magic[0] == 'P' &&
      (magic[1] == '2' || magic[1] == '3' || magic[1] == '5' || magic[1] == '6')) {
    fp.reset();
    return read_pnm_file(path);
  }
  fail(path, "unrecognized image format");
}

void write_png(const std::string& path, const ImageU8& image) {
  if (image.channels != 1 && image.channels != 3) {
    fail(path, "write_png supports 1 or 3 channels, got " + std::to_string(image.channels));
  }
  if (image.width < 1 || image.height < 1 ||
      image.pixels.size() !=
          static_cast<size_t>(image.width) * image.height * image.channels) {
    fail(path, "write_png: inconsistent image buffer");
  }
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) fail(path, "cannot open file for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) fail(path, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    fail(path, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, "PNG write error");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8,
               image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const size_t stride = static_cast<size_t>(image.width) * image.channels;
  for (int r = 0; r < image.height; ++r) {
    png_write_row(png, const_cast<png_bytep>(image.pixels.data() + r * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace bcsnn
