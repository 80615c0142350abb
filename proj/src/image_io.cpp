#include "dslfiqa/io/image_io.hpp"

#include <jpeglib.h>
#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>

namespace dslfiqa {

double psnr(const Image& a, const Image& b) {
  require_valid(a, "psnr");
  require_valid(b, "psnr");
  if (a.height() != b.height() || a.width() != b.width())
    fail(ErrorCode::ShapeMismatch, "psnr: image dimensions disagree");
  double mse = 0.0;
  const auto pa = a.planes();
  const auto pb = b.planes();
  for (int c = 0; c < 3; ++c) mse += (pa[c]->cast<double>() - pb[c]->cast<double>()).square().sum();
  mse /= 3.0 * a.height() * a.width();
  if (mse <= 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

std::vector<uint8_t> to_rgb8(const Image& img) {
  require_valid(img, "to_rgb8");
  const int h = img.height(), w = img.width();
  std::vector<uint8_t> out(static_cast<size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t i = (static_cast<size_t>(y) * w + x) * 3;
      out[i + 0] = static_cast<uint8_t>(std::lround(std::clamp(img.r(y, x), 0.0f, 1.0f) * 255.0f));
      out[i + 1] = static_cast<uint8_t>(std::lround(std::clamp(img.g(y, x), 0.0f, 1.0f) * 255.0f));
      out[i + 2] = static_cast<uint8_t>(std::lround(std::clamp(img.b(y, x), 0.0f, 1.0f) * 255.0f));
    }
  }
  return out;
}

Image from_rgb8(const std::vector<uint8_t>& rgb, int height, int width) {
  Image img(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const size_t i = (static_cast<size_t>(y) * width + x) * 3;
      img.r(y, x) = rgb[i + 0] / 255.0f;
      img.g(y, x) = rgb[i + 1] / 255.0f;
      img.b(y, x) = rgb[i + 2] / 255.0f;
    }
  }
  return img;
}

// ---------------------------------------------------------------------------
// PNG
// ---------------------------------------------------------------------------

namespace {

struct FileCloser {
  FILE* f;
  ~FileCloser() {
    if (f) std::fclose(f);
  }
};

Image read_png_file(FILE* f, const std::string& path) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) fail(ErrorCode::IOFailure, "libpng init failed");
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::IOFailure, "failed to decode PNG '" + path + "'");
  }
  png_init_io(png, f);
  png_read_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  std::vector<uint8_t> rgb(static_cast<size_t>(h) * w * 3);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = rgb.data() + static_cast<size_t>(y) * w * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return from_rgb8(rgb, static_cast<int>(h), static_cast<int>(w));
}

void write_png_rgb8(const std::string& path, const std::vector<uint8_t>& rgb, int h, int w, int channels) {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) fail(ErrorCode::IOFailure, "cannot open '" + path + "' for writing");
  FileCloser closer{f};
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) fail(ErrorCode::IOFailure, "libpng init failed");
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::IOFailure, "failed to encode PNG '" + path + "'");
  }
  png_init_io(png, f);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(static_cast<size_t>(h));
  for (int y = 0; y < h; ++y)
    rows[static_cast<size_t>(y)] = const_cast<png_bytep>(rgb.data() + static_cast<size_t>(y) * w * channels);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// ---------------------------------------------------------------------------
// JPEG
// ---------------------------------------------------------------------------

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  JpegErrorMgr* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  std::longjmp(err->jump, 1);
}

std::vector<uint8_t> jpeg_encode(const std::vector<uint8_t>& rgb, int h, int w, int quality) {
  jpeg_compress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  unsigned char* buf = nullptr;
  unsigned long buf_size = 0;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_compress(&cinfo);
    if (buf) free(buf);
    fail(ErrorCode::IOFailure, "JPEG encode failed");
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &buf, &buf_size);
  cinfo.image_width = static_cast<JDIMENSION>(w);
  cinfo.image_height = static_cast<JDIMENSION>(h);
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(rgb.data() + static_cast<size_t>(cinfo.next_scanline) * w * 3);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  std::vector<uint8_t> out(buf, buf + buf_size);
  jpeg_destroy_compress(&cinfo);
  free(buf);
  return out;
}

std::vector<uint8_t> jpeg_decode(const uint8_t* data, size_t len, int& h, int& w) {
  jpeg_decompress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    fail(ErrorCode::IOFailure, "JPEG decode failed");
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, data, len);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  h = static_cast<int>(cinfo.output_height);
  w = static_cast<int>(cinfo.output_width);
  std::vector<uint8_t> rgb(static_cast<size_t>(h) * w * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = rgb.data() + static_cast<size_t>(cinfo.output_scanline) * w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return rgb;
}

bool has_suffix(const std::string& s, const char* suffix) {
  const size_t n = std::strlen(suffix);
  if (s.size() < n) return false;
  std::string tail = s.substr(s.size() - n);
  for (char& c : tail) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return tail == suffix;
}

}  // namespace

Image read_image(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) fail(ErrorCode::IOFailure, "cannot open image '" + path + "'");
  FileCloser closer{f};
  uint8_t magic[8] = {0};
  const size_t got = std::fread(magic, 1, 8, f);
  std::rewind(f);
  if (got >= 8 && png_sig_cmp(magic, 0, 8) == 0) return read_png_file(f, path);
  if (got >= 2 && magic[0] == 0xFF && magic[1] == 0xD8) {
    std::fseek(f, 0, SEEK_END);
    const long len = std::ftell(f);
    std::rewind(f);
    std::vector<uint8_t> bytes(static_cast<size_t>(len));
    if (std::fread(bytes.data(), 1, bytes.size(), f) != bytes.size())
      fail(ErrorCode::IOFailure, "short read on '" + path + "'");
    int h = 0, w = 0;
    const auto rgb = jpeg_decode(bytes.data(), bytes.size(), h, w);
    return from_rgb8(rgb, h, w);
  }
  fail(ErrorCode::IOFailure, "'" + path + "' is neither PNG nor JPEG");
}

void write_png(const std::string& path, const Image& img) {
  write_png_rgb8(path, to_rgb8(img), img.height(), img.width(), 3);
}

void write_png_gray(const std::string& path, const Eigen::ArrayXXf& plane) {
  const int h = static_cast<int>(plane.rows()), w = static_cast<int>(plane.cols());
  std::vector<uint8_t> gray(static_cast<size_t>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      gray[static_cast<size_t>(y) * w + x] =
          static_cast<uint8_t>(std::lround(std::clamp(plane(y, x), 0.0f, 1.0f) * 255.0f));
  write_png_rgb8(path, gray, h, w, 1);
}

void write_jpeg(const std::string& path, const Image& img, int quality) {
  const auto bytes = jpeg_encode(to_rgb8(img), img.height(), img.width(), quality);
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) fail(ErrorCode::IOFailure, "cannot open '" + path + "' for writing");
  FileCloser closer{f};
  if (std::fwrite(bytes.data(), 1, bytes.size(), f) != bytes.size())
    fail(ErrorCode::IOFailure, "short write on '" + path + "'");
}

void write_image(const std::string& path, const Image& img) {
  if (has_suffix(path, ".jpg") || has_suffix(path, ".jpeg"))
    write_jpeg(path, img, 95);
  else
    write_png(path, img);
}

Image jpeg_roundtrip(const Image& img, int quality) {
  require_valid(img, "jpeg_roundtrip");
  const auto bytes = jpeg_encode(to_rgb8(img), img.height(), img.width(), quality);
  int h = 0, w = 0;
  const auto rgb = jpeg_decode(bytes.data(), bytes.size(), h, w);
  return from_rgb8(rgb, h, w);
}

}  // namespace dslfiqa
