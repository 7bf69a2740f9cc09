#include "worldwalk/png_io.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>

#include "worldwalk/error.hpp"

namespace worldwalk::png {

namespace {

struct ReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

[[noreturn]] void on_error(png_structp png, png_const_charp message) {
  auto* msg = static_cast<std::string*>(png_get_error_ptr(png));
  if (msg != nullptr) *msg = message;
  png_longjmp(png, 1);
}

void on_warning(png_structp, png_const_charp) {}

void read_callback(png_structp png, png_bytep out, png_size_t length) {
  auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cursor->offset + length > cursor->bytes.size()) png_error(png, "truncated PNG data");
  std::memcpy(out, cursor->bytes.data() + cursor->offset, length);
  cursor->offset += length;
}

void write_callback(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void flush_callback(png_structp) {}

struct Decoded {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  int color_type = 0;
  std::vector<std::uint8_t> rows;  // tightly packed after transforms
  std::size_t row_bytes = 0;
};

// `rgb8` requests expansion to 8-bit RGB; otherwise the file must already be
// 16-bit grayscale and is returned as big-endian samples.
Decoded decode(std::span<const std::uint8_t> bytes, bool rgb8) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw IoError("png: missing PNG signature");
  }
  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, on_error, on_warning);
  if (png == nullptr) throw IoError("png: out of memory");
  png_infop info = png_create_info_struct(png);
  ReadCursor cursor{bytes, 0};
  Decoded out;
  std::vector<png_bytep> row_ptrs;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png: " + message);
  }
  png_set_read_fn(png, &cursor, read_callback);
  png_read_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.bit_depth = png_get_bit_depth(png, info);
  out.color_type = png_get_color_type(png, info);

  if (rgb8) {
    if (out.bit_depth == 16) png_set_strip_16(png);
    if (out.color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (out.color_type == PNG_COLOR_TYPE_GRAY && out.bit_depth < 8) {
      png_set_expand_gray_1_2_4_to_8(png);
    }
    if (out.color_type == PNG_COLOR_TYPE_GRAY || out.color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
      png_set_gray_to_rgb(png);
    }
    if (out.color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  } else if (out.bit_depth != 16 || out.color_type != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png: expected a 16-bit grayscale image");
  }
  png_set_interlace_handling(png);
  png_read_update_info(png, info);
  out.row_bytes = png_get_rowbytes(png, info);
  out.rows.resize(out.row_bytes * out.height);
  row_ptrs.resize(out.height);
  for (int r = 0; r < out.height; ++r) row_ptrs[r] = out.rows.data() + r * out.row_bytes;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

std::vector<std::uint8_t> encode(int width, int height, int bit_depth, int color_type,
                                 const std::uint8_t* data, std::size_t row_bytes) {
  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, on_error, on_warning);
  if (png == nullptr) throw IoError("png: out of memory");
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> out;
  std::vector<png_bytep> row_ptrs(height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png: " + message);
  }
  png_set_write_fn(png, &out, write_callback, flush_callback);
  png_set_compression_level(png, 1);
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < height; ++r) row_ptrs[r] = const_cast<png_bytep>(data + r * row_bytes);
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_rgb(const Frame& frame) {
  frame.validate();
  if (frame.width == 0 || frame.height == 0) throw IoError("png: cannot encode an empty frame");
  return encode(frame.width, frame.height, 8, PNG_COLOR_TYPE_RGB, frame.pixels.data(),
                static_cast<std::size_t>(frame.width) * 3);
}

Frame decode_rgb(std::span<const std::uint8_t> bytes) {
  Decoded d = decode(bytes, true);
  if (d.row_bytes != static_cast<std::size_t>(d.width) * 3) throw IoError("png: unexpected layout");
  Frame f;
  f.width = d.width;
  f.height = d.height;
  f.pixels = std::move(d.rows);
  return f;
}

std::vector<std::uint8_t> encode_gray16(const Gray16& image) {
  if (image.values.size() != static_cast<std::size_t>(image.width) * image.height) {
    throw IoError("png: gray16 buffer does not match dimensions");
  }
  std::vector<std::uint8_t> be(image.values.size() * 2);
  for (std::size_t i = 0; i < image.values.size(); ++i) {
    be[i * 2] = static_cast<std::uint8_t>(image.values[i] >> 8);
    be[i * 2 + 1] = static_cast<std::uint8_t>(image.values[i] & 0xff);
  }
  return encode(image.width, image.height, 16, PNG_COLOR_TYPE_GRAY, be.data(),
                static_cast<std::size_t>(image.width) * 2);
}

Gray16 decode_gray16(std::span<const std::uint8_t> bytes) {
  Decoded d = decode(bytes, false);
  Gray16 g{d.width, d.height, {}};
  g.values.resize(static_cast<std::size_t>(d.width) * d.height);
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    g.values[i] = static_cast<std::uint16_t>((d.rows[i * 2] << 8) | d.rows[i * 2 + 1]);
  }
  return g;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

Frame read_rgb(const std::filesystem::path& path) { return decode_rgb(read_file(path)); }

void write_rgb(const std::filesystem::path& path, const Frame& frame) {
  write_file(path, encode_rgb(frame));
}

}  // namespace worldwalk::png
