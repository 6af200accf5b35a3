#include "tlbr/image_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <csetjmp>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "tlbr/error.hpp"

namespace tlbr {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const std::filesystem::path& path, const char* mode) {
  File f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

std::string lower_ext(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

// Decoded pixels, 3 interleaved channels per pixel, `sample_bytes` per channel.
struct RawImage {
  std::size_t width = 0;
  std::size_t height = 0;
  int bit_depth = 8;
  int sample_bytes = 1;
  bool grayscale = false;
  std::vector<unsigned char> pixels;
  std::vector<unsigned char*> rows;
  std::array<char, 256> message{};
};

// libpng and libjpeg report errors through longjmp; everything touched after
// setjmp lives in RawImage so no local state is lost.

void on_png_error(png_structp png, png_const_charp msg) {
  auto* raw = static_cast<RawImage*>(png_get_error_ptr(png));
  std::snprintf(raw->message.data(), raw->message.size(), "%s", msg);
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

bool decode_png(std::FILE* f, RawImage& raw) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &raw, on_png_error,
                                           on_png_warning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, f);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  raw.bit_depth = png_get_bit_depth(png, info);
  if ((color & PNG_COLOR_MASK_COLOR) == 0) {
    raw.grayscale = true;
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
  }
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  raw.width = png_get_image_width(png, info);
  raw.height = png_get_image_height(png, info);
  raw.sample_bytes = png_get_bit_depth(png, info) == 16 ? 2 : 1;
  const std::size_t stride = png_get_rowbytes(png, info);
  raw.pixels.resize(stride * raw.height);
  raw.rows.resize(raw.height);
  for (std::size_t y = 0; y < raw.height; ++y) raw.rows[y] = raw.pixels.data() + y * stride;
  png_read_image(png, raw.rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  RawImage* raw;
};

void on_jpeg_error(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  char buf[JMSG_LENGTH_MAX];
  (*cinfo->err->format_message)(cinfo, buf);
  std::snprintf(err->raw->message.data(), err->raw->message.size(), "%s", buf);
  std::longjmp(err->jump, 1);
}

void on_jpeg_message(j_common_ptr, int) {}

bool decode_jpeg(std::FILE* f, RawImage& raw) {
  jpeg_decompress_struct cinfo;
  JpegError err;
  err.raw = &raw;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = on_jpeg_error;
  err.mgr.emit_message = on_jpeg_message;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f);
  jpeg_read_header(&cinfo, TRUE);
  if (cinfo.jpeg_color_space == JCS_GRAYSCALE) {
    raw.grayscale = true;
    jpeg_destroy_decompress(&cinfo);
    return true;
  }
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  raw.width = cinfo.output_width;
  raw.height = cinfo.output_height;
  const std::size_t stride = raw.width * 3;
  raw.pixels.resize(stride * raw.height);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = raw.pixels.data() + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

bool encode_jpeg(std::FILE* f, const RawImage& img, int quality, RawImage& status) {
  jpeg_compress_struct cinfo;
  JpegError err;
  err.raw = &status;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = on_jpeg_error;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    return false;
  }
  jpeg_create_compress(&cinfo);
  jpeg_stdio_dest(&cinfo, f);
  cinfo.image_width = static_cast<JDIMENSION>(img.width);
  cinfo.image_height = static_cast<JDIMENSION>(img.height);
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  const std::size_t stride = img.width * 3;
  while (cinfo.next_scanline < cinfo.image_height) {
    auto* row = const_cast<JSAMPROW>(img.pixels.data() + cinfo.next_scanline * stride);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  return true;
}

}  // namespace

bool is_image_path(const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

ImageTensor load_image(const std::filesystem::path& path) {
  File f = open_file(path, "rb");
  unsigned char magic[8] = {};
  const std::size_t got = std::fread(magic, 1, sizeof magic, f.get());
  std::rewind(f.get());

  RawImage raw;
  bool ok = false;
  if (got == 8 && png_sig_cmp(magic, 0, 8) == 0) {
    ok = decode_png(f.get(), raw);
  } else if (got >= 3 && magic[0] == 0xFF && magic[1] == 0xD8 && magic[2] == 0xFF) {
    ok = decode_jpeg(f.get(), raw);
  } else {
    throw UnsupportedFormat(path.string() + ": not a PNG or JPEG file");
  }
  if (!ok) throw IoError(path.string() + ": " + raw.message.data());
  if (raw.grayscale) {
    throw UnsupportedFormat(path.string() + ": grayscale images are not supported");
  }

  ImageTensor img;
  img.source = path;
  img.bit_depth = raw.bit_depth;
  img.data = Tensor3(raw.height, raw.width, 3);
  const double top = raw.sample_bytes == 2 ? 65535.0 : 255.0;
  const unsigned char* p = raw.pixels.data();
  for (std::size_t y = 0; y < raw.height; ++y) {
    for (std::size_t x = 0; x < raw.width; ++x) {
      for (Index c = 0; c < 3; ++c) {
        unsigned v = *p++;
        if (raw.sample_bytes == 2) v = (v << 8) | *p++;
        img.data(y, x, c) = v / top;
      }
    }
  }
  return img;
}

void save_image(const Tensor3& image, const std::filesystem::path& path, int jpeg_quality) {
  if (image.tubes() != 3) throw DimMismatch("save_image: expected 3 channels");
  const std::string ext = lower_ext(path);
  if (!is_image_path(path)) throw UnsupportedFormat("save_image: unknown extension " + ext);

  RawImage raw;
  raw.width = image.cols();
  raw.height = image.rows();
  raw.pixels.resize(raw.width * raw.height * 3);
  unsigned char* p = raw.pixels.data();
  for (std::size_t y = 0; y < raw.height; ++y) {
    for (std::size_t x = 0; x < raw.width; ++x) {
      for (Index c = 0; c < 3; ++c) {
        const double v = std::clamp(image(y, x, c), 0.0, 1.0);
        *p++ = static_cast<unsigned char>(std::lround(v * 255.0));
      }
    }
  }

  if (ext == ".png") {
    png_image out{};
    out.version = PNG_IMAGE_VERSION;
    out.width = static_cast<png_uint_32>(raw.width);
    out.height = static_cast<png_uint_32>(raw.height);
    out.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&out, path.c_str(), 0, raw.pixels.data(), 0, nullptr)) {
      const std::string msg = out.message;
      png_image_free(&out);
      throw IoError(path.string() + ": " + msg);
    }
    return;
  }
  File f = open_file(path, "wb");
  RawImage status;
  if (!encode_jpeg(f.get(), raw, jpeg_quality, status)) {
    throw IoError(path.string() + ": " + status.message.data());
  }
}

}  // namespace tlbr
