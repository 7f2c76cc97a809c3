#include "handseg/image_io.hpp"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <array>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <string>

#include "handseg/error.hpp"

namespace handseg::io {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw DataError("cannot open " + path.string());
  return f;
}

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return e;
}

bool has_png_signature(std::FILE* f) {
  std::array<unsigned char, 8> sig{};
  const bool ok = std::fread(sig.data(), 1, sig.size(), f) == sig.size() &&
                  png_sig_cmp(sig.data(), 0, sig.size()) == 0;
  std::rewind(f);
  return ok;
}

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  auto* err = static_cast<std::string*>(png_get_error_ptr(png));
  if (err) *err = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

Frame read_png_rgb(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw DataError("cannot read PNG " + path.string() + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw DataError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  return Frame(static_cast<int>(image.width), static_cast<int>(image.height),
               std::move(buf));
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

Frame read_jpeg_rgb(const fs::path& path) {
  FilePtr f = open_file(path, "rb");
  jpeg_decompress_struct cinfo{};
  JpegErrorManager jerr{};
  cinfo.err = jpeg_std_error(&jerr.base);
  jerr.base.error_exit = jpeg_error_exit;
  std::vector<std::uint8_t> buf;
  int width = 0, height = 0;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw DataError("cannot decode JPEG " + path.string() + ": " +
                    jerr.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  width = static_cast<int>(cinfo.output_width);
  height = static_cast<int>(cinfo.output_height);
  buf.resize(static_cast<std::size_t>(width) * height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = buf.data() +
                   static_cast<std::size_t>(cinfo.output_scanline) * width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return Frame(width, height, std::move(buf));
}

// Low-level libpng writer shared by the indexed and 16-bit outputs.
class PngWriter {
 public:
  explicit PngWriter(const fs::path& path)
      : path_(path), file_(open_file(path, "wb")) {
    png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error_,
                                   png_error_fn, png_warning_fn);
    if (!png_) throw DataError("libpng init failed");
    info_ = png_create_info_struct(png_);
    if (!info_) {
      png_destroy_write_struct(&png_, nullptr);
      throw DataError("libpng init failed");
    }
  }
  ~PngWriter() { png_destroy_write_struct(&png_, &info_); }
  PngWriter(const PngWriter&) = delete;
  PngWriter& operator=(const PngWriter&) = delete;

  // `rows` are complete encoded rows.
  void write(int width, int height, int bit_depth, int color_type,
             std::span<const Rgb> palette,
             const std::vector<const std::uint8_t*>& rows) {
    if (setjmp(png_jmpbuf(png_)))
      throw DataError("cannot write PNG " + path_.string() + ": " + error_);
    png_init_io(png_, file_.get());
    png_set_IHDR(png_, info_, static_cast<png_uint_32>(width),
                 static_cast<png_uint_32>(height), bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    std::vector<png_color> pal;
    if (color_type == PNG_COLOR_TYPE_PALETTE) {
      for (const Rgb& c : palette) pal.push_back({c.r, c.g, c.b});
      png_set_PLTE(png_, info_, pal.data(), static_cast<int>(pal.size()));
    }
    png_write_info(png_, info_);
    for (const std::uint8_t* row : rows)
      png_write_row(png_, const_cast<png_bytep>(row));
    png_write_end(png_, nullptr);
  }

 private:
  fs::path path_;
  FilePtr file_;
  std::string error_;
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
};

LabelImage read_png_label(const fs::path& path) {
  FilePtr f = open_file(path, "rb");
  std::string error;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error,
                                           png_error_fn, png_warning_fn);
  if (!png) throw DataError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> data;
  int width = 0, height = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("cannot decode PNG " + path.string() + ": " + error);
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (depth < 8) png_set_packing(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);
  const std::size_t channels = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<std::uint8_t> raw(rowbytes * height);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = raw.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  data.resize(static_cast<std::size_t>(width) * height);
  const bool has_alpha = (color & PNG_COLOR_MASK_ALPHA) != 0;
  const std::size_t value_channels = has_alpha ? channels - 1 : channels;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::uint8_t* p = rows[y] + x * channels;
      std::uint8_t v = 0;
      for (std::size_t c = 0; c < value_channels; ++c) v = std::max(v, p[c]);
      data[static_cast<std::size_t>(y) * width + x] = v;
    }
  }
  return LabelImage(width, height, std::move(data));
}

}  // namespace

Frame read_frame(const fs::path& path) {
  FilePtr f = open_file(path, "rb");
  const bool png = has_png_signature(f.get());
  f.reset();
  if (png) return read_png_rgb(path);
  const std::string ext = lower_ext(path);
  if (ext == ".jpg" || ext == ".jpeg") return read_jpeg_rgb(path);
  throw DataError("unsupported image format: " + path.string());
}

void write_frame_png(const fs::path& path, const Frame& frame) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(frame.width());
  image.height = static_cast<png_uint_32>(frame.height());
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, frame.pixels().data(),
                               0, nullptr))
    throw DataError("cannot write PNG " + path.string() + ": " + image.message);
}

LabelImage read_label_image(const fs::path& path) {
  FilePtr f = open_file(path, "rb");
  const bool png = has_png_signature(f.get());
  f.reset();
  if (png) return read_png_label(path);
  // JPEG masks: decode as RGB and keep the max channel.
  const Frame fr = read_frame(path);
  LabelImage out(fr.width(), fr.height());
  for (std::size_t i = 0; i < fr.pixel_count(); ++i) {
    const Rgb c = fr.at(i);
    out[i] = std::max({c.r, c.g, c.b});
  }
  return out;
}

void write_indexed_png(const fs::path& path, int width, int height,
                       std::span<const std::uint8_t> values,
                       std::span<const Rgb> palette) {
  if (values.size() != static_cast<std::size_t>(width) * height)
    throw DataError("indexed image buffer does not match dimensions");
  std::vector<const std::uint8_t*> rows(height);
  for (int y = 0; y < height; ++y)
    rows[y] = values.data() + static_cast<std::size_t>(y) * width;
  PngWriter(path).write(width, height, 8, PNG_COLOR_TYPE_PALETTE, palette,
                        rows);
}

void write_lr_mask(const fs::path& path, const LRMask& mask) {
  static constexpr std::array<Rgb, 3> kPalette = {
      Rgb{0, 0, 0}, Rgb{255, 0, 0}, Rgb{0, 0, 255}};
  write_indexed_png(path, mask.width(), mask.height(), mask.values(),
                    kPalette);
}

void write_gray16_png(const fs::path& path, int width, int height,
                      std::span<const std::uint16_t> values) {
  if (values.size() != static_cast<std::size_t>(width) * height)
    throw DataError("16-bit image buffer does not match dimensions");
  // PNG stores 16-bit samples big-endian.
  std::vector<std::uint8_t> be(values.size() * 2);
  for (std::size_t i = 0; i < values.size(); ++i) {
    be[2 * i] = static_cast<std::uint8_t>(values[i] >> 8);
    be[2 * i + 1] = static_cast<std::uint8_t>(values[i] & 0xff);
  }
  std::vector<const std::uint8_t*> rows(height);
  for (int y = 0; y < height; ++y)
    rows[y] = be.data() + static_cast<std::size_t>(y) * width * 2;
  PngWriter(path).write(width, height, 16, PNG_COLOR_TYPE_GRAY, {}, rows);
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir))
    throw DataError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = lower_ext(entry.path());
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg")
      out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  return out;
}

}  // namespace handseg::io
