#include "itm/hdr_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <jpeglib.h>
#include <png.h>

#include "itm/errors.hpp"

namespace itm {

HdrImage::HdrImage(int w, int h, float fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {
  if (w <= 0 || h <= 0) throw DataError("image dimensions must be positive");
}

void HdrImage::validate() const {
  if (width <= 0 || height <= 0) throw DataError("image dimensions must be positive");
  if (pixels.size() != pixel_count() * 3) throw DataError("pixel buffer does not match dimensions");
  for (float v : pixels) {
    if (!std::isfinite(v)) throw DataError("non-finite radiance value");
    if (v < 0.0f) throw DataError("negative radiance value");
  }
}

LdrImage::LdrImage(int w, int h, std::uint8_t fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {
  if (w <= 0 || h <= 0) throw DataError("image dimensions must be positive");
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw WriteError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw WriteError("short write to " + path.string());
}

// ---------------------------------------------------------------------------
// RGBE

std::array<float, 3> rgbe_to_float(const Rgbe& rgbe) {
  if (rgbe[3] == 0) return {0.0f, 0.0f, 0.0f};
  const double f = std::ldexp(1.0, static_cast<int>(rgbe[3]) - (128 + 8));
  return {static_cast<float>((rgbe[0] + 0.5) * f), static_cast<float>((rgbe[1] + 0.5) * f),
          static_cast<float>((rgbe[2] + 0.5) * f)};
}

Rgbe float_to_rgbe(const std::array<float, 3>& rgb) {
  const double v = std::max({static_cast<double>(rgb[0]), static_cast<double>(rgb[1]),
                             static_cast<double>(rgb[2])});
  if (!(v > 1e-32)) return {0, 0, 0, 0};
  int e = 0;
  const double m = std::frexp(v, &e);
  if (e + 128 > 255) throw DataError("radiance value exceeds the RGBE range");
  if (e + 128 < 1) return {0, 0, 0, 0};
  const double scale = m * 256.0 / v;
  Rgbe out{};
  for (int c = 0; c < 3; ++c) {
    const double q = std::floor(std::max(0.0, static_cast<double>(rgb[c])) * scale);
    out[c] = static_cast<std::uint8_t>(std::min(q, 255.0));
  }
  out[3] = static_cast<std::uint8_t>(e + 128);
  return out;
}

namespace {

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  bool at_end() const { return pos_ >= bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::uint8_t next() {
    if (at_end()) throw FormatError("unexpected end of RGBE stream");
    return bytes_[pos_++];
  }

  std::string line() {
    std::string out;
    while (true) {
      if (at_end()) throw FormatError("unterminated RGBE header line");
      const auto c = static_cast<char>(bytes_[pos_++]);
      if (c == '\n') break;
      out.push_back(c);
    }
    return out;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void read_flat_scanline(ByteReader& in, std::vector<Rgbe>& row, std::size_t start) {
  int shift = 0;
  std::size_t i = start;
  while (i < row.size()) {
    Rgbe px{in.next(), in.next(), in.next(), in.next()};
    if (px[0] == 1 && px[1] == 1 && px[2] == 1) {
      // Old-style run: repeat the previous pixel.
      if (i == 0) throw FormatError("RGBE run without a preceding pixel");
      const std::size_t count = static_cast<std::size_t>(px[3]) << shift;
      if (i + count > row.size()) throw FormatError("RGBE run overflows the scanline");
      std::fill_n(row.begin() + static_cast<std::ptrdiff_t>(i), count, row[i - 1]);
      i += count;
      shift += 8;
    } else {
      row[i++] = px;
      shift = 0;
    }
  }
}

void read_scanline(ByteReader& in, std::vector<Rgbe>& row) {
  const std::size_t width = row.size();
  if (width < 8 || width > 0x7fff) {
    read_flat_scanline(in, row, 0);
    return;
  }
  Rgbe head{in.next(), in.next(), in.next(), in.next()};
  if (head[0] != 2 || head[1] != 2 || (head[2] & 0x80) != 0) {
    row[0] = head;
    read_flat_scanline(in, row, 1);
    return;
  }
  if ((static_cast<std::size_t>(head[2]) << 8 | head[3]) != width)
    throw FormatError("RGBE scanline width mismatch");
  for (int c = 0; c < 4; ++c) {
    std::size_t i = 0;
    while (i < width) {
      std::uint8_t count = in.next();
      if (count > 128) {
        count = static_cast<std::uint8_t>(count - 128);
        if (i + count > width) throw FormatError("RGBE run overflows the scanline");
        const std::uint8_t value = in.next();
        for (int k = 0; k < count; ++k) row[i++][c] = value;
      } else {
        if (count == 0 || i + count > width) throw FormatError("bad RGBE literal count");
        for (int k = 0; k < count; ++k) row[i++][c] = in.next();
      }
    }
  }
}

void write_rle_component(std::vector<std::uint8_t>& out, const std::vector<std::uint8_t>& data) {
  constexpr std::size_t kMinRun = 4;
  const std::size_t n = data.size();
  std::size_t cur = 0;
  while (cur < n) {
    // Find the next run of at least kMinRun identical bytes.
    std::size_t run_start = cur;
    std::size_t run_len = 0;
    while (run_start < n) {
      run_len = 1;
      while (run_start + run_len < n && run_len < 127 && data[run_start + run_len] == data[run_start])
        ++run_len;
      if (run_len >= kMinRun) break;
      run_start += run_len;
      run_len = 0;
    }
    while (cur < run_start) {
      const std::size_t literal = std::min<std::size_t>(128, run_start - cur);
      out.push_back(static_cast<std::uint8_t>(literal));
      out.insert(out.end(), data.begin() + static_cast<std::ptrdiff_t>(cur),
                 data.begin() + static_cast<std::ptrdiff_t>(cur + literal));
      cur += literal;
    }
    if (run_len >= kMinRun) {
      out.push_back(static_cast<std::uint8_t>(128 + run_len));
      out.push_back(data[run_start]);
      cur = run_start + run_len;
    }
  }
}

int parse_int(const std::string& token) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size())
    throw FormatError("bad integer in RGBE resolution line: " + token);
  return value;
}

}  // namespace

HdrImage decode_hdr(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  const std::string magic = in.line();
  if (magic.rfind("#?", 0) != 0) throw FormatError("missing Radiance signature");
  while (true) {
    const std::string line = in.line();
    if (line.empty()) break;
    if (line.rfind("FORMAT=", 0) == 0 && line != "FORMAT=32-bit_rle_rgbe")
      throw FormatError("unsupported Radiance pixel format: " + line.substr(7));
  }
  std::istringstream res(in.line());
  std::string ya, yv, xa, xv;
  if (!(res >> ya >> yv >> xa >> xv) || ya != "-Y" || xa != "+X")
    throw FormatError("unsupported Radiance resolution line");
  const int height = parse_int(yv);
  const int width = parse_int(xv);
  if (width <= 0 || height <= 0) throw FormatError("invalid Radiance image size");

  HdrImage img(width, height);
  std::vector<Rgbe> row(static_cast<std::size_t>(width));
  for (int y = 0; y < height; ++y) {
    read_scanline(in, row);
    for (int x = 0; x < width; ++x) {
      const auto rgb = rgbe_to_float(row[static_cast<std::size_t>(x)]);
      for (int c = 0; c < 3; ++c) {
        if (!std::isfinite(rgb[c])) throw DataError("non-finite decoded radiance");
        img.at(x, y, c) = rgb[c];
      }
    }
  }
  return img;
}

HdrImage read_hdr(const std::filesystem::path& path) { return decode_hdr(read_file_bytes(path)); }

std::vector<std::uint8_t> encode_hdr(const HdrImage& img) {
  img.validate();
  std::ostringstream header;
  header << "#?RADIANCE\n# itmcodec\nFORMAT=32-bit_rle_rgbe\n\n-Y " << img.height << " +X "
         << img.width << "\n";
  const std::string h = header.str();
  std::vector<std::uint8_t> out(h.begin(), h.end());

  const auto width = static_cast<std::size_t>(img.width);
  const bool rle = width >= 8 && width <= 0x7fff;
  std::array<std::vector<std::uint8_t>, 4> planes;
  for (auto& p : planes) p.resize(width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const Rgbe px = float_to_rgbe({img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)});
      if (rle) {
        for (int c = 0; c < 4; ++c) planes[c][static_cast<std::size_t>(x)] = px[c];
      } else {
        out.insert(out.end(), px.begin(), px.end());
      }
    }
    if (rle) {
      out.push_back(2);
      out.push_back(2);
      out.push_back(static_cast<std::uint8_t>(width >> 8));
      out.push_back(static_cast<std::uint8_t>(width & 0xff));
      for (const auto& p : planes) write_rle_component(out, p);
    }
  }
  return out;
}

void write_hdr(const HdrImage& img, const std::filesystem::path& path) {
  write_file_bytes(path, encode_hdr(img));
}

// ---------------------------------------------------------------------------
// 8-bit bitmaps

LdrEncoding LdrEncoding::parse(std::string_view text) {
  if (text == "png" || text == "lossless") return lossless();
  if (text == "jpeg" || text == "jpg") return jpeg(90);
  for (std::string_view prefix : {"jpeg:", "jpg:"}) {
    if (text.substr(0, prefix.size()) == prefix) {
      const auto q = text.substr(prefix.size());
      int quality = 0;
      const auto [ptr, ec] = std::from_chars(q.data(), q.data() + q.size(), quality);
      if (ec != std::errc() || ptr != q.data() + q.size() || quality < 1 || quality > 100)
        throw FormatError("bad JPEG quality in '" + std::string(text) + "'");
      return jpeg(quality);
    }
  }
  throw FormatError("unsupported LDR format '" + std::string(text) + "'");
}

namespace {

void check_ldr(const LdrImage& img) {
  if (img.width <= 0 || img.height <= 0 || img.pixels.size() != img.pixel_count() * 3)
    throw DataError("LDR buffer does not match its dimensions");
}

std::vector<std::uint8_t> encode_png(const LdrImage& img) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.pixels.data(), 0, nullptr))
    throw WriteError(std::string("PNG encode failed: ") + image.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.pixels.data(), 0, nullptr))
    throw WriteError(std::string("PNG encode failed: ") + image.message);
  out.resize(size);
  return out;
}

LdrImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw FormatError(std::string("PNG decode failed: ") + image.message);
  image.format = PNG_FORMAT_RGB;
  if (image.width == 0 || image.height == 0 || image.width > 1u << 16 || image.height > 1u << 16) {
    png_image_free(&image);
    throw FormatError("PNG dimensions out of range");
  }
  LdrImage img(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, img.pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw FormatError(std::string("PNG decode failed: ") + image.message);
  }
  return img;
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

void jpeg_silence(j_common_ptr, int) {}

std::vector<std::uint8_t> encode_jpeg(const LdrImage& img, int quality) {
  jpeg_compress_struct cinfo{};
  JpegErrorManager jerr{};
  cinfo.err = jpeg_std_error(&jerr.base);
  jerr.base.error_exit = jpeg_error_exit;
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    throw WriteError(std::string("JPEG encode failed: ") + jerr.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = static_cast<JDIMENSION>(img.width);
  cinfo.image_height = static_cast<JDIMENSION>(img.height);
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  cinfo.dct_method = JDCT_FLOAT;
  for (int c = 0; c < 3; ++c) {
    cinfo.comp_info[c].h_samp_factor = 1;
    cinfo.comp_info[c].v_samp_factor = 1;
  }
  jpeg_start_compress(&cinfo, TRUE);
  const auto stride = static_cast<std::size_t>(img.width) * 3;
  while (cinfo.next_scanline < cinfo.image_height) {
    auto* row = const_cast<JSAMPLE*>(img.pixels.data() + cinfo.next_scanline * stride);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  std::vector<std::uint8_t> out(buffer, buffer + size);
  std::free(buffer);
  return out;
}

LdrImage decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager jerr{};
  cinfo.err = jpeg_std_error(&jerr.base);
  jerr.base.error_exit = jpeg_error_exit;
  jerr.base.emit_message = jpeg_silence;
  LdrImage img;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw FormatError(std::string("JPEG decode failed: ") + jerr.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  cinfo.dct_method = JDCT_FLOAT;
  jpeg_start_decompress(&cinfo);
  img.width = static_cast<int>(cinfo.output_width);
  img.height = static_cast<int>(cinfo.output_height);
  img.pixels.assign(img.pixel_count() * 3, 0);
  const auto stride = static_cast<std::size_t>(img.width) * 3;
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPLE* row = img.pixels.data() + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

}  // namespace

std::vector<std::uint8_t> encode_ldr(const LdrImage& img, const LdrEncoding& encoding) {
  check_ldr(img);
  switch (encoding.format) {
    case LdrFormat::LosslessBitmap:
      return encode_png(img);
    case LdrFormat::Jpeg:
      if (encoding.jpeg_quality < 1 || encoding.jpeg_quality > 100)
        throw FormatError("JPEG quality must be in [1, 100]");
      return encode_jpeg(img, encoding.jpeg_quality);
  }
  throw FormatError("unsupported LDR format");
}

LdrImage decode_ldr(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kPng[] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  if (bytes.size() >= sizeof kPng && std::equal(std::begin(kPng), std::end(kPng), bytes.begin()))
    return decode_png(bytes);
  if (bytes.size() >= 3 && bytes[0] == 0xff && bytes[1] == 0xd8 && bytes[2] == 0xff)
    return decode_jpeg(bytes);
  throw FormatError("unrecognized bitmap format");
}

void write_ldr(const LdrImage& img, const std::filesystem::path& path, const LdrEncoding& encoding) {
  write_file_bytes(path, encode_ldr(img, encoding));
}

LdrImage read_ldr(const std::filesystem::path& path) { return decode_ldr(read_file_bytes(path)); }

}  // namespace itm
