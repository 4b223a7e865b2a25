#include "dsrf/imgcore/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsrf/core/error.hpp"

namespace dsrf::io {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error("cannot open '" + path.string() + "'");
  return f;
}

std::string lower_ext(const fs::path& p) {
  auto e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

std::uint16_t quantize(float v, int maxval) {
  const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
  return static_cast<std::uint16_t>(std::lround(c * maxval));
}

Image read_png(const fs::path& path) {
  auto f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("png_create_info_struct failed");
  }
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("failed to decode PNG '" + path.string() + "'");
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (depth == 16) png_set_swap(png);  // little-endian host order
  png_read_update_info(png, info);
  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int out_depth = png_get_bit_depth(png, info);
  const int samples = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * height);
  rows.resize(height);
  for (int y = 0; y < height; ++y) rows[y] = buffer.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const int channels = (samples >= 3) ? 3 : 1;
  Image img(channels, height, width);
  const double maxval = out_depth == 16 ? 65535.0 : 255.0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        const std::size_t s = static_cast<std::size_t>(x) * samples + c;
        double v;
        if (out_depth == 16) {
          std::uint16_t u;
          std::memcpy(&u, rows[y] + 2 * s, 2);
          v = u;
        } else {
          v = rows[y][s];
        }
        img.at(c, y, x) = static_cast<float>(v / maxval);
      }
    }
  }
  return img;
}

// Reads whitespace/comment separated header token of a PNM file.
std::string pnm_token(std::istream& in) {
  std::string tok;
  char ch;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string dummy;
      std::getline(in, dummy);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(ch);
  }
  return tok;
}

struct PnmData {
  int channels = 0, height = 0, width = 0, maxval = 0;
  std::vector<std::uint16_t> samples;
};

PnmData read_pnm_raw(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  const std::string magic = pnm_token(in);
  PnmData d;
  if (magic == "P5") {
    d.channels = 1;
  } else if (magic == "P6") {
    d.channels = 3;
  } else {
    throw Error("unsupported PNM magic '" + magic + "' in " + path.string());
  }
  try {
    d.width = std::stoi(pnm_token(in));
    d.height = std::stoi(pnm_token(in));
    d.maxval = std::stoi(pnm_token(in));
  } catch (const std::exception&) {
    throw Error("malformed PNM header in " + path.string());
  }
  if (d.width <= 0 || d.height <= 0 || d.maxval <= 0 || d.maxval > 65535) {
    throw Error("invalid PNM header values in " + path.string());
  }
  const std::size_t n = static_cast<std::size_t>(d.width) * d.height * d.channels;
  d.samples.resize(n);
  if (d.maxval < 256) {
    std::vector<unsigned char> buf(n);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
    if (!in) throw Error("truncated PNM data in " + path.string());
    std::copy(buf.begin(), buf.end(), d.samples.begin());
  } else {
    std::vector<unsigned char> buf(2 * n);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(2 * n));
    if (!in) throw Error("truncated PNM data in " + path.string());
    for (std::size_t i = 0; i < n; ++i) {
      d.samples[i] = static_cast<std::uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);  // big-endian
    }
  }
  return d;
}

void write_pnm_samples(const fs::path& path, int channels, int height, int width, int maxval,
                       const std::vector<std::uint16_t>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << (channels == 1 ? "P5" : "P6") << "\n" << width << " " << height << "\n" << maxval << "\n";
  if (maxval < 256) {
    std::vector<unsigned char> buf(samples.begin(), samples.end());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  } else {
    std::vector<unsigned char> buf(2 * samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      buf[2 * i] = static_cast<unsigned char>(samples[i] >> 8);
      buf[2 * i + 1] = static_cast<unsigned char>(samples[i] & 0xff);
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace

Image read_image(const fs::path& path) {
  const auto ext = lower_ext(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
    const auto d = read_pnm_raw(path);
    Image img(d.channels, d.height, d.width);
    for (int y = 0; y < d.height; ++y) {
      for (int x = 0; x < d.width; ++x) {
        for (int c = 0; c < d.channels; ++c) {
          const auto s = d.samples[(static_cast<std::size_t>(y) * d.width + x) * d.channels + c];
          img.at(c, y, x) = static_cast<float>(static_cast<double>(s) / d.maxval);
        }
      }
    }
    return img;
  }
  throw Error("unsupported image extension '" + ext + "'");
}

void write_png(const fs::path& path, const Image& img, int bit_depth) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw InvalidInput("write_png: only 1- or 3-channel images");
  }
  if (bit_depth != 8 && bit_depth != 16) throw InvalidInput("write_png: bit depth must be 8 or 16");
  auto f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("png_create_info_struct failed");
  }
  const int channels = img.channels();
  const int bytes = bit_depth / 8;
  std::vector<png_byte> buffer(static_cast<std::size_t>(img.width()) * channels * bytes * img.height());
  const int maxval = bit_depth == 16 ? 65535 : 255;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < channels; ++c) {
        const std::uint16_t q = quantize(img.at(c, y, x), maxval);
        const std::size_t s = ((static_cast<std::size_t>(y) * img.width() + x) * channels + c) * bytes;
        if (bytes == 2) {
          buffer[s] = static_cast<png_byte>(q >> 8);
          buffer[s + 1] = static_cast<png_byte>(q & 0xff);
        } else {
          buffer[s] = static_cast<png_byte>(q);
        }
      }
    }
  }
  std::vector<png_bytep> rows(img.height());
  const std::size_t rowbytes = static_cast<std::size_t>(img.width()) * channels * bytes;
  for (int y = 0; y < img.height(); ++y) rows[y] = buffer.data() + y * rowbytes;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("failed to encode PNG '" + path.string() + "'");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, img.width(), img.height(), bit_depth,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 3);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_pnm(const fs::path& path, const Image& img, int bit_depth) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw InvalidInput("write_pnm: only 1- or 3-channel images");
  }
  const int maxval = bit_depth == 16 ? 65535 : 255;
  std::vector<std::uint16_t> samples(img.size());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        samples[(static_cast<std::size_t>(y) * img.width() + x) * img.channels() + c] =
            quantize(img.at(c, y, x), maxval);
      }
    }
  }
  write_pnm_samples(path, img.channels(), img.height(), img.width(), maxval, samples);
}

void write_image(const fs::path& path, const Image& img, int bit_depth) {
  const auto ext = lower_ext(path);
  if (ext == ".png") return write_png(path, img, bit_depth);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return write_pnm(path, img, bit_depth);
  throw Error("unsupported image extension '" + ext + "'");
}

BayerRaw read_raw(const fs::path& path) {
  const auto d = read_pnm_raw(path);
  if (d.channels != 1) throw Error("RAW must be a single-channel PGM: " + path.string());
  BayerRaw raw;
  raw.height = d.height;
  raw.width = d.width;
  raw.data = d.samples;
  if (d.maxval != 65535) {
    for (auto& s : raw.data) {
      s = static_cast<std::uint16_t>(std::lround(static_cast<double>(s) * 65535.0 / d.maxval));
    }
  }
  fs::path sidecar = path;
  sidecar += ".json";
  std::ifstream in(sidecar);
  if (!in) throw Error("missing RAW sidecar '" + sidecar.string() + "'");
  nlohmann::json meta;
  try {
    in >> meta;
    raw.pattern = parse_bayer_pattern(meta.at("pattern").get<std::string>());
    raw.black_level = meta.value("black_level", 0);
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed RAW sidecar '" + sidecar.string() + "': " + e.what());
  }
  return raw;
}

void write_raw(const fs::path& path, const BayerRaw& raw) {
  write_pnm_samples(path, 1, raw.height, raw.width, 65535, raw.data);
  fs::path sidecar = path;
  sidecar += ".json";
  std::ofstream out(sidecar);
  if (!out) throw Error("cannot write '" + sidecar.string() + "'");
  nlohmann::json meta{{"pattern", to_string(raw.pattern)}, {"black_level", raw.black_level}};
  out << meta.dump(2) << "\n";
}

}  // namespace dsrf::io
