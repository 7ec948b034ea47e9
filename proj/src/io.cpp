#include "vip/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace vip {

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw ConfigError("truncated binary file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_vtn(std::ostream& os, const Tensor& t) {
  os.write("VTN1", 4);
  write_u32(os, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t e : t.shape) write_u32(os, static_cast<std::uint32_t>(e));
  // doubles written as-is; this artifact targets little-endian IEEE hosts
  os.write(reinterpret_cast<const char*>(t.data().data()),
           static_cast<std::streamsize>(t.size() * sizeof(double)));
  if (!os) throw ConfigError("VTN1 write failed");
}

Tensor read_vtn(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "VTN1", 4) != 0) throw ConfigError("bad VTN1 magic");
  const std::uint32_t rank = read_u32(is);
  if (rank > 8) throw ConfigError("VTN1 rank too large");
  Shape shape(rank);
  for (auto& e : shape) e = read_u32(is);
  std::vector<double> data(numel(shape));
  is.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!is) throw ConfigError("truncated VTN1 payload");
  return Tensor(std::move(shape), std::move(data));
}

void save_vtn(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open for writing: " + path.string());
  write_vtn(os, t);
}

Tensor load_vtn(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open: " + path.string());
  return read_vtn(is);
}

void save_pgm(const std::filesystem::path& path, const Tensor& image, int maxval) {
  if (image.rank() != 2) throw std::invalid_argument("save_pgm: 2-D image required");
  if (maxval != 255 && maxval != 65535) throw std::invalid_argument("save_pgm: maxval 255 or 65535");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open for writing: " + path.string());
  os << "P5\n" << image.shape[1] << " " << image.shape[0] << "\n" << maxval << "\n";
  for (double v : image.data()) {
    const double c = std::clamp(v, 0.0, 1.0);
    const long q = std::lround(c * maxval);
    if (maxval == 255) {
      const unsigned char b = static_cast<unsigned char>(q);
      os.write(reinterpret_cast<const char*>(&b), 1);
    } else {
      const unsigned char b[2] = {static_cast<unsigned char>((q >> 8) & 0xff),
                                  static_cast<unsigned char>(q & 0xff)};
      os.write(reinterpret_cast<const char*>(b), 2);
    }
  }
  if (!os) throw ConfigError("PGM write failed");
}

Tensor load_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open: " + path.string());
  std::string magic;
  is >> magic;
  if (magic != "P5") throw ConfigError("not a binary PGM: " + path.string());
  std::size_t w = 0, h = 0;
  int maxval = 0;
  is >> w >> h >> maxval;
  is.get();  // single whitespace after header
  if (w == 0 || h == 0 || (maxval != 255 && maxval != 65535)) {
    throw ConfigError("unsupported PGM header: " + path.string());
  }
  std::vector<double> data(h * w);
  for (auto& v : data) {
    if (maxval == 255) {
      unsigned char b;
      is.read(reinterpret_cast<char*>(&b), 1);
      v = static_cast<double>(b) / 255.0;
    } else {
      unsigned char b[2];
      is.read(reinterpret_cast<char*>(b), 2);
      v = static_cast<double>((static_cast<int>(b[0]) << 8) | b[1]) / 65535.0;
    }
  }
  if (!is) throw ConfigError("truncated PGM payload: " + path.string());
  return Tensor(Shape{h, w}, std::move(data));
}

void write_json_header(std::ostream& os, const std::string& json) {
  write_u32(os, static_cast<std::uint32_t>(json.size()));
  os.write(json.data(), static_cast<std::streamsize>(json.size()));
}

std::string read_json_header(std::istream& is) {
  const std::uint32_t n = read_u32(is);
  if (n > (1u << 24)) throw ConfigError("JSON header too large");
  std::string json(n, '\0');
  is.read(json.data(), static_cast<std::streamsize>(n));
  if (!is) throw ConfigError("truncated JSON header");
  return json;
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : f_(std::fopen(path.c_str(), "wb")) {
  if (f_ == nullptr) throw ConfigError("cannot open for writing: " + path.string());
}

CsvWriter::~CsvWriter() {
  if (f_ != nullptr) std::fclose(f_);
}

std::string CsvWriter::format(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void CsvWriter::header(const std::vector<std::string>& columns) { row(columns); }

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format(v));
  row(cells);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    std::fputs(cells[i].c_str(), f_);
    std::fputc(i + 1 < cells.size() ? ',' : '\n', f_);
  }
}

}  // namespace vip
