#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "vip/tensor.hpp"

namespace vip {

// VTN1 binary array: magic "VTN1", u32 rank, u32 extents (LE), f64 payload.
void write_vtn(std::ostream& os, const Tensor& t);
Tensor read_vtn(std::istream& is);
void save_vtn(const std::filesystem::path& path, const Tensor& t);
Tensor load_vtn(const std::filesystem::path& path);

// 8- or 16-bit binary PGM (P5). Values are clamped to [0, 1] on write.
void save_pgm(const std::filesystem::path& path, const Tensor& image, int maxval = 255);
Tensor load_pgm(const std::filesystem::path& path);

// Container framing shared by checkpoints and measurement files:
// u32 JSON byte length (LE), JSON text, then VTN1 arrays.
void write_json_header(std::ostream& os, const std::string& json);
std::string read_json_header(std::istream& is);

// CSV with deterministic %.17g number formatting.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void header(const std::vector<std::string>& columns);
  void row(const std::vector<double>& values);
  void row(const std::vector<std::string>& cells);

  static std::string format(double v);

 private:
  std::FILE* f_;
};

}  // namespace vip
