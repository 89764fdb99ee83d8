#include "protoprompt/npy.hpp"

#include <cstring>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>

#include "protoprompt/error.hpp"

namespace protoprompt::npy {
namespace {

constexpr char kMagic[] = "\x93NUMPY";

std::size_t item_size(DType dtype) {
  switch (dtype) {
    case DType::kFloat32: return 4;
    case DType::kFloat64: return 8;
    case DType::kUInt8: return 1;
    case DType::kInt32: return 4;
    case DType::kInt64: return 8;
  }
  return 0;
}

DType parse_descr(const std::string& descr, const std::filesystem::path& path) {
  if (descr == "<f4") return DType::kFloat32;
  if (descr == "<f8") return DType::kFloat64;
  if (descr == "|u1" || descr == "<u1") return DType::kUInt8;
  if (descr == "|b1") return DType::kUInt8;
  if (descr == "<i4") return DType::kInt32;
  if (descr == "<i8") return DType::kInt64;
  fail(ErrorCode::kIoError, "npy: unsupported dtype '" + descr + "' in " + path.string());
}

template <typename T>
void widen(const char* raw, std::size_t n, std::vector<double>& out) {
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    T v;
    std::memcpy(&v, raw + i * sizeof(T), sizeof(T));
    out[i] = static_cast<double>(v);
  }
}

template <typename T>
void narrow(const std::vector<double>& values, std::string& out) {
  out.resize(values.size() * sizeof(T));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const T v = static_cast<T>(values[i]);
    std::memcpy(out.data() + i * sizeof(T), &v, sizeof(T));
  }
}

}  // namespace

std::size_t Array::size() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string dtype_descr(DType dtype) {
  switch (dtype) {
    case DType::kFloat32: return "<f4";
    case DType::kFloat64: return "<f8";
    case DType::kUInt8: return "|u1";
    case DType::kInt32: return "<i4";
    case DType::kInt64: return "<i8";
  }
  return "";
}

Array read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "npy: cannot open " + path.string());
  char magic[6];
  in.read(magic, 6);
  if (!in || std::memcmp(magic, kMagic, 6) != 0)
    fail(ErrorCode::kIoError, "npy: bad magic in " + path.string());
  unsigned char version[2];
  in.read(reinterpret_cast<char*>(version), 2);
  std::uint32_t header_len = 0;
  if (version[0] == 1) {
    unsigned char len[2];
    in.read(reinterpret_cast<char*>(len), 2);
    header_len = len[0] | (len[1] << 8);
  } else {
    unsigned char len[4];
    in.read(reinterpret_cast<char*>(len), 4);
    header_len = len[0] | (len[1] << 8) | (len[2] << 16) | (static_cast<std::uint32_t>(len[3]) << 24);
  }
  std::string header(header_len, '\0');
  in.read(header.data(), header_len);
  if (!in) fail(ErrorCode::kIoError, "npy: truncated header in " + path.string());

  std::smatch m;
  if (!std::regex_search(header, m, std::regex(R"('descr'\s*:\s*'([^']+)')")))
    fail(ErrorCode::kIoError, "npy: missing descr in " + path.string());
  Array array;
  array.dtype = parse_descr(m[1], path);
  if (std::regex_search(header, m, std::regex(R"('fortran_order'\s*:\s*(True|False))")) && m[1] == "True")
    fail(ErrorCode::kIoError, "npy: Fortran-ordered arrays are not supported: " + path.string());
  if (!std::regex_search(header, m, std::regex(R"('shape'\s*:\s*\(([^)]*)\))")))
    fail(ErrorCode::kIoError, "npy: missing shape in " + path.string());
  std::stringstream dims(m[1].str());
  std::string token;
  while (std::getline(dims, token, ',')) {
    if (token.find_first_not_of(" \t") == std::string::npos) continue;
    array.shape.push_back(static_cast<std::size_t>(std::stoull(token)));
  }

  const std::size_t n = array.size();
  std::string raw(n * item_size(array.dtype), '\0');
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!in) fail(ErrorCode::kIoError, "npy: truncated data in " + path.string());
  switch (array.dtype) {
    case DType::kFloat32: widen<float>(raw.data(), n, array.values); break;
    case DType::kFloat64: widen<double>(raw.data(), n, array.values); break;
    case DType::kUInt8: widen<std::uint8_t>(raw.data(), n, array.values); break;
    case DType::kInt32: widen<std::int32_t>(raw.data(), n, array.values); break;
    case DType::kInt64: widen<std::int64_t>(raw.data(), n, array.values); break;
  }
  return array;
}

void write(const std::filesystem::path& path, const Array& array) {
  if (array.values.size() != array.size())
    fail(ErrorCode::kInvalidArgument, "npy: value count does not match shape");
  std::string shape = "(";
  for (std::size_t i = 0; i < array.shape.size(); ++i) {
    shape += std::to_string(array.shape[i]);
    if (array.shape.size() == 1 || i + 1 < array.shape.size()) shape += ",";
    if (i + 1 < array.shape.size()) shape += " ";
  }
  shape += ")";
  std::string header = "{'descr': '" + dtype_descr(array.dtype) +
                       "', 'fortran_order': False, 'shape': " + shape + ", }";
  // Pad so the data section starts on a 64-byte boundary.
  const std::size_t preamble = 10;
  std::size_t total = preamble + header.size() + 1;
  header.append((64 - total % 64) % 64, ' ');
  header += '\n';

  std::string raw;
  switch (array.dtype) {
    case DType::kFloat32: narrow<float>(array.values, raw); break;
    case DType::kFloat64: narrow<double>(array.values, raw); break;
    case DType::kUInt8: narrow<std::uint8_t>(array.values, raw); break;
    case DType::kInt32: narrow<std::int32_t>(array.values, raw); break;
    case DType::kInt64: narrow<std::int64_t>(array.values, raw); break;
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoError, "npy: cannot write " + path.string());
  out.write(kMagic, 6);
  const char version[2] = {1, 0};
  out.write(version, 2);
  const std::uint16_t len = static_cast<std::uint16_t>(header.size());
  const char len_bytes[2] = {static_cast<char>(len & 0xff), static_cast<char>(len >> 8)};
  out.write(len_bytes, 2);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!out) fail(ErrorCode::kIoError, "npy: write failed for " + path.string());
}

}  // namespace protoprompt::npy
