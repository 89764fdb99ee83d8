#include "protoprompt/nifti.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <memory>

#include <zlib.h>

#include "protoprompt/error.hpp"

namespace protoprompt {
namespace {

constexpr int kHeaderSize = 348;
constexpr int kDataOffset = 352;  // header plus the empty 4-byte extension flag

template <typename T>
T load(const unsigned char* p, bool swap) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, p, sizeof(T));
  if (swap)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

template <typename T>
void store(unsigned char* p, T v) {
  std::memcpy(p, &v, sizeof(T));
}

int bytes_per_voxel(NiftiType t) {
  switch (t) {
    case NiftiType::kUInt8:
    case NiftiType::kInt8: return 1;
    case NiftiType::kInt16:
    case NiftiType::kUInt16: return 2;
    case NiftiType::kInt32:
    case NiftiType::kUInt32:
    case NiftiType::kFloat32: return 4;
    case NiftiType::kFloat64: return 8;
  }
  return 0;
}

double decode(const unsigned char* p, NiftiType t, bool swap) {
  switch (t) {
    case NiftiType::kUInt8: return *p;
    case NiftiType::kInt8: return static_cast<std::int8_t>(*p);
    case NiftiType::kInt16: return load<std::int16_t>(p, swap);
    case NiftiType::kUInt16: return load<std::uint16_t>(p, swap);
    case NiftiType::kInt32: return load<std::int32_t>(p, swap);
    case NiftiType::kUInt32: return load<std::uint32_t>(p, swap);
    case NiftiType::kFloat32: return load<float>(p, swap);
    case NiftiType::kFloat64: return load<double>(p, swap);
  }
  return 0.0;
}

void encode(unsigned char* p, NiftiType t, double v) {
  switch (t) {
    case NiftiType::kUInt8: *p = static_cast<std::uint8_t>(std::lround(v)); break;
    case NiftiType::kInt8: store(p, static_cast<std::int8_t>(std::lround(v))); break;
    case NiftiType::kInt16: store(p, static_cast<std::int16_t>(std::lround(v))); break;
    case NiftiType::kUInt16: store(p, static_cast<std::uint16_t>(std::lround(v))); break;
    case NiftiType::kInt32: store(p, static_cast<std::int32_t>(std::llround(v))); break;
    case NiftiType::kUInt32: store(p, static_cast<std::uint32_t>(std::llround(v))); break;
    case NiftiType::kFloat32: store(p, static_cast<float>(v)); break;
    case NiftiType::kFloat64: store(p, v); break;
  }
}

bool known_type(std::int16_t code) {
  for (auto t : {NiftiType::kUInt8, NiftiType::kInt16, NiftiType::kInt32, NiftiType::kFloat32, NiftiType::kFloat64,
                 NiftiType::kInt8, NiftiType::kUInt16, NiftiType::kUInt32})
    if (static_cast<std::int16_t>(t) == code) return true;
  return false;
}

struct GzCloser {
  void operator()(gzFile f) const {
    if (f) gzclose(f);
  }
};
using GzPtr = std::unique_ptr<gzFile_s, GzCloser>;

// gzread also passes uncompressed files through unchanged.
std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  GzPtr f(gzopen(path.c_str(), "rb"));
  if (!f) fail(ErrorCode::kIoError, "cannot open '" + path.string() + "'");
  std::vector<unsigned char> out;
  unsigned char chunk[1 << 16];
  for (;;) {
    const int n = gzread(f.get(), chunk, sizeof chunk);
    if (n < 0) fail(ErrorCode::kCorruptDataset, "failed to decompress '" + path.string() + "'");
    if (n == 0) break;
    out.insert(out.end(), chunk, chunk + n);
  }
  return out;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

NiftiVolume read_nifti(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::kIoError, "file not found: '" + path.string() + "'");
  const auto bytes = read_all(path);
  const std::string where = "'" + path.string() + "': ";
  if (bytes.size() < kHeaderSize) fail(ErrorCode::kCorruptDataset, where + "truncated NIfTI header");
  const unsigned char* h = bytes.data();
  bool swap = false;
  if (load<std::int32_t>(h, false) != kHeaderSize) {
    if (load<std::int32_t>(h, true) != kHeaderSize) fail(ErrorCode::kCorruptDataset, where + "not a NIfTI-1 file");
    swap = true;
  }
  if (std::memcmp(h + 344, "n+1", 4) != 0)
    fail(ErrorCode::kCorruptDataset, where + "only single-file NIfTI-1 (magic n+1) is supported");

  const int ndim = load<std::int16_t>(h + 40, swap);
  if (ndim < 2 || ndim > 7) fail(ErrorCode::kCorruptDataset, where + "invalid dimension count " + std::to_string(ndim));
  NiftiVolume vol;
  for (int i = 0; i < 3; ++i) {
    vol.dims[i] = i < ndim ? load<std::int16_t>(h + 42 + 2 * i, swap) : 1;
    vol.spacing[i] = i < ndim ? std::abs(load<float>(h + 80 + 4 * i, swap)) : 1.f;
    if (vol.dims[i] < 1) fail(ErrorCode::kCorruptDataset, where + "non-positive extent");
  }
  for (int i = 3; i < ndim; ++i)
    if (load<std::int16_t>(h + 42 + 2 * i, swap) > 1)
      fail(ErrorCode::kCorruptDataset, where + "volumes with more than three non-singleton dimensions are not supported");

  const std::int16_t code = load<std::int16_t>(h + 70, swap);
  if (!known_type(code)) fail(ErrorCode::kCorruptDataset, where + "unsupported datatype " + std::to_string(code));
  const auto type = static_cast<NiftiType>(code);
  const auto offset = static_cast<std::size_t>(load<float>(h + 108, swap));
  float slope = load<float>(h + 112, swap);
  const float inter = load<float>(h + 116, swap);
  if (slope == 0.f || !std::isfinite(slope)) slope = 1.f;

  const std::size_t bpv = bytes_per_voxel(type);
  const std::size_t n = vol.voxel_count();
  if (offset < kHeaderSize || bytes.size() < offset + n * bpv)
    fail(ErrorCode::kCorruptDataset, where + "voxel data is truncated");
  vol.voxels.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    vol.voxels[i] = decode(h + offset + i * bpv, type, swap) * slope + (std::isfinite(inter) ? inter : 0.f);
  return vol;
}

void write_nifti(const std::filesystem::path& path, const NiftiVolume& volume, NiftiType type) {
  for (int d : volume.dims) require(d >= 1 && d <= std::numeric_limits<std::int16_t>::max(), "write_nifti: bad extent");
  require(volume.voxels.size() == volume.voxel_count(), "write_nifti: voxel count does not match dims");
  const std::size_t bpv = bytes_per_voxel(type);
  std::vector<unsigned char> bytes(kDataOffset + volume.voxel_count() * bpv, 0);
  unsigned char* h = bytes.data();
  store<std::int32_t>(h, kHeaderSize);
  store<std::int16_t>(h + 40, 3);
  for (int i = 0; i < 3; ++i) {
    store<std::int16_t>(h + 42 + 2 * i, static_cast<std::int16_t>(volume.dims[i]));
    store<float>(h + 80 + 4 * i, volume.spacing[i]);
  }
  for (int i = 3; i < 7; ++i) store<std::int16_t>(h + 42 + 2 * i, 1);
  store<float>(h + 76, 1.f);  // qfac
  store<std::int16_t>(h + 70, static_cast<std::int16_t>(type));
  store<std::int16_t>(h + 72, static_cast<std::int16_t>(8 * bpv));
  store<float>(h + 108, static_cast<float>(kDataOffset));
  store<float>(h + 112, 1.f);
  h[123] = 10;  // xyzt_units: millimetres, seconds
  std::memcpy(h + 344, "n+1", 4);
  for (std::size_t i = 0; i < volume.voxels.size(); ++i) encode(h + kDataOffset + i * bpv, type, volume.voxels[i]);

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const bool compress = ends_with(path.string(), ".gz");
  GzPtr f(gzopen(path.c_str(), compress ? "wb6" : "wbT"));
  if (!f) fail(ErrorCode::kIoError, "cannot write '" + path.string() + "'");
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto chunk = static_cast<unsigned>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    if (gzwrite(f.get(), bytes.data() + done, chunk) != static_cast<int>(chunk))
      fail(ErrorCode::kIoError, "failed writing '" + path.string() + "'");
    done += chunk;
  }
}

}  // namespace protoprompt
