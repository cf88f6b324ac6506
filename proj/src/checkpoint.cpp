#include "unisyn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "unisyn/errors.hpp"

namespace unisyn {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

constexpr char kMagic[8] = {'U', 'N', 'I', 'S', 'Y', 'N', 'C', 'K'};

enum class DType : std::uint8_t { kFloat32 = 0, kFloat64 = 1, kInt64 = 2 };

class Writer {
 public:
  template <typename T>
  void pod(T value) {
    const auto* p = reinterpret_cast<const char*>(&value);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const char*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    bytes(s.data(), s.size());
  }
  const std::string& buffer() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(const std::string& buf) : buf_(buf) {}
  template <typename T>
  T pod() {
    T value;
    std::memcpy(&value, take(sizeof(T)), sizeof(T));
    return value;
  }
  const char* take(std::size_t n) {
    if (n > buf_.size() - pos_) throw IntegrityError("checkpoint payload is truncated");
    const char* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    return std::string(take(static_cast<std::size_t>(n)), static_cast<std::size_t>(n));
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  const std::string& buf_;
  std::size_t pos_ = 0;
};

DType dtype_code(const torch::Tensor& t) {
  switch (t.scalar_type()) {
    case torch::kFloat32: return DType::kFloat32;
    case torch::kFloat64: return DType::kFloat64;
    case torch::kInt64: return DType::kInt64;
    default: throw UnsupportedFormatError("checkpoint cannot store tensor type " +
                                          std::string(c10::toString(t.scalar_type())));
  }
}

torch::ScalarType scalar_type(DType code) {
  switch (code) {
    case DType::kFloat32: return torch::kFloat32;
    case DType::kFloat64: return torch::kFloat64;
    case DType::kInt64: return torch::kInt64;
  }
  throw IntegrityError("unknown tensor type code in checkpoint");
}

std::uint32_t checksum(const std::string& payload) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(payload.data()), static_cast<uInt>(payload.size())));
}

}  // namespace

void write_checkpoint(const CheckpointData& data, const fs::path& path) {
  Writer w;
  w.str(data.config_json);
  w.pod<std::uint32_t>(data.config_hash);
  w.pod<std::uint64_t>(data.epoch);
  w.pod<std::uint64_t>(data.iteration);
  w.str(data.rng_state);
  w.pod<std::uint64_t>(data.tensors.size());
  for (const auto& [name, tensor] : data.tensors) {
    const auto t = tensor.detach().contiguous().cpu();
    w.str(name);
    w.pod<std::uint8_t>(static_cast<std::uint8_t>(dtype_code(t)));
    w.pod<std::uint8_t>(static_cast<std::uint8_t>(t.dim()));
    for (auto d : t.sizes()) w.pod<std::int64_t>(d);
    w.bytes(t.data_ptr(), static_cast<std::size_t>(t.nbytes()));
  }
  const auto& payload = w.buffer();

  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out.write(kMagic, sizeof kMagic);
    const std::uint32_t version = kCheckpointVersion;
    const std::uint32_t crc = checksum(payload);
    const std::uint64_t size = payload.size();
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    out.write(reinterpret_cast<const char*>(&crc), sizeof crc);
    out.write(reinterpret_cast<const char*>(&size), sizeof size);
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw IoError("failed writing checkpoint " + tmp.string());
  }
  fs::rename(tmp, path);
}

CheckpointData read_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  const std::string file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  constexpr std::size_t kHeader = sizeof kMagic + 4 + 4 + 8;
  if (file.size() < kHeader || std::memcmp(file.data(), kMagic, sizeof kMagic) != 0) {
    throw IntegrityError(path.string() + " is not a checkpoint file");
  }
  std::uint32_t version = 0, crc = 0;
  std::uint64_t size = 0;
  std::memcpy(&version, file.data() + 8, 4);
  std::memcpy(&crc, file.data() + 12, 4);
  std::memcpy(&size, file.data() + 16, 8);
  if (version != kCheckpointVersion) {
    throw UnsupportedFormatError("checkpoint version " + std::to_string(version) +
                                 " is not supported (expected " +
                                 std::to_string(kCheckpointVersion) + ")");
  }
  if (file.size() - kHeader != size) throw IntegrityError("checkpoint " + path.string() + " has the wrong size");
  const std::string payload = file.substr(kHeader);
  if (checksum(payload) != crc) throw IntegrityError("checkpoint " + path.string() + " fails its checksum");

  Reader r(payload);
  CheckpointData data;
  data.config_json = r.str();
  data.config_hash = r.pod<std::uint32_t>();
  data.epoch = r.pod<std::uint64_t>();
  data.iteration = r.pod<std::uint64_t>();
  data.rng_state = r.str();
  const auto count = r.pod<std::uint64_t>();
  for (std::uint64_t k = 0; k < count; ++k) {
    auto name = r.str();
    const auto type = scalar_type(static_cast<DType>(r.pod<std::uint8_t>()));
    const auto ndim = r.pod<std::uint8_t>();
    std::vector<std::int64_t> dims(ndim);
    for (auto& d : dims) d = r.pod<std::int64_t>();
    auto t = torch::empty(dims, torch::TensorOptions().dtype(type));
    std::memcpy(t.data_ptr(), r.take(static_cast<std::size_t>(t.nbytes())),
                static_cast<std::size_t>(t.nbytes()));
    data.tensors.emplace_back(std::move(name), std::move(t));
  }
  if (!r.done()) throw IntegrityError("checkpoint " + path.string() + " has trailing bytes");
  return data;
}

}  // namespace unisyn
