#include "unisyn/volume.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "unisyn/errors.hpp"

namespace unisyn {

namespace fs = std::filesystem;

std::span<float> MultiModalVolume::modality(int m) {
  const auto n = voxels_per_modality();
  return {voxels.data() + m * n, static_cast<std::size_t>(n)};
}

std::span<const float> MultiModalVolume::modality(int m) const {
  const auto n = voxels_per_modality();
  return {voxels.data() + m * n, static_cast<std::size_t>(n)};
}

float& MultiModalVolume::at(int m, std::int64_t d, std::int64_t h, std::int64_t w) {
  return voxels[static_cast<std::size_t>(((m * depth + d) * height + h) * width + w)];
}

float MultiModalVolume::at(int m, std::int64_t d, std::int64_t h, std::int64_t w) const {
  return voxels[static_cast<std::size_t>(((m * depth + d) * height + h) * width + w)];
}

void MultiModalVolume::validate_shape() const {
  if (modality_names.empty() || depth <= 0 || height <= 0 || width <= 0) {
    throw DimensionError("volume '" + subject_id + "' has an empty dimension");
  }
  const auto expected = static_cast<std::size_t>(modalities()) *
                        static_cast<std::size_t>(voxels_per_modality());
  if (voxels.size() != expected) {
    throw DimensionError("volume '" + subject_id + "' holds " + std::to_string(voxels.size()) +
                         " voxels, shape implies " + std::to_string(expected));
  }
}

fs::path header_path(const fs::path& volume_path) {
  auto p = volume_path;
  p += ".hdr";
  return p;
}

namespace {

std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xFF00U) | ((v << 8) & 0xFF0000U) | (v << 24);
}

void swap_if_big_endian(std::vector<float>& data) {
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& f : data) f = std::bit_cast<float>(byteswap32(std::bit_cast<std::uint32_t>(f)));
  }
}

std::map<std::string, std::string> read_header(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open volume header " + path.string());
  std::map<std::string, std::string> fields;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw CorruptFileError("malformed header line in " + path.string());
    auto value = line.substr(colon + 1);
    const auto first = value.find_first_not_of(' ');
    value = first == std::string::npos ? std::string{} : value.substr(first);
    fields[line.substr(0, colon)] = value;
  }
  return fields;
}

const std::string& require(const std::map<std::string, std::string>& fields,
                           const std::string& key, const fs::path& path) {
  auto it = fields.find(key);
  if (it == fields.end()) throw CorruptFileError("header " + path.string() + " lacks '" + key + "'");
  return it->second;
}

}  // namespace

void save_volume(const MultiModalVolume& volume, const fs::path& path) {
  volume.validate_shape();
  for (const auto& name : volume.modality_names) {
    if (name.empty() || name.find_first_of(",\n\r") != std::string::npos) {
      throw ConfigError("modality name '" + name + "' cannot be stored in a volume header");
    }
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());

  std::ofstream hdr(header_path(path), std::ios::trunc);
  if (!hdr) throw IoError("cannot write " + header_path(path).string());
  hdr << "mmv_version: " << kVolumeFormatVersion << '\n'
      << "subject_id: " << volume.subject_id << '\n'
      << "element_type: float32\n"
      << "byte_order: little_endian\n"
      << "dims: " << volume.modalities() << ' ' << volume.depth << ' ' << volume.height << ' '
      << volume.width << '\n'
      << "modalities: ";
  for (std::size_t i = 0; i < volume.modality_names.size(); ++i)
    hdr << (i ? "," : "") << volume.modality_names[i];
  hdr << '\n';
  if (!hdr) throw IoError("failed writing " + header_path(path).string());

  auto payload = volume.voxels;
  swap_if_big_endian(payload);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (!out) throw IoError("failed writing " + path.string());
}

MultiModalVolume load_volume(const fs::path& path) {
  const auto hpath = header_path(path);
  const auto fields = read_header(hpath);

  int version = 0;
  try {
    version = std::stoi(require(fields, "mmv_version", hpath));
  } catch (const std::logic_error&) {
    throw CorruptFileError("bad mmv_version in " + hpath.string());
  }
  if (version != kVolumeFormatVersion) {
    throw UnsupportedFormatError("volume format version " + std::to_string(version) +
                                 " is not supported (" + hpath.string() + ")");
  }
  if (require(fields, "element_type", hpath) != "float32" ||
      require(fields, "byte_order", hpath) != "little_endian") {
    throw UnsupportedFormatError("only little-endian float32 volumes are supported");
  }

  MultiModalVolume v;
  v.subject_id = fields.contains("subject_id") ? fields.at("subject_id") : std::string{};
  std::int64_t m = 0;
  {
    std::istringstream dims(require(fields, "dims", hpath));
    if (!(dims >> m >> v.depth >> v.height >> v.width) || m <= 0 || v.depth <= 0 ||
        v.height <= 0 || v.width <= 0) {
      throw CorruptFileError("bad dims in " + hpath.string());
    }
  }
  {
    std::istringstream names(require(fields, "modalities", hpath));
    std::string name;
    while (std::getline(names, name, ',')) v.modality_names.push_back(name);
  }
  if (static_cast<std::int64_t>(v.modality_names.size()) != m) {
    throw CorruptFileError("header declares " + std::to_string(m) + " modalities but names " +
                           std::to_string(v.modality_names.size()));
  }

  const auto expected_bytes =
      static_cast<std::uintmax_t>(m * v.depth * v.height * v.width) * sizeof(float);
  std::error_code ec;
  const auto actual_bytes = fs::file_size(path, ec);
  if (ec) throw IoError("cannot stat " + path.string() + ": " + ec.message());
  if (actual_bytes != expected_bytes) {
    throw CorruptFileError("payload " + path.string() + " has " + std::to_string(actual_bytes) +
                           " bytes, header implies " + std::to_string(expected_bytes));
  }
  v.voxels.resize(expected_bytes / sizeof(float));
  std::ifstream in(path, std::ios::binary);
  if (!in.read(reinterpret_cast<char*>(v.voxels.data()), static_cast<std::streamsize>(expected_bytes))) {
    throw CorruptFileError("short read on " + path.string());
  }
  swap_if_big_endian(v.voxels);
  return v;
}

}  // namespace unisyn
