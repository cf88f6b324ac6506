#include "unisyn/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "unisyn/errors.hpp"

namespace unisyn {

namespace fs = std::filesystem;

void write_dataset(const fs::path& dir, const std::vector<MultiModalVolume>& volumes,
                   const std::vector<std::string>& splits) {
  if (volumes.size() != splits.size()) throw ConfigError("one split label per volume required");
  fs::create_directories(dir / "subjects");
  std::ofstream manifest(dir / "manifest", std::ios::trunc);
  if (!manifest) throw IoError("cannot write " + (dir / "manifest").string());
  for (std::size_t i = 0; i < volumes.size(); ++i) {
    const auto& id = volumes[i].subject_id;
    if (id.empty() || id.find_first_of(" \t\n/\\") != std::string::npos) {
      throw ConfigError("subject id '" + id + "' is not usable as a file name");
    }
    save_volume(volumes[i], dir / "subjects" / (id + ".mmv"));
    manifest << id << ' ' << splits[i] << '\n';
  }
  if (!manifest) throw IoError("failed writing " + (dir / "manifest").string());
}

std::vector<ManifestEntry> read_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest");
  if (!in) throw IoError("cannot open " + (dir / "manifest").string());
  std::vector<ManifestEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::istringstream fields(line);
    ManifestEntry e;
    if (!(fields >> e.subject_id >> e.split)) {
      throw CorruptFileError("malformed manifest line: '" + line + "'");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<MultiModalVolume> load_split(const fs::path& dir, const std::string& split) {
  std::vector<MultiModalVolume> out;
  for (const auto& e : read_manifest(dir)) {
    if (e.split == split) out.push_back(load_volume(dir / "subjects" / (e.subject_id + ".mmv")));
  }
  return out;
}

torch::Tensor SliceDataset::subject_slices(int subject) const {
  std::vector<std::int64_t> idx;
  for (std::size_t i = 0; i < subject_of_slice.size(); ++i)
    if (subject_of_slice[i] == subject) idx.push_back(static_cast<std::int64_t>(i));
  return slices.index_select(0, torch::tensor(idx, torch::kInt64));
}

SliceDataset make_slice_dataset(const std::vector<MultiModalVolume>& volumes,
                                const SlicingOptions& options) {
  if (volumes.empty()) throw ConfigError("no volumes to slice");
  SliceDataset ds;
  ds.modality_names = volumes.front().modality_names;
  std::vector<torch::Tensor> parts;
  for (std::size_t s = 0; s < volumes.size(); ++s) {
    const auto& v = volumes[s];
    if (v.modality_names != ds.modality_names) {
      throw DimensionError("subject '" + v.subject_id + "' has a different modality list");
    }
    const auto prepared = options.normalize ? mean_normalize(v, options.support) : v;
    auto slices = extract_center_slices(prepared, options.slices_per_subject, options.crop_height,
                                        options.crop_width);
    ds.subject_ids.push_back(v.subject_id);
    ds.subject_of_slice.insert(ds.subject_of_slice.end(), static_cast<std::size_t>(slices.size(0)),
                               static_cast<int>(s));
    parts.push_back(std::move(slices));
  }
  ds.slices = torch::cat(parts, 0);
  return ds;
}

std::vector<std::vector<std::int64_t>> epoch_batches(std::int64_t n_items, std::int64_t batch_size,
                                                     Rng& rng) {
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  std::vector<std::int64_t> order(static_cast<std::size_t>(n_items));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::int64_t>> batches;
  for (std::int64_t start = 0; start < n_items; start += batch_size) {
    const auto end = std::min(n_items, start + batch_size);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

}  // namespace unisyn
