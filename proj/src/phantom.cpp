#include "unisyn/phantom.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "unisyn/errors.hpp"
#include "unisyn/rng.hpp"

namespace unisyn {

void PhantomSpec::validate() const {
  if (modality_names.size() < 2) throw ConfigError("phantom needs at least 2 modalities");
  if (contrast.empty()) throw ConfigError("phantom contrast table is empty");
  if (contrast.size() != modality_names.size()) {
    throw ConfigError("phantom contrast table has " + std::to_string(contrast.size()) +
                      " rows for " + std::to_string(modality_names.size()) + " modalities");
  }
  for (const auto& row : contrast)
    for (double c : row)
      if (!std::isfinite(c)) throw ConfigError("phantom contrast multipliers must be finite");
  if (!(noise_std >= 0.0)) throw ConfigError("phantom noise std must be >= 0");
  if (depth < 1 || height < 8 || width < 8) throw ConfigError("phantom size too small");
  if (min_blobs < 0 || max_blobs < min_blobs) throw ConfigError("bad phantom blob count range");
}

double PhantomSpec::intensity(int modality, Tissue t) const {
  const auto c = static_cast<std::size_t>(t);
  return contrast.at(static_cast<std::size_t>(modality))[c] * static_cast<double>(c);
}

int PhantomSpec::lesion_contrast_modalities() const {
  int n = 0;
  for (int m = 0; m < modalities(); ++m)
    if (intensity(m, Tissue::kLesion) != intensity(m, Tissue::kBrain)) ++n;
  return n;
}

namespace {

struct Ellipsoid {
  double cz, cy, cx, rz, ry, rx;
  bool contains(double z, double y, double x) const {
    const double dz = (z - cz) / rz, dy = (y - cy) / ry, dx = (x - cx) / rx;
    return dz * dz + dy * dy + dx * dx <= 1.0;
  }
};

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

}  // namespace

TissueMap generate_tissue_map(std::uint64_t seed, const PhantomSpec& spec) {
  spec.validate();
  auto rng = make_stream(seed, 0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };

  const double D = static_cast<double>(spec.depth);
  const double H = static_cast<double>(spec.height);
  const double W = static_cast<double>(spec.width);

  const Ellipsoid head{(D - 1) / 2.0,
                       (H - 1) / 2.0 + between(-0.04, 0.04) * H,
                       (W - 1) / 2.0 + between(-0.04, 0.04) * W,
                       std::max(D * between(0.9, 1.4), 1.0),
                       H * between(0.33, 0.42),
                       W * between(0.28, 0.38)};

  // Blobs are placed relative to the head so they stay inside it.
  auto inner_point = [&](double shrink) {
    const double angle = between(0.0, 2.0 * M_PI);
    const double radius = shrink * std::sqrt(u(rng));
    return std::pair{head.cy + radius * head.ry * std::sin(angle),
                     head.cx + radius * head.rx * std::cos(angle)};
  };

  std::vector<Ellipsoid> ventricles;
  std::uniform_int_distribution<int> blob_count(spec.min_blobs, spec.max_blobs);
  const int n_blobs = blob_count(rng);
  for (int b = 0; b < n_blobs; ++b) {
    auto [cy, cx] = inner_point(0.45);
    ventricles.push_back({head.cz + between(-0.2, 0.2) * D, cy, cx,
                          std::max(D * between(0.5, 1.0), 1.0), H * between(0.05, 0.11),
                          W * between(0.04, 0.09)});
  }
  auto [ly, lx] = inner_point(0.6);
  const double lesion_r = between(0.07, 0.13);
  const Ellipsoid lesion{head.cz + between(-0.2, 0.2) * D, ly, lx,
                         std::max(D * between(0.6, 1.2), 1.0), H * lesion_r,
                         W * lesion_r * between(0.8, 1.25)};

  TissueMap map{spec.depth, spec.height, spec.width, {}};
  map.labels.resize(static_cast<std::size_t>(spec.depth * spec.height * spec.width),
                    Tissue::kBackground);
  for (std::int64_t d = 0; d < spec.depth; ++d) {
    for (std::int64_t h = 0; h < spec.height; ++h) {
      for (std::int64_t w = 0; w < spec.width; ++w) {
        const double z = static_cast<double>(d), y = static_cast<double>(h),
                     x = static_cast<double>(w);
        if (!head.contains(z, y, x)) continue;
        Tissue t = Tissue::kBrain;
        for (const auto& v : ventricles)
          if (v.contains(z, y, x)) t = Tissue::kVentricle;
        if (lesion.contains(z, y, x)) t = Tissue::kLesion;
        map.labels[static_cast<std::size_t>((d * spec.height + h) * spec.width + w)] = t;
      }
    }
  }
  return map;
}

MultiModalVolume render_phantom(const TissueMap& tissue, const PhantomSpec& spec,
                                std::uint64_t noise_seed, std::string subject_id) {
  spec.validate();
  MultiModalVolume v;
  v.modality_names = spec.modality_names;
  v.subject_id = std::move(subject_id);
  v.depth = tissue.depth;
  v.height = tissue.height;
  v.width = tissue.width;
  v.voxels.assign(static_cast<std::size_t>(spec.modalities()) * tissue.labels.size(), 0.0f);

  auto rng = make_stream(noise_seed, 1);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int m = 0; m < spec.modalities(); ++m) {
    auto out = v.modality(m);
    for (std::size_t i = 0; i < tissue.labels.size(); ++i) {
      const Tissue t = tissue.labels[i];
      if (t == Tissue::kBackground) continue;
      double value = spec.intensity(m, t);
      if (spec.noise_std > 0.0) value += spec.noise_std * noise(rng);
      out[i] = static_cast<float>(value);
    }
  }
  return v;
}

std::vector<MultiModalVolume> generate_phantom_dataset(std::uint64_t seed, const PhantomSpec& spec,
                                                       int n_subjects) {
  if (n_subjects < 1) throw ConfigError("phantom dataset needs at least one subject");
  spec.validate();
  std::vector<MultiModalVolume> out;
  out.reserve(static_cast<std::size_t>(n_subjects));
  for (int s = 0; s < n_subjects; ++s) {
    const auto subject_seed = make_stream(seed, static_cast<std::uint64_t>(s) + 1)();
    const auto tissue = generate_tissue_map(subject_seed, spec);
    char id[32];
    std::snprintf(id, sizeof id, "phantom%04d", s);
    out.push_back(render_phantom(tissue, spec, subject_seed, id));
  }
  return out;
}

}  // namespace unisyn
