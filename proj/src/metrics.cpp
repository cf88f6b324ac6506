#include "unisyn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "unisyn/errors.hpp"

namespace unisyn {

namespace {

template <typename T>
void check_pair(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) throw DimensionError("metric inputs differ in size");
  if (a.empty()) throw DimensionError("metric inputs are empty");
}

template <typename T>
double psnr_impl(std::span<const T> estimate, std::span<const T> reference) {
  check_pair(estimate, reference);
  double peak = -std::numeric_limits<double>::infinity();
  double sq = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double e = estimate[i], r = reference[i];
    peak = std::max({peak, e, r});
    sq += (e - r) * (e - r);
  }
  const double mse = sq / static_cast<double>(estimate.size());
  if (mse == 0.0) return kInfinitePsnr;
  return 10.0 * std::log10(peak * peak / mse);
}

template <typename T>
double ssim_impl(std::span<const T> estimate, std::span<const T> reference, const SsimConstants& k) {
  check_pair(estimate, reference);
  const double n = static_cast<double>(estimate.size());
  double mean_e = 0.0, mean_r = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    mean_e += estimate[i];
    mean_r += reference[i];
  }
  mean_e /= n;
  mean_r /= n;
  double var_e = 0.0, var_r = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double de = estimate[i] - mean_e, dr = reference[i] - mean_r;
    var_e += de * de;
    var_r += dr * dr;
    cov += de * dr;
  }
  var_e /= n;
  var_r /= n;
  cov /= n;
  return ((2.0 * mean_e * mean_r + k.c1) * (2.0 * cov + k.c2)) /
         ((mean_e * mean_e + mean_r * mean_r + k.c1) * (var_e + var_r + k.c2));
}

std::pair<double, double> mean_and_std(const std::vector<double>& values) {
  if (values.empty()) return {std::nan(""), std::nan("")};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

}  // namespace

double psnr(std::span<const float> e, std::span<const float> r) { return psnr_impl(e, r); }
double psnr(std::span<const double> e, std::span<const double> r) { return psnr_impl(e, r); }

SsimConstants SsimConstants::for_range(double dynamic_range) {
  if (!(dynamic_range > 0.0)) dynamic_range = 1.0;
  return {std::pow(0.01 * dynamic_range, 2), std::pow(0.03 * dynamic_range, 2)};
}

double ssim(std::span<const float> e, std::span<const float> r, const SsimConstants& k) {
  return ssim_impl(e, r, k);
}
double ssim(std::span<const double> e, std::span<const double> r, const SsimConstants& k) {
  return ssim_impl(e, r, k);
}

double ssim(std::span<const float> e, std::span<const float> r) {
  check_pair(e, r);
  const auto [emin, emax] = std::minmax_element(e.begin(), e.end());
  const auto [rmin, rmax] = std::minmax_element(r.begin(), r.end());
  const double range = static_cast<double>(std::max(*emax, *rmax)) - std::min(*emin, *rmin);
  return ssim_impl(e, r, SsimConstants::for_range(range));
}

double two_sample_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw DimensionError("t-test needs at least 2 samples per group");
  const auto [ma, sa] = mean_and_std({a.begin(), a.end()});
  const auto [mb, sb] = mean_and_std({b.begin(), b.end()});
  const double va = sa * sa / static_cast<double>(a.size());
  const double vb = sb * sb / static_cast<double>(b.size());
  const double se2 = va + vb;
  if (se2 == 0.0) {
    if (ma == mb) return 1.0;
    throw MisuseError("t-test on zero-variance samples with different means");
  }
  const double t = (ma - mb) / std::sqrt(se2);
  if (t == 0.0) return 1.0;
  const double df = se2 * se2 / (va * va / static_cast<double>(a.size() - 1) +
                                 vb * vb / static_cast<double>(b.size() - 1));
  const boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(dist, -std::abs(t)));
}

double MetricsRow::mean_psnr() const {
  double sum = 0.0;
  int n = 0;
  for (const auto& c : cells)
    if (c && c->n > 0) sum += c->psnr_mean, ++n;
  return n ? sum / n : std::nan("");
}

double MetricsRow::mean_ssim() const {
  double sum = 0.0;
  int n = 0;
  for (const auto& c : cells)
    if (c) sum += c->ssim_mean, ++n;
  return n ? sum / n : std::nan("");
}

std::string MetricsReport::to_csv() const {
  std::ostringstream out;
  out << "ac,modality,psnr_mean,psnr_std,ssim_mean,ssim_std,n\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.cells.size(); ++i) {
      if (!row.cells[i]) continue;
      const auto& c = *row.cells[i];
      out << row.condition.to_string() << ',' << modality_names[i] << ',' << fmt("%.6f", c.psnr_mean)
          << ',' << fmt("%.6f", c.psnr_std) << ',' << fmt("%.6f", c.ssim_mean) << ','
          << fmt("%.6f", c.ssim_std) << ',' << c.n << '\n';
    }
  }
  return out.str();
}

std::string MetricsReport::to_table() const {
  constexpr int kFlag = 6;
  constexpr int kCell = 30;
  auto pad = [](std::string text, int width) {
    if (static_cast<int>(text.size()) < width) text.append(static_cast<std::size_t>(width) - text.size(), ' ');
    return text;
  };
  std::ostringstream out;
  out << "# checkpoint " << checkpoint_hash << "  dataset " << dataset_id << "  (x = available, . = missing)\n";
  for (const auto& name : modality_names) out << pad(name, kFlag);
  out << "|";
  for (const auto& name : modality_names) out << ' ' << pad(name, kCell);
  out << "| average PSNR, SSIM\n";
  for (const auto& row : rows) {
    for (int i = 0; i < row.condition.size(); ++i) out << pad(row.condition.available(i) ? "x" : ".", kFlag);
    out << '|';
    for (const auto& cell : row.cells) {
      std::string text = "-";
      if (cell) {
        text = fmt("%.2f", cell->psnr_mean) + " (" + fmt("%.2f", cell->psnr_std) + "), " +
               fmt("%.3f", cell->ssim_mean) + " (" + fmt("%.3f", cell->ssim_std) + ")";
      }
      out << ' ' << pad(text, kCell);
    }
    out << "| " << fmt("%.2f", row.mean_psnr()) << ", " << fmt("%.3f", row.mean_ssim()) << '\n';
  }
  return out.str();
}

MetricsReport parse_report_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line.rfind("ac,modality,", 0) != 0) {
    throw CorruptFileError("report CSV lacks its header");
  }
  struct Entry {
    std::string ac, modality;
    CellStats stats;
  };
  std::vector<Entry> entries;
  std::vector<std::string> names;
  int modalities = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream fields(line);
    for (std::string item; std::getline(fields, item, ',');) f.push_back(item);
    if (f.size() != 7) throw CorruptFileError("report CSV row has " + std::to_string(f.size()) + " fields");
    Entry e;
    e.ac = f[0];
    e.modality = f[1];
    try {
      e.stats = {std::stod(f[2]), std::stod(f[3]), std::stod(f[4]), std::stod(f[5]), std::stoi(f[6]), 0};
    } catch (const std::exception&) {
      throw CorruptFileError("report CSV row has a non-numeric field: " + line);
    }
    modalities = static_cast<int>(e.ac.size());
    const auto ac = AvailabilityCondition::parse(e.ac);
    const auto missing = ac.missing_indices();
    const auto pos = std::count_if(entries.begin(), entries.end(), [&](const Entry& o) { return o.ac == e.ac; });
    if (pos >= static_cast<long>(missing.size())) throw CorruptFileError("too many cells for " + e.ac);
    const auto idx = static_cast<std::size_t>(missing[static_cast<std::size_t>(pos)]);
    if (names.size() < static_cast<std::size_t>(modalities)) names.resize(static_cast<std::size_t>(modalities));
    names[idx] = e.modality;
    entries.push_back(std::move(e));
  }
  MetricsReport report;
  report.modality_names = names;
  for (const auto& e : entries) {
    if (report.rows.empty() || report.rows.back().condition.to_string() != e.ac) {
      report.rows.push_back({AvailabilityCondition::parse(e.ac),
                             std::vector<std::optional<CellStats>>(static_cast<std::size_t>(modalities))});
    }
    auto& row = report.rows.back();
    for (int i : row.condition.missing_indices()) {
      if (!row.cells[i]) {
        row.cells[i] = e.stats;
        break;
      }
    }
  }
  for (std::size_t i = 0; i < report.modality_names.size(); ++i)
    if (report.modality_names[i].empty()) report.modality_names[i] = "m" + std::to_string(i);
  return report;
}

MetricsReport evaluate_matrix(const SynthesisFn& synthesize, const SliceDataset& test_set,
                              const EvaluationOptions& options) {
  if (test_set.size() == 0) throw ConfigError("test split is empty");
  const int M = test_set.modalities();
  const auto conditions = options.conditions.empty() ? all_valid_conditions(M) : options.conditions;
  const int subjects = static_cast<int>(test_set.subject_ids.size());

  std::vector<torch::Tensor> subject_volumes;
  for (int s = 0; s < subjects; ++s) subject_volumes.push_back(test_set.subject_slices(s));

  MetricsReport report;
  report.modality_names = test_set.modality_names;
  for (const auto& ac : conditions) {
    ac.require_training_valid();
    if (ac.size() != M) throw DimensionError("condition size differs from dataset modality count");
    std::vector<std::vector<double>> psnrs(static_cast<std::size_t>(M)), ssims(static_cast<std::size_t>(M));
    std::vector<int> infinite(static_cast<std::size_t>(M), 0);
    for (const auto& volume : subject_volumes) {
      std::vector<torch::Tensor> outputs;
      for (std::int64_t start = 0; start < volume.size(0); start += options.batch_size) {
        const auto chunk = volume.narrow(0, start, std::min(options.batch_size, volume.size(0) - start));
        const auto batch = zero_impute(chunk, ac);
        outputs.push_back(synthesize(batch.pixels, ac).detach().to(torch::kFloat32).contiguous());
      }
      const auto output = torch::cat(outputs, 0);
      for (int i : ac.missing_indices()) {
        const auto est = output.select(1, i).contiguous();
        const auto ref = volume.select(1, i).to(torch::kFloat32).contiguous();
        const std::span<const float> e(est.data_ptr<float>(), static_cast<std::size_t>(est.numel()));
        const std::span<const float> r(ref.data_ptr<float>(), static_cast<std::size_t>(ref.numel()));
        const double p = psnr(e, r);
        if (std::isinf(p)) {
          ++infinite[i];
        } else {
          psnrs[i].push_back(p);
        }
        ssims[i].push_back(ssim(e, r));
      }
    }
    MetricsRow row{ac, std::vector<std::optional<CellStats>>(static_cast<std::size_t>(M))};
    for (int i : ac.missing_indices()) {
      CellStats c;
      std::tie(c.psnr_mean, c.psnr_std) = mean_and_std(psnrs[i]);
      std::tie(c.ssim_mean, c.ssim_std) = mean_and_std(ssims[i]);
      c.n = static_cast<int>(psnrs[i].size());
      c.infinite_psnr = infinite[i];
      row.cells[i] = c;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

MetricsReport evaluate_matrix(Generator& generator, const SliceDataset& test_set,
                              const EvaluationOptions& options) {
  generator->eval();
  const auto dtype = generator->parameters().front().scalar_type();
  return evaluate_matrix(
      [&](const torch::Tensor& pixels, const AvailabilityCondition& ac) {
        torch::NoGradGuard no_grad;
        return generator->forward(pixels.to(dtype), ac);
      },
      test_set, options);
}

}  // namespace unisyn
