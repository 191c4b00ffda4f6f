#include "elemgrasp/decomposer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "elemgrasp/errors.hpp"

namespace elemgrasp {

bool detection_before(const Detection& a, const Detection& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  const std::size_t ca = a.mask.count(), cb = b.mask.count();
  if (ca != cb) return ca > cb;
  return static_cast<int>(a.element_class) < static_cast<int>(b.element_class);
}

std::vector<Detection> select_detections(std::vector<Detection> raw, double mdc,
                                         std::size_t max_instances) {
  if (!(mdc > 0.0 && mdc <= 1.0)) throw Error(ErrorCode::kConfig, "mdc must be in (0, 1]");
  std::erase_if(raw, [&](const Detection& d) { return d.confidence < mdc; });
  std::stable_sort(raw.begin(), raw.end(), detection_before);
  if (raw.size() > max_instances) raw.resize(max_instances);
  return raw;
}

std::vector<Detection> ground_truth_detections(const Sample& s) {
  std::vector<Detection> out;
  for (const auto& e : s.elements) out.push_back({e.element_class, e.mask, 1.0});
  std::stable_sort(out.begin(), out.end(), detection_before);
  return out;
}

DecomposerConfig DecomposerConfig::from_config(const KeyValueConfig& cfg) {
  DecomposerConfig out;
  out.epochs = static_cast<int>(cfg.get_int("decomposer.epochs", out.epochs));
  out.learning_rate = cfg.get_double("decomposer.learning_rate", out.learning_rate);
  out.momentum = cfg.get_double("decomposer.momentum", out.momentum);
  out.batch_size = static_cast<int>(cfg.get_int("decomposer.batch_size", out.batch_size));
  out.mdc_default = cfg.get_double("decomposer.mdc", out.mdc_default);
  out.max_instances = static_cast<std::size_t>(
      cfg.get_int("decomposer.max_instances", static_cast<long long>(out.max_instances)));
  out.min_instance_area = static_cast<int>(cfg.get_int("decomposer.min_instance_area", out.min_instance_area));
  out.seed = static_cast<std::uint64_t>(cfg.get_int("decomposer.seed", static_cast<long long>(out.seed)));
  out.deterministic = cfg.get_bool("decomposer.deterministic", out.deterministic);
  out.validate();
  return out;
}

void DecomposerConfig::validate() const {
  if (epochs < 1 || batch_size < 1) throw Error(ErrorCode::kConfig, "epochs and batch_size must be positive");
  if (!(learning_rate > 0)) throw Error(ErrorCode::kConfig, "learning_rate must be positive");
  if (!(momentum >= 0 && momentum < 1)) throw Error(ErrorCode::kConfig, "momentum must be in [0, 1)");
  if (!(mdc_default > 0 && mdc_default <= 1)) throw Error(ErrorCode::kConfig, "mdc must be in (0, 1]");
  if (max_instances != kMaxInstances) throw Error(ErrorCode::kConfig, "max_instances must be 3");
  if (min_instance_area < 1) throw Error(ErrorCode::kConfig, "min_instance_area must be positive");
}

std::vector<double> matched_dice(const std::vector<ElementInstance>& truth,
                                 const std::vector<Detection>& predicted) {
  struct Pair {
    double dice;
    std::size_t gt;
    std::size_t pred;
  };
  std::vector<Pair> pairs;
  for (std::size_t g = 0; g < truth.size(); ++g) {
    for (std::size_t p = 0; p < predicted.size(); ++p) {
      if (truth[g].element_class != predicted[p].element_class) continue;
      pairs.push_back({dice(truth[g].mask, predicted[p].mask), g, p});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(b.dice, a.gt, a.pred) < std::tie(a.dice, b.gt, b.pred);
  });
  std::vector<double> scores(truth.size(), 0.0);
  std::vector<bool> gt_used(truth.size(), false), pred_used(predicted.size(), false);
  for (const auto& pr : pairs) {
    if (gt_used[pr.gt] || pred_used[pr.pred]) continue;
    gt_used[pr.gt] = pred_used[pr.pred] = true;
    scores[pr.gt] = pr.dice;
  }
  return scores;
}

DscTable evaluate_decomposer(const DetectionSource& source, const std::vector<Sample>& samples,
                             const std::vector<double>& mdc_list) {
  if (mdc_list.empty()) throw Error(ErrorCode::kConfig, "mdc list is empty");
  DscTable table;
  table.mdcs = mdc_list;
  const std::size_t n_mdc = mdc_list.size();
  std::array<std::vector<double>, kNumElementClasses> sums;
  for (auto& s : sums) s.assign(n_mdc, 0.0);
  for (const auto& sample : samples) {
    for (const auto& e : sample.elements) ++table.ground_truth_counts[static_cast<int>(e.element_class)];
    const std::vector<Detection> raw = source(sample);
    for (std::size_t m = 0; m < n_mdc; ++m) {
      const auto kept = select_detections(raw, mdc_list[m]);
      const auto scores = matched_dice(sample.elements, kept);
      for (std::size_t g = 0; g < scores.size(); ++g) {
        sums[static_cast<int>(sample.elements[g].element_class)][m] += scores[g];
      }
    }
  }
  table.mean.assign(n_mdc, 0.0);
  for (int c = 0; c < kNumElementClasses; ++c) {
    table.per_class[c].assign(n_mdc, std::numeric_limits<double>::quiet_NaN());
    if (table.ground_truth_counts[c] == 0) continue;
    for (std::size_t m = 0; m < n_mdc; ++m) {
      table.per_class[c][m] = 100.0 * sums[c][m] / table.ground_truth_counts[c];
    }
  }
  for (std::size_t m = 0; m < n_mdc; ++m) {
    double total = 0.0;
    int classes = 0;
    for (int c = 0; c < kNumElementClasses; ++c) {
      if (table.ground_truth_counts[c] == 0) continue;
      total += table.per_class[c][m];
      ++classes;
    }
    table.mean[m] = classes == 0 ? std::numeric_limits<double>::quiet_NaN() : total / classes;
  }
  return table;
}

}  // namespace elemgrasp
