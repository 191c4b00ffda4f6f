#include "elemgrasp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "elemgrasp/errors.hpp"

namespace elemgrasp {

namespace {

using json = nlohmann::ordered_json;

constexpr std::array<std::pair<FailureKind, std::string_view>, 5> kFailureNames = {{
    {FailureKind::kSuccess, "success"},
    {FailureKind::kNoElements, "no-elements"},
    {FailureKind::kAngleFail, "angle-fail"},
    {FailureKind::kJaccardFail, "jaccard-fail"},
    {FailureKind::kBoth, "both"},
}};

void check_thresholds(const std::vector<double>& t, double primary) {
  if (t.empty()) throw Error(ErrorCode::kConfig, "at least one Jaccard threshold is required");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] > 0.0 && t[i] < 1.0)) throw Error(ErrorCode::kConfig, "Jaccard thresholds must lie in (0, 1)");
    if (i > 0 && !(t[i] > t[i - 1])) throw Error(ErrorCode::kConfig, "Jaccard thresholds must be strictly increasing");
  }
  if (std::find(t.begin(), t.end(), primary) == t.end()) {
    throw Error(ErrorCode::kConfig, "the primary threshold must be one of the thresholds");
  }
}

void add(Tally& t, const SampleOutcome& o) {
  if (t.successes.empty()) t.successes.assign(o.success.size(), 0);
  ++t.attempts;
  t.jaccard_sum += o.jaccard;
  for (std::size_t i = 0; i < o.success.size(); ++i) t.successes[i] += o.success[i] ? 1 : 0;
}

// NaN-aware equality for DSC cells, which use NaN for absent classes.
bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

bool same(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](double x, double y) { return same(x, y); });
}

bool same(const DscTable& a, const DscTable& b) {
  if (!same(a.mdcs, b.mdcs) || !same(a.mean, b.mean) || a.ground_truth_counts != b.ground_truth_counts) return false;
  for (int c = 0; c < kNumElementClasses; ++c) {
    if (!same(a.per_class[c], b.per_class[c])) return false;
  }
  return true;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double from_number_or_null(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json tally_json(const Tally& t) {
  return {{"attempts", t.attempts}, {"successes", t.successes}, {"jaccard_sum", t.jaccard_sum}};
}

Tally tally_from(const json& j) {
  Tally t;
  t.attempts = j.at("attempts").get<int>();
  t.successes = j.at("successes").get<std::vector<int>>();
  t.jaccard_sum = j.at("jaccard_sum").get<double>();
  return t;
}

json rect_json(const GraspRectangle& g) {
  return {{"cx", g.cx()}, {"cy", g.cy()}, {"theta", g.theta_deg()}, {"width", g.width_px()}, {"height", g.height_px()}};
}

GraspRectangle rect_from(const json& j) {
  return GraspRectangle(j.at("cx").get<double>(), j.at("cy").get<double>(), j.at("theta").get<double>(),
                        j.at("width").get<double>(), j.at("height").get<double>());
}

json dsc_json(const DscTable& d) {
  json rows = json::object();
  for (ElementClass c : kAllElementClasses) {
    json row = json::array();
    for (double v : d.per_class[static_cast<int>(c)]) row.push_back(number_or_null(v));
    rows[std::string(class_name(c))] = {{"ground_truth", d.ground_truth_counts[static_cast<int>(c)]}, {"dsc", row}};
  }
  json mean = json::array();
  for (double v : d.mean) mean.push_back(number_or_null(v));
  return {{"mdcs", d.mdcs}, {"classes", rows}, {"mean", mean}};
}

DscTable dsc_from(const json& j) {
  DscTable d;
  d.mdcs = j.at("mdcs").get<std::vector<double>>();
  for (const auto& [name, row] : j.at("classes").items()) {
    const int c = static_cast<int>(class_from_name(name));
    d.ground_truth_counts[c] = row.at("ground_truth").get<int>();
    for (const auto& v : row.at("dsc")) d.per_class[c].push_back(from_number_or_null(v));
  }
  for (const auto& v : j.at("mean")) d.mean.push_back(from_number_or_null(v));
  return d;
}

std::string fmt(double v, int precision = 2) {
  if (!std::isfinite(v)) return "";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

// Objects in table order: seen objects first, then unseen, by name.
std::vector<std::string> ordered_objects(const EvalReport& r) {
  std::vector<std::string> names;
  for (const auto& [name, _] : r.per_object) names.push_back(name);
  std::stable_sort(names.begin(), names.end(), [&](const std::string& a, const std::string& b) {
    return r.object_split.at(a) < r.object_split.at(b);
  });
  return names;
}

std::string success_table(const EvalReport& r) {
  const std::size_t p = r.primary_index();
  std::ostringstream os;
  os << "object,split,attempts,successes,success_rate,mean_jaccard\n";
  for (const auto& name : ordered_objects(r)) {
    const Tally& t = r.per_object.at(name);
    os << name << ',' << seen_split_name(r.object_split.at(name)) << ',' << t.attempts << ',' << t.successes[p] << ','
       << fmt(t.rate(p)) << ',' << fmt(t.mean_jaccard()) << '\n';
  }
  const std::array<std::pair<std::string_view, const Tally*>, 3> rows = {
      {{"seen", &r.seen}, {"unseen", &r.unseen}, {"overall", &r.overall}}};
  for (const auto& [label, t] : rows) {
    const int s = t->successes.empty() ? 0 : t->successes[p];
    os << label << ",," << t->attempts << ',' << s << ',' << fmt(t->rate(p)) << ',' << fmt(t->mean_jaccard()) << '\n';
  }
  return os.str();
}

// One column per threshold, one row of overall rates.
std::string sweep_table(const EvalReport& r) {
  std::ostringstream os;
  for (std::size_t i = 0; i < r.thresholds.size(); ++i) os << (i ? "," : "") << fmt(r.thresholds[i]);
  os << '\n';
  for (std::size_t i = 0; i < r.thresholds.size(); ++i) os << (i ? "," : "") << fmt(r.overall.rate(i));
  os << '\n';
  return os.str();
}

std::string sweep_split_table(const EvalReport& r) {
  std::ostringstream os;
  os << "split";
  for (double t : r.thresholds) os << ',' << fmt(t);
  os << '\n';
  const std::array<std::pair<std::string_view, const Tally*>, 3> rows = {
      {{"seen", &r.seen}, {"unseen", &r.unseen}, {"overall", &r.overall}}};
  for (const auto& [label, t] : rows) {
    os << label;
    for (std::size_t i = 0; i < r.thresholds.size(); ++i) os << ',' << fmt(t->rate(i));
    os << '\n';
  }
  return os.str();
}

std::string dsc_table(const DscTable& d) {
  std::ostringstream os;
  os << "class";
  for (double m : d.mdcs) os << ',' << fmt(m);
  os << '\n';
  for (ElementClass c : kAllElementClasses) {
    os << class_name(c);
    for (double v : d.per_class[static_cast<int>(c)]) os << ',' << fmt(v);
    os << '\n';
  }
  os << "mean";
  for (double v : d.mean) os << ',' << fmt(v);
  os << '\n';
  return os.str();
}

std::string failure_table(const EvalReport& r) {
  std::ostringstream os;
  os << "failure,count\n";
  for (const auto& [kind, name] : kFailureNames) {
    const auto it = r.failures.find(std::string(name));
    os << name << ',' << (it == r.failures.end() ? 0 : it->second) << '\n';
  }
  return os.str();
}

const cv::Scalar kInk(40, 40, 40);
const cv::Scalar kGrid(220, 220, 220);

struct Frame {
  cv::Rect area;
  cv::Point at(double fx, double fy) const {
    return {area.x + static_cast<int>(std::lround(fx * area.width)),
            area.y + area.height - static_cast<int>(std::lround(fy * area.height))};
  }
};

Frame draw_axes(cv::Mat& img, const std::string& title) {
  Frame f{cv::Rect(60, 40, img.cols - 90, img.rows - 90)};
  cv::putText(img, title, {60, 25}, cv::FONT_HERSHEY_SIMPLEX, 0.55, kInk, 1, cv::LINE_AA);
  for (int pct = 0; pct <= 100; pct += 20) {
    const cv::Point a = f.at(0, pct / 100.0);
    cv::line(img, a, f.at(1, pct / 100.0), kGrid, 1);
    cv::putText(img, std::to_string(pct), {a.x - 35, a.y + 5}, cv::FONT_HERSHEY_SIMPLEX, 0.4, kInk, 1, cv::LINE_AA);
  }
  cv::rectangle(img, f.area, kInk, 1);
  return f;
}

cv::Mat sweep_plot(const EvalReport& r) {
  cv::Mat img(400, 560, CV_8UC3, cv::Scalar(255, 255, 255));
  Frame f = draw_axes(img, "success rate (%) vs Jaccard threshold");
  const std::size_t n = r.thresholds.size();
  auto fx = [&](std::size_t i) { return n == 1 ? 0.5 : 0.05 + 0.9 * static_cast<double>(i) / static_cast<double>(n - 1); };
  for (std::size_t i = 0; i < n; ++i) {
    const cv::Point a = f.at(fx(i), 0);
    cv::putText(img, fmt(r.thresholds[i]), {a.x - 14, a.y + 18}, cv::FONT_HERSHEY_SIMPLEX, 0.4, kInk, 1, cv::LINE_AA);
  }
  const std::array<std::tuple<std::string_view, const Tally*, cv::Scalar>, 3> series = {{
      {"seen", &r.seen, cv::Scalar(200, 120, 30)},
      {"unseen", &r.unseen, cv::Scalar(40, 140, 230)},
      {"overall", &r.overall, cv::Scalar(40, 40, 40)},
  }};
  int legend_y = 60;
  for (const auto& [label, t, color] : series) {
    if (t->attempts == 0) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const cv::Point p = f.at(fx(i), t->rate(i) / 100.0);
      cv::circle(img, p, 3, color, cv::FILLED, cv::LINE_AA);
      if (i > 0) cv::line(img, f.at(fx(i - 1), t->rate(i - 1) / 100.0), p, color, 2, cv::LINE_AA);
    }
    cv::putText(img, std::string(label), {f.area.x + f.area.width - 80, legend_y}, cv::FONT_HERSHEY_SIMPLEX, 0.45, color,
                1, cv::LINE_AA);
    legend_y += 18;
  }
  return img;
}

cv::Mat object_plot(const EvalReport& r) {
  const auto names = ordered_objects(r);
  const int width = std::max(400, 90 + 60 * static_cast<int>(names.size()));
  cv::Mat img(400, width, CV_8UC3, cv::Scalar(255, 255, 255));
  Frame f = draw_axes(img, "success rate (%) per object");
  const std::size_t p = r.primary_index();
  const double slot = 1.0 / static_cast<double>(std::max<std::size_t>(1, names.size()));
  for (std::size_t i = 0; i < names.size(); ++i) {
    const Tally& t = r.per_object.at(names[i]);
    const bool seen = r.object_split.at(names[i]) == SeenSplit::kTrainObject;
    const cv::Scalar color = seen ? cv::Scalar(200, 120, 30) : cv::Scalar(40, 140, 230);
    const double x0 = (static_cast<double>(i) + 0.2) * slot;
    const double x1 = (static_cast<double>(i) + 0.8) * slot;
    cv::rectangle(img, f.at(x0, t.rate(p) / 100.0), f.at(x1, 0), color, cv::FILLED);
    const cv::Point label = f.at(x0, 0);
    cv::putText(img, names[i], {label.x, label.y + 18}, cv::FONT_HERSHEY_SIMPLEX, 0.35, kInk, 1, cv::LINE_AA);
  }
  return img;
}

}  // namespace

std::string_view failure_kind_name(FailureKind k) {
  for (const auto& [kind, name] : kFailureNames) {
    if (kind == k) return name;
  }
  return "unknown";
}

FailureKind failure_kind_from_name(std::string_view name) {
  for (const auto& [kind, n] : kFailureNames) {
    if (n == name) return kind;
  }
  throw Error(ErrorCode::kSchemaViolation, "unknown failure kind '" + std::string(name) + "'");
}

double Tally::rate(std::size_t i) const {
  if (attempts == 0 || i >= successes.size()) return 0.0;
  return 100.0 * successes[i] / attempts;
}

double Tally::mean_jaccard() const { return attempts == 0 ? 0.0 : 100.0 * jaccard_sum / attempts; }

std::size_t EvalReport::primary_index() const {
  const auto it = std::find(thresholds.begin(), thresholds.end(), primary_threshold);
  if (it == thresholds.end()) throw Error(ErrorCode::kConfig, "primary threshold missing from thresholds");
  return static_cast<std::size_t>(it - thresholds.begin());
}

bool operator==(const EvalReport& a, const EvalReport& b) {
  if (a.dsc.has_value() != b.dsc.has_value()) return false;
  if (a.dsc && !same(*a.dsc, *b.dsc)) return false;
  return a.schema_version == b.schema_version && a.thresholds == b.thresholds &&
         a.primary_threshold == b.primary_threshold && a.angle_threshold_deg == b.angle_threshold_deg &&
         a.mdc == b.mdc && a.per_object == b.per_object && a.object_split == b.object_split && a.seen == b.seen &&
         a.unseen == b.unseen && a.overall == b.overall && a.failures == b.failures && a.samples == b.samples &&
         a.metadata == b.metadata;
}

EvalReport evaluate_pipeline(const DetectionSource& detections, const GraspSource& grasps,
                             const std::vector<Sample>& samples, const PipelineOptions& options) {
  if (samples.empty()) throw Error(ErrorCode::kEmptySplit, "evaluation split is empty");
  check_thresholds(options.thresholds, options.primary_threshold);

  EvalReport r;
  r.thresholds = options.thresholds;
  r.primary_threshold = options.primary_threshold;
  r.angle_threshold_deg = options.angle_threshold_deg;
  r.mdc = options.mdc;
  const std::size_t p = r.primary_index();
  for (const auto& [kind, name] : kFailureNames) r.failures[std::string(name)] = 0;

  for (const Sample& s : samples) {
    SampleOutcome o;
    o.id = s.id;
    o.object_name = s.object_name;
    o.split = s.seen_split;
    o.success.assign(r.thresholds.size(), false);

    const std::vector<Detection> selected = select_detections(detections(s), options.mdc);
    o.detections = static_cast<int>(selected.size());
    if (!selected.empty()) {
      try {
        o.predicted = grasps(s, selected);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNoElementsDetected) throw;
      }
    }

    if (!o.predicted) {
      o.failure = FailureKind::kNoElements;
    } else {
      o.jaccard = jaccard(s.grasp, *o.predicted);
      o.angle_diff = angle_diff(s.grasp.theta_deg(), o.predicted->theta_deg());
      const bool angle_ok = o.angle_diff < r.angle_threshold_deg;
      for (std::size_t i = 0; i < r.thresholds.size(); ++i) {
        o.success[i] = meets_criteria(o.jaccard, o.angle_diff, {r.thresholds[i], r.angle_threshold_deg});
      }
      const bool jaccard_ok = o.jaccard > r.primary_threshold;
      o.failure = angle_ok && jaccard_ok ? FailureKind::kSuccess
                  : angle_ok            ? FailureKind::kJaccardFail
                  : jaccard_ok          ? FailureKind::kAngleFail
                                        : FailureKind::kBoth;
      if ((o.failure == FailureKind::kSuccess) != o.success[p]) {
        throw Error(ErrorCode::kConfig, "failure taxonomy disagrees with the success criterion");
      }
    }

    ++r.failures[std::string(failure_kind_name(o.failure))];
    add(r.per_object[o.object_name], o);
    r.object_split[o.object_name] = o.split;
    add(o.split == SeenSplit::kTrainObject ? r.seen : r.unseen, o);
    add(r.overall, o);
    r.samples.push_back(std::move(o));
  }
  for (Tally* t : {&r.seen, &r.unseen}) {
    if (t->successes.empty()) t->successes.assign(r.thresholds.size(), 0);
  }

  const auto problems = report_problems(r);
  if (!problems.empty()) throw Error(ErrorCode::kConfig, "report invariant violated: " + problems.front());
  return r;
}

std::vector<std::string> report_problems(const EvalReport& r) {
  std::vector<std::string> out;
  auto check_tally = [&](const std::string& label, const Tally& t) {
    if (t.successes.size() != r.thresholds.size()) out.push_back(label + ": wrong number of sweep entries");
    for (std::size_t i = 0; i < t.successes.size(); ++i) {
      const double rate = t.rate(i);
      if (!(rate >= 0.0 && rate <= 100.0)) out.push_back(label + ": rate outside [0, 100]");
      if (i > 0 && t.successes[i] > t.successes[i - 1]) out.push_back(label + ": sweep is not non-increasing");
    }
    if (t.mean_jaccard() < 0.0 || t.mean_jaccard() > 100.0) out.push_back(label + ": mean Jaccard outside [0, 100]");
  };
  check_tally("overall", r.overall);
  check_tally("seen", r.seen);
  check_tally("unseen", r.unseen);
  for (const auto& [name, t] : r.per_object) check_tally(name, t);

  if (r.seen.attempts + r.unseen.attempts != r.overall.attempts) out.push_back("seen + unseen attempts != overall");
  for (std::size_t i = 0; i < r.overall.successes.size() && i < r.seen.successes.size() && i < r.unseen.successes.size();
       ++i) {
    if (r.seen.successes[i] + r.unseen.successes[i] != r.overall.successes[i]) {
      out.push_back("seen + unseen successes != overall");
      break;
    }
  }
  int object_attempts = 0;
  for (const auto& [_, t] : r.per_object) object_attempts += t.attempts;
  if (object_attempts != r.overall.attempts) out.push_back("per-object attempts do not sum to the split size");
  if (static_cast<int>(r.samples.size()) != r.overall.attempts) out.push_back("sample count != attempts");
  int failure_total = 0;
  for (const auto& [_, n] : r.failures) failure_total += n;
  if (failure_total != r.overall.attempts) out.push_back("failure taxonomy does not cover every attempt");
  return out;
}

json report_to_json(const EvalReport& r) {
  const std::size_t p = r.primary_index();
  json objects = json::object();
  for (const auto& name : ordered_objects(r)) {
    const Tally& t = r.per_object.at(name);
    json o = tally_json(t);
    o["split"] = seen_split_name(r.object_split.at(name));
    o["success_rate"] = t.rate(p);
    o["mean_jaccard"] = t.mean_jaccard();
    objects[name] = o;
  }
  auto split_json = [&](const Tally& t) {
    json o = tally_json(t);
    std::vector<double> rates;
    for (std::size_t i = 0; i < r.thresholds.size(); ++i) rates.push_back(t.rate(i));
    o["success_rate"] = t.rate(p);
    o["sweep"] = rates;
    o["mean_jaccard"] = t.mean_jaccard();
    return o;
  };
  json samples = json::array();
  for (const auto& s : r.samples) {
    samples.push_back({{"id", s.id},
                       {"object", s.object_name},
                       {"split", seen_split_name(s.split)},
                       {"detections", s.detections},
                       {"predicted", s.predicted ? rect_json(*s.predicted) : json(nullptr)},
                       {"jaccard", s.jaccard},
                       {"angle_diff", s.angle_diff},
                       {"success", s.success},
                       {"failure", failure_kind_name(s.failure)}});
  }
  json j = {{"schema_version", r.schema_version},
            {"thresholds", r.thresholds},
            {"primary_threshold", r.primary_threshold},
            {"angle_threshold_deg", r.angle_threshold_deg},
            {"mdc", r.mdc},
            {"metadata", r.metadata},
            {"splits", {{"seen", split_json(r.seen)}, {"unseen", split_json(r.unseen)}, {"overall", split_json(r.overall)}}},
            {"objects", objects},
            {"failures", r.failures},
            {"dsc", r.dsc ? dsc_json(*r.dsc) : json(nullptr)},
            {"samples", samples}};
  return j;
}

EvalReport report_from_json(const json& j) {
  try {
    EvalReport r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != kReportSchemaVersion) {
      throw Error(ErrorCode::kSchemaViolation, "unsupported report schema version " + std::to_string(r.schema_version));
    }
    r.thresholds = j.at("thresholds").get<std::vector<double>>();
    r.primary_threshold = j.at("primary_threshold").get<double>();
    r.angle_threshold_deg = j.at("angle_threshold_deg").get<double>();
    r.mdc = j.at("mdc").get<double>();
    r.metadata = j.at("metadata");
    const json& splits = j.at("splits");
    r.seen = tally_from(splits.at("seen"));
    r.unseen = tally_from(splits.at("unseen"));
    r.overall = tally_from(splits.at("overall"));
    for (const auto& [name, o] : j.at("objects").items()) {
      r.per_object[name] = tally_from(o);
      r.object_split[name] = seen_split_from_name(o.at("split").get<std::string>());
    }
    for (const auto& [name, n] : j.at("failures").items()) {
      failure_kind_from_name(name);
      r.failures[name] = n.get<int>();
    }
    if (!j.at("dsc").is_null()) r.dsc = dsc_from(j.at("dsc"));
    for (const auto& s : j.at("samples")) {
      SampleOutcome o;
      o.id = s.at("id").get<std::string>();
      o.object_name = s.at("object").get<std::string>();
      o.split = seen_split_from_name(s.at("split").get<std::string>());
      o.detections = s.at("detections").get<int>();
      if (!s.at("predicted").is_null()) o.predicted = rect_from(s.at("predicted"));
      o.jaccard = s.at("jaccard").get<double>();
      o.angle_diff = s.at("angle_diff").get<double>();
      o.success = s.at("success").get<std::vector<bool>>();
      o.failure = failure_kind_from_name(s.at("failure").get<std::string>());
      r.samples.push_back(std::move(o));
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, std::string("malformed report: ") + e.what());
  }
}

std::vector<fs::path> write_report(const EvalReport& r, const fs::path& dir, unsigned formats) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  auto emit = [&](const std::string& name, const std::string& text) {
    write_text(dir / name, text);
    written.push_back(dir / name);
  };
  if (formats & kReportJson) emit("report.json", report_to_json(r).dump(2) + "\n");
  if (formats & kReportTables) {
    emit("table_success.csv", success_table(r));
    emit("table_sweep.csv", sweep_table(r));
    emit("table_sweep_splits.csv", sweep_split_table(r));
    emit("table_failures.csv", failure_table(r));
    if (r.dsc) emit("table_dsc.csv", dsc_table(*r.dsc));
  }
  if (formats & kReportPlots) {
    for (const auto& [name, img] : {std::pair{"plot_sweep.png", sweep_plot(r)}, std::pair{"plot_objects.png", object_plot(r)}}) {
      if (!cv::imwrite((dir / name).string(), img)) throw Error(ErrorCode::kIo, "cannot write " + (dir / name).string());
      written.push_back(dir / name);
    }
  }
  return written;
}

EvalReport read_report(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, path.string() + ": " + e.what());
  }
  return report_from_json(j);
}

DetectionSource oracle_detection_source() {
  return [](const Sample& s) { return ground_truth_detections(s); };
}

GraspSource oracle_grasp_source() {
  return [](const Sample& s, const std::vector<Detection>& d) {
    if (d.empty()) throw Error(ErrorCode::kNoElementsDetected, "no elements detected");
    return s.grasp;
  };
}

}  // namespace elemgrasp
