#include "skyfuse/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include "skyfuse/error.hpp"

namespace skyfuse {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(std::string_view field, const std::string& where) {
  if (field == "nan") return kNaN;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error(ErrorCode::kScenarioError, where + ": bad number '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::kImu: return "imu";
    case Method::kSkyline: return "skyline";
    case Method::kGround: return "ground";
    case Method::kFusion: return "fusion";
  }
  return "unknown";
}

bool MethodSet::empty() const noexcept {
  return std::none_of(enabled.begin(), enabled.end(), [](bool b) { return b; });
}

MethodSet MethodSet::parse(std::string_view list) {
  MethodSet set = none();
  for (auto name : split(list, ',')) {
    bool known = false;
    for (Method m : kAllMethods) {
      if (name == to_string(m)) {
        set.insert(m);
        known = true;
      }
    }
    if (!known) throw Error(ErrorCode::kInvalidArgument, "unknown method '" + std::string(name) + "'");
  }
  return set;
}

double rmse(std::span<const double> errors) noexcept {
  double sum = 0.0;
  std::size_t n = 0;
  for (double e : errors) {
    if (std::isnan(e)) continue;
    sum += e * e;
    ++n;
  }
  return n ? std::sqrt(sum / static_cast<double>(n)) : kNaN;
}

bool exceeds_failure_rule(std::size_t bad_frames, std::size_t frame_count) noexcept {
  return 2 * bad_frames > frame_count;
}

void summarize(RunReport& report) {
  const std::size_t n = report.records.size();
  std::vector<double> er(n), ep(n);
  for (Method m : kAllMethods) {
    auto& s = report.summary[static_cast<int>(m)];
    s = MethodSummary{};
    if (!report.methods.contains(m)) continue;
    std::vector<double> frame_errors;
    frame_errors.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      const auto& r = report.records[k];
      er[k] = r.at(m).roll - r.truth.roll;
      ep[k] = r.at(m).pitch - r.truth.pitch;
      const bool bad_r = std::isnan(er[k]) || std::abs(er[k]) > kFailureThreshold;
      const bool bad_p = std::isnan(ep[k]) || std::abs(ep[k]) > kFailureThreshold;
      s.bad_roll += bad_r;
      s.bad_pitch += bad_p;
      if (!std::isnan(er[k]) && !std::isnan(ep[k])) {
        ++s.valid_frames;
        frame_errors.push_back(0.5 * (std::abs(er[k]) + std::abs(ep[k])));
      }
    }
    s.rmse_roll = rmse(er);
    s.rmse_pitch = rmse(ep);
    s.failed = exceeds_failure_rule(s.bad_roll, n) || exceeds_failure_rule(s.bad_pitch, n) ||
               s.valid_frames == 0;
    if (frame_errors.empty()) {
      s.stats = ErrorStats{kNaN, kNaN, kNaN, kNaN};
    } else {
      double sum = 0.0;
      for (double e : frame_errors) sum += e;
      const auto [lo, hi] = std::minmax_element(frame_errors.begin(), frame_errors.end());
      s.stats = ErrorStats{sum / static_cast<double>(frame_errors.size()), 0.0, *lo, *hi};
      s.stats.median = median_of(std::move(frame_errors));
    }
  }
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_report_csv(std::ostream& out, const RunReport& report) {
  out << "t,true_roll,true_pitch";
  for (Method m : kAllMethods) {
    if (report.methods.contains(m)) out << ',' << to_string(m) << "_roll," << to_string(m) << "_pitch";
  }
  out << '\n';
  for (const auto& r : report.records) {
    out << format_number(r.t) << ',' << format_number(r.truth.roll) << ',' << format_number(r.truth.pitch);
    for (Method m : kAllMethods) {
      if (!report.methods.contains(m)) continue;
      out << ',' << format_number(r.at(m).roll) << ',' << format_number(r.at(m).pitch);
    }
    out << '\n';
  }
}

void write_report_csv(const std::filesystem::path& path, const RunReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kScenarioError, "cannot write " + path.string());
  write_report_csv(out, report);
}

void write_summary(std::ostream& out, const RunReport& report) {
  out << "frames=" << report.records.size() << '\n';
  for (Method m : kAllMethods) {
    if (!report.methods.contains(m)) continue;
    const auto& s = report.of(m);
    const std::string p = std::string(to_string(m)) + ".";
    out << p << "failed=" << (s.failed ? 1 : 0) << '\n';
    out << p << "rmse_roll=" << format_number(s.rmse_roll) << '\n';
    out << p << "rmse_pitch=" << format_number(s.rmse_pitch) << '\n';
    out << p << "rmse=" << format_number(s.rmse()) << '\n';
    out << p << "valid_frames=" << s.valid_frames << '\n';
    out << p << "bad_roll=" << s.bad_roll << '\n';
    out << p << "bad_pitch=" << s.bad_pitch << '\n';
    out << p << "mean_error=" << format_number(s.stats.mean) << '\n';
    out << p << "median_error=" << format_number(s.stats.median) << '\n';
  }
}

RunReport read_report_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kScenarioError, "cannot open report " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kScenarioError, path.string() + ": empty report");
  const auto header = split(line, ',');
  if (header.size() < 3 || header[0] != "t" || header[1] != "true_roll" || header[2] != "true_pitch" ||
      header.size() % 2 == 0) {
    throw Error(ErrorCode::kScenarioError, path.string() + ": unexpected report header");
  }
  RunReport report;
  std::vector<Method> columns;
  for (std::size_t i = 3; i < header.size(); i += 2) {
    bool known = false;
    for (Method m : kAllMethods) {
      const std::string base(to_string(m));
      if (header[i] == base + "_roll" && header[i + 1] == base + "_pitch") {
        columns.push_back(m);
        report.methods.insert(m);
        known = true;
      }
    }
    if (!known) throw Error(ErrorCode::kScenarioError, path.string() + ": unknown column " + std::string(header[i]));
  }
  const double nan = kNaN;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const auto f = split(line, ',');
    if (f.size() != header.size()) throw Error(ErrorCode::kScenarioError, where + ": wrong field count");
    FrameRecord r;
    r.estimate.fill(RollPitch{nan, nan});
    r.t = parse_number(f[0], where);
    r.truth = {parse_number(f[1], where), parse_number(f[2], where)};
    for (std::size_t c = 0; c < columns.size(); ++c) {
      r.at(columns[c]) = {parse_number(f[3 + 2 * c], where), parse_number(f[4 + 2 * c], where)};
    }
    report.records.push_back(r);
  }
  summarize(report);
  return report;
}

void write_rmse_table(std::ostream& out, std::span<const NamedReport> reports) {
  out << "report,method,rmse_roll,rmse_pitch,rmse,failed\n";
  for (const auto& nr : reports) {
    for (Method m : kAllMethods) {
      if (!nr.report.methods.contains(m)) continue;
      const auto& s = nr.report.of(m);
      out << nr.name << ',' << to_string(m) << ',';
      if (s.failed) {
        out << kFailedToken << ',' << kFailedToken << ',' << kFailedToken << ",1\n";
      } else {
        out << format_number(s.rmse_roll) << ',' << format_number(s.rmse_pitch) << ','
            << format_number(s.rmse()) << ",0\n";
      }
    }
  }
}

void write_trial_stats(std::ostream& out, std::span<const NamedReport> reports) {
  out << "report,method,mean_error,median_error,min_error,max_error\n";
  std::array<ErrorStats, 4> sum{};
  std::array<std::size_t, 4> count{};
  for (const auto& nr : reports) {
    for (Method m : kAllMethods) {
      if (!nr.report.methods.contains(m)) continue;
      const auto& st = nr.report.of(m).stats;
      out << nr.name << ',' << to_string(m) << ',' << format_number(st.mean) << ','
          << format_number(st.median) << ',' << format_number(st.min) << ',' << format_number(st.max) << '\n';
      if (std::isnan(st.mean)) continue;
      auto& acc = sum[static_cast<int>(m)];
      acc.mean += st.mean;
      acc.median += st.median;
      acc.min += st.min;
      acc.max += st.max;
      ++count[static_cast<int>(m)];
    }
  }
  for (Method m : kAllMethods) {
    const auto i = static_cast<int>(m);
    if (!count[i]) continue;
    const double n = static_cast<double>(count[i]);
    out << "aggregate," << to_string(m) << ',' << format_number(sum[i].mean / n) << ','
        << format_number(sum[i].median / n) << ',' << format_number(sum[i].min / n) << ','
        << format_number(sum[i].max / n) << '\n';
  }
}

}  // namespace skyfuse
