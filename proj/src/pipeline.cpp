#include "skyfuse/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "skyfuse/error.hpp"
#include "skyfuse/plane.hpp"

namespace skyfuse {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr const char* kFramesHeader = "t,true_roll,true_pitch,imu_roll,imu_pitch,height,ground_available";

std::size_t reference_frame_count(const FrameSource& source) {
  const double hold = source.config().scenario.trajectory.static_hold;
  std::size_t n = 0;
  while (n < source.size() && source.sample(n).t < hold) ++n;
  return std::max<std::size_t>(n, std::min<std::size_t>(1, source.size()));
}

}  // namespace

GeneratedSource::GeneratedSource(RunConfig config)
    : config_(std::move(config)), gen_(config_.scenario) {}

std::filesystem::path mask_path(const std::filesystem::path& dir, std::size_t k) {
  char name[32];
  std::snprintf(name, sizeof(name), "frame_%06zu.pgm", k);
  return dir / "masks" / name;
}

DirectorySource::DirectorySource(std::filesystem::path dir) : dir_(std::move(dir)) {
  const auto json_path = dir_ / "scenario.json";
  if (!std::filesystem::exists(json_path)) {
    throw Error(ErrorCode::kScenarioError, "missing " + json_path.string());
  }
  try {
    config_ = load_config(json_path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kScenarioError, e.what());
  }

  const auto csv_path = dir_ / "frames.csv";
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kScenarioError, "missing " + csv_path.string());
  std::string line;
  if (!std::getline(in, line) || line != kFramesHeader) {
    throw Error(ErrorCode::kScenarioError, csv_path.string() + ": unexpected header");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    double v[7];
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int i = 0; i < 7; ++i) {
      const auto [ptr, ec] = std::from_chars(p, end, v[i]);
      const bool last = i == 6;
      if (ec != std::errc() || (last ? ptr != end : (ptr == end || *ptr != ','))) {
        throw Error(ErrorCode::kScenarioError,
                    csv_path.string() + ":" + std::to_string(line_no) + ": malformed row");
      }
      p = last ? ptr : ptr + 1;
    }
    FrameSample s;
    s.t = v[0];
    s.truth = {v[1], v[2]};
    s.imu.source = ObservationSource::kImu;
    s.imu.timestamp = v[0];
    s.imu.value = {v[3], v[4]};
    s.imu.variance = config_.scenario.noise.imu_sigma * config_.scenario.noise.imu_sigma;
    s.height = v[5];
    s.ground_available = v[6] != 0.0;
    frames_.push_back(s);
  }
  if (frames_.empty()) throw Error(ErrorCode::kScenarioError, csv_path.string() + ": no frames");
}

FrameSample DirectorySource::sample(std::size_t k) const {
  if (k >= frames_.size()) throw Error(ErrorCode::kScenarioError, "frame index out of range");
  return frames_[k];
}

void DirectorySource::mask_into(std::size_t k, BinaryMask& out) const {
  try {
    out = read_pgm(mask_path(dir_, k));
  } catch (const Error& e) {
    throw Error(ErrorCode::kScenarioError, e.what());
  }
  const auto& intr = config_.scenario.intrinsics;
  if (out.width() != intr.image_width || out.height() != intr.image_height) {
    throw Error(ErrorCode::kScenarioError, mask_path(dir_, k).string() + ": size does not match intrinsics");
  }
}

void write_scenario(const std::filesystem::path& dir, const FrameSource& source) {
  std::filesystem::create_directories(dir / "masks");
  {
    std::ofstream out(dir / "scenario.json", std::ios::binary);
    if (!out) throw Error(ErrorCode::kScenarioError, "cannot write " + (dir / "scenario.json").string());
    out << dump_config(source.config());
  }
  std::ofstream csv(dir / "frames.csv", std::ios::binary);
  if (!csv) throw Error(ErrorCode::kScenarioError, "cannot write " + (dir / "frames.csv").string());
  csv << kFramesHeader << '\n';
  BinaryMask mask;
  for (std::size_t k = 0; k < source.size(); ++k) {
    const FrameSample s = source.sample(k);
    csv << format_number(s.t) << ',' << format_number(s.truth.roll) << ',' << format_number(s.truth.pitch)
        << ',' << format_number(s.imu.value.roll) << ',' << format_number(s.imu.value.pitch) << ','
        << format_number(s.height) << ',' << (s.ground_available ? 1 : 0) << '\n';
    source.mask_into(k, mask);
    write_pgm(mask_path(dir, k), mask);
  }
}

Pipeline::Pipeline(const FrameSource& source, MethodSet methods)
    : cfg_(source.config()), methods_(methods), filter_(cfg_.grid, cfg_.filter) {
  if (source.size() == 0) throw Error(ErrorCode::kScenarioError, "scenario has no frames");
  const auto& intr = cfg_.scenario.intrinsics;
  const std::size_t n_ref = reference_frame_count(source);

  std::vector<BinaryMask> masks(n_ref);
  std::vector<BinaryMask> ground_masks;
  double baro_sum = 0.0;
  for (std::size_t k = 0; k < n_ref; ++k) {
    source.mask_into(k, masks[k]);
    const FrameSample s = source.sample(k);
    baro_sum += s.height;
    if (s.ground_available) ground_masks.push_back(masks[k]);
  }
  baro_reference_ = baro_sum / static_cast<double>(n_ref);
  try {
    track_ = make_skyline_track(masks, intr, cfg_.skyline);
  } catch (const Error& e) {
    throw Error(ErrorCode::kScenarioError, std::string("no skyline in the reference frames: ") + e.what());
  }
  if (!ground_masks.empty() && baro_reference_ >= cfg_.ground.min_height) {
    try {
      ground_reference_ = reference_ground_normal(ground_masks, intr, baro_reference_, cfg_.ground);
    } catch (const Error&) {
      // no usable ground while static: the ground method stays silent
    }
  }
}

FrameRecord Pipeline::step(const FrameSample& sample, const BinaryMask& mask) {
  const auto& intr = cfg_.scenario.intrinsics;
  FrameRecord rec;
  rec.t = sample.t;
  rec.truth = sample.truth;
  rec.estimate.fill(RollPitch{kNaN, kNaN});
  const bool fusion = methods_.contains(Method::kFusion);

  if (methods_.contains(Method::kImu)) rec.at(Method::kImu) = sample.imu.value;

  std::vector<OrientationObservation> vision;
  vision.reserve(2);
  if (methods_.contains(Method::kGround) || fusion) {
    if (ground_reference_ && sample.ground_available) {
      try {
        auto obs = estimate_plane_observation(mask, intr, sample.height, *ground_reference_, cfg_.ground,
                                              sample.t);
        if (obs.ground_range > 0.0) last_range_ = obs.ground_range;
        if (methods_.contains(Method::kGround)) rec.at(Method::kGround) = obs.value;
        vision.push_back(obs);
      } catch (const Error&) {
        // ground not recoverable in this frame
      }
    }
  }
  if (methods_.contains(Method::kSkyline) || fusion) {
    if (last_range_ > 0.0) track_.ground_distance = last_range_;
    try {
      auto obs = update_skyline(track_, mask, sample.height - baro_reference_, intr, sample.t);
      if (methods_.contains(Method::kSkyline)) rec.at(Method::kSkyline) = obs.value;
      vision.insert(vision.begin(), obs);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoBoundary && e.code() != ErrorCode::kDegenerateInput) throw;
    }
  }

  if (fusion) {
    double dt = 0.0;
    RollPitch rate;
    if (previous_) {
      dt = sample.t - previous_->t;
      if (dt > 0.0) {
        rate = {(sample.imu.value.roll - previous_->imu.value.roll) / dt,
                (sample.imu.value.pitch - previous_->imu.value.pitch) / dt};
      }
    }
    filter_.propagate_from_imu(sample.imu, dt, rate);
    for (const auto& obs : vision) filter_.weight_update(obs);
    filter_.refine(vision, sample.t);
    filter_.lifetime_maintenance(sample.t);
    rec.at(Method::kFusion) = filter_.estimate(sample.t).value;
    filter_.resample();
  }
  previous_ = sample;
  return rec;
}

RunReport run_methods(const FrameSource& source, MethodSet methods) {
  if (methods.empty()) throw Error(ErrorCode::kInvalidArgument, "no methods selected");
  Pipeline pipeline(source, methods);
  RunReport report;
  report.methods = methods;
  report.records.reserve(source.size());
  BinaryMask mask;
  for (std::size_t k = 0; k < source.size(); ++k) {
    source.mask_into(k, mask);
    report.records.push_back(pipeline.step(source.sample(k), mask));
  }
  summarize(report);
  return report;
}

}  // namespace skyfuse
