#include "skyfuse/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "skyfuse/error.hpp"

namespace skyfuse {

using nlohmann::json;

namespace {

int line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Reads one JSON object, tracking which keys were consumed so leftovers can
// be reported as unknown fields.
class Section {
 public:
  Section(const json& node, std::string path, std::string_view text, std::string_view origin)
      : node_(node), path_(std::move(path)), text_(text), origin_(origin) {
    if (!node_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const char* key) const { return node_.contains(key); }

  Section child(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    const json& sub = node_.contains(key) ? node_.at(key) : empty;
    return Section(sub, qualified(key), text_, origin_);
  }

  void number(const char* key, double& out, double scale = 1.0) {
    if (!take(key)) return;
    const json& v = node_.at(key);
    if (!v.is_number()) fail(qualified(key), "expected a number");
    out = v.get<double>() * scale;
  }

  void integer(const char* key, int& out) {
    if (!take(key)) return;
    const json& v = node_.at(key);
    if (!v.is_number_integer()) fail(qualified(key), "expected an integer");
    out = v.get<int>();
  }

  void unsigned64(const char* key, std::uint64_t& out) {
    if (!take(key)) return;
    const json& v = node_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      fail(qualified(key), "expected a non-negative integer");
    }
    out = v.get<std::uint64_t>();
  }

  void string(const char* key, std::string& out) {
    if (!take(key)) return;
    const json& v = node_.at(key);
    if (!v.is_string()) fail(qualified(key), "expected a string");
    out = v.get<std::string>();
  }

  void numbers(const char* key, std::array<double, 3>& out, double scale) {
    if (!take(key)) return;
    const json& v = node_.at(key);
    if (!v.is_array() || v.size() != out.size()) fail(qualified(key), "expected an array of 3 numbers");
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!v[i].is_number()) fail(qualified(key), "expected an array of 3 numbers");
      out[i] = v[i].get<double>() * scale;
    }
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!seen_.count(it.key())) fail(qualified(it.key()), "unknown field");
    }
  }

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw Error(ErrorCode::kConfigError, std::string(origin_) + ":" + std::to_string(locate(field)) +
                                             ": field '" + field + "': " + what);
  }

 private:
  bool take(const char* key) {
    seen_.insert(key);
    return node_.contains(key);
  }

  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  // nlohmann/json does not keep source positions, so find the dotted path by
  // searching for each quoted key after the previous one.
  int locate(const std::string& field) const {
    std::size_t pos = 0;
    std::size_t start = 0;
    while (start <= field.size()) {
      const std::size_t dot = field.find('.', start);
      const std::string key = field.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      const std::size_t found = text_.find("\"" + key + "\"", pos);
      if (found == std::string_view::npos) break;
      pos = found;
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    return line_of_offset(text_, pos);
  }

  const json& node_;
  std::string path_;
  std::string_view text_;
  std::string_view origin_;
  std::set<std::string> seen_;
};

constexpr double kDeg = kPi / 180.0;

}  // namespace

void RunConfig::validate() const {
  scenario.validate();
  grid.validate();
  filter.validate();
  ground.validate();
  if (skyline.stride < 1 || skyline.search_window < 0 || !(skyline.variance > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "skyline stride/search_window/sigma out of range");
  }
}

RunConfig parse_config(std::string_view text, std::string_view origin) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfigError, std::string(origin) + ":" +
                                             std::to_string(line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0)) +
                                             ": malformed JSON: " + e.what());
  }

  RunConfig c;
  Section top(root, "", text, origin);
  top.unsigned64("seed", c.scenario.trajectory.seed);
  top.number("height", c.scenario.height);

  {
    auto s = top.child("trajectory");
    std::string pattern(to_string(c.scenario.trajectory.pattern));
    s.string("pattern", pattern);
    try {
      c.scenario.trajectory.pattern = parse_pattern(pattern);
    } catch (const Error&) {
      s.fail("trajectory.pattern", "expected one of pure_roll, pure_pitch, mixed");
    }
    auto& t = c.scenario.trajectory;
    s.number("angular_speed_deg", t.angular_speed);
    s.number("duration", t.duration);
    s.number("frame_rate", t.frame_rate);
    s.number("static_hold", t.static_hold);
    s.number("amplitude_deg", t.amplitude);
    s.number("mixed_tau", t.mixed_tau);
    s.finish();
  }
  {
    auto s = top.child("noise");
    auto& n = c.scenario.noise;
    s.number("imu_sigma", n.imu_sigma);
    s.number("imu_bias_walk", n.imu_bias_walk);
    s.number("skyline_noise", n.skyline_noise);
    s.number("ground_dropout_rate", n.ground_dropout_rate);
    s.number("baro_sigma", n.baro_sigma);
    s.finish();
  }
  {
    auto s = top.child("dropout");
    auto& d = c.scenario.dropout;
    s.number("gain", d.gain);
    s.number("exponent", d.exponent);
    s.number("reference_rate_deg", d.reference_rate, kDeg);
    s.number("recovery", d.recovery);
    s.finish();
  }
  {
    auto s = top.child("horizon");
    s.number("ridge_amplitude", c.scenario.ridge_amplitude);
    s.number("ridge_period", c.scenario.ridge_period);
    s.finish();
  }
  {
    auto s = top.child("intrinsics");
    auto& k = c.scenario.intrinsics;
    s.number("fx", k.fx);
    s.number("fy", k.fy);
    s.number("cx", k.cx);
    s.number("cy", k.cy);
    s.integer("width", k.image_width);
    s.integer("height", k.image_height);
    s.finish();
  }
  {
    auto s = top.child("skyline");
    s.integer("stride", c.skyline.stride);
    s.integer("search_window", c.skyline.search_window);
    double sigma = std::sqrt(c.skyline.variance) / kDeg;
    s.number("sigma_deg", sigma);
    c.skyline.variance = (sigma * kDeg) * (sigma * kDeg);
    s.finish();
  }
  {
    auto s = top.child("ground");
    auto& g = c.ground;
    s.integer("grid_rows", g.grid_rows);
    s.integer("grid_cols", g.grid_cols);
    s.number("min_height", g.min_height);
    s.integer("ransac_rounds", g.ransac_rounds);
    s.unsigned64("ransac_seed", g.ransac_seed);
    double sigma = std::sqrt(g.variance) / kDeg;
    s.number("sigma_deg", sigma);
    g.variance = (sigma * kDeg) * (sigma * kDeg);
    s.finish();
  }
  {
    auto s = top.child("filter");
    auto& f = c.filter;
    s.integer("particles", f.n_particles);
    s.integer("children", f.n_children);
    s.number("epsilon_deg", f.epsilon, kDeg);
    s.number("lifetime", f.lifetime);
    s.number("imu_sigma_deg", f.imu_sigma, kDeg);
    s.number("imu_bias_offset_deg", f.imu_bias_offset, kDeg);
    s.number("process_noise", f.process_noise);
    s.number("removal_factor", f.removal_factor);
    s.number("resample_threshold", f.resample_threshold);
    s.unsigned64("seed", f.seed);
    s.numbers("cells_deg", c.grid.cell_size, kDeg);
    double range = c.grid.roll_max / kDeg;
    s.number("range_deg", range);
    c.grid.roll_min = c.grid.pitch_min = -range * kDeg;
    c.grid.roll_max = c.grid.pitch_max = range * kDeg;
    s.finish();
  }
  top.finish();

  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigError, std::string(origin) + ": invalid value: " + e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfigError, path.string() + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string dump_config(const RunConfig& c) {
  const auto& t = c.scenario.trajectory;
  const auto& n = c.scenario.noise;
  const auto& k = c.scenario.intrinsics;
  const auto& f = c.filter;
  json root;
  root["seed"] = t.seed;
  root["height"] = c.scenario.height;
  root["trajectory"] = {{"pattern", std::string(to_string(t.pattern))},
                        {"angular_speed_deg", t.angular_speed},
                        {"duration", t.duration},
                        {"frame_rate", t.frame_rate},
                        {"static_hold", t.static_hold},
                        {"amplitude_deg", t.amplitude},
                        {"mixed_tau", t.mixed_tau}};
  root["noise"] = {{"imu_sigma", n.imu_sigma},
                   {"imu_bias_walk", n.imu_bias_walk},
                   {"skyline_noise", n.skyline_noise},
                   {"ground_dropout_rate", n.ground_dropout_rate},
                   {"baro_sigma", n.baro_sigma}};
  root["dropout"] = {{"gain", c.scenario.dropout.gain},
                     {"exponent", c.scenario.dropout.exponent},
                     {"reference_rate_deg", c.scenario.dropout.reference_rate / kDeg},
                     {"recovery", c.scenario.dropout.recovery}};
  root["horizon"] = {{"ridge_amplitude", c.scenario.ridge_amplitude},
                     {"ridge_period", c.scenario.ridge_period}};
  root["intrinsics"] = {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy},
                        {"width", k.image_width}, {"height", k.image_height}};
  root["skyline"] = {{"stride", c.skyline.stride},
                     {"search_window", c.skyline.search_window},
                     {"sigma_deg", std::sqrt(c.skyline.variance) / kDeg}};
  root["ground"] = {{"grid_rows", c.ground.grid_rows},
                    {"grid_cols", c.ground.grid_cols},
                    {"min_height", c.ground.min_height},
                    {"ransac_rounds", c.ground.ransac_rounds},
                    {"ransac_seed", c.ground.ransac_seed},
                    {"sigma_deg", std::sqrt(c.ground.variance) / kDeg}};
  root["filter"] = {{"particles", f.n_particles},
                    {"children", f.n_children},
                    {"epsilon_deg", f.epsilon / kDeg},
                    {"lifetime", f.lifetime},
                    {"imu_sigma_deg", f.imu_sigma / kDeg},
                    {"imu_bias_offset_deg", f.imu_bias_offset / kDeg},
                    {"process_noise", f.process_noise},
                    {"removal_factor", f.removal_factor},
                    {"resample_threshold", f.resample_threshold},
                    {"seed", f.seed},
                    {"cells_deg", {c.grid.cell_size[0] / kDeg, c.grid.cell_size[1] / kDeg,
                                   c.grid.cell_size[2] / kDeg}},
                    {"range_deg", c.grid.roll_max / kDeg}};
  return root.dump(2) + "\n";
}

}  // namespace skyfuse
