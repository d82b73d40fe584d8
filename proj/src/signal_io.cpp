#include "irpf/signal_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace irpf {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

double parse_double(std::string_view cell, std::size_t line_no) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
    throw Error(ErrorCode::MalformedFile,
                "line " + std::to_string(line_no) + ": non-numeric cell '" + std::string(cell) + "'");
  }
  return value;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MalformedFile, "cannot open " + path.string());
  return in;
}

}  // namespace

Recording::Recording(std::vector<std::string> channel_names, double sampling_rate, Eigen::MatrixXd samples)
    : channel_names_(std::move(channel_names)), sampling_rate_(sampling_rate), samples_(std::move(samples)) {
  if (!(sampling_rate_ > 0.0) || !std::isfinite(sampling_rate_)) {
    throw Error(ErrorCode::InvalidSpec, "sampling rate must be positive");
  }
  if (static_cast<Eigen::Index>(channel_names_.size()) != samples_.rows() || channel_names_.empty()) {
    throw Error(ErrorCode::MalformedFile, "channel name count does not match sample rows");
  }
  if (samples_.cols() < 1) throw Error(ErrorCode::EmptyFile, "recording has no samples");
  std::set<std::string> seen;
  for (const auto& name : channel_names_) {
    if (!seen.insert(name).second) throw Error(ErrorCode::MalformedFile, "duplicate channel name '" + name + "'");
  }
}

std::vector<Eigen::Index> Recording::channel_rows(const std::vector<std::string>& names) const {
  std::vector<Eigen::Index> rows;
  rows.reserve(names.size());
  for (const auto& name : names) {
    const auto it = std::find(channel_names_.begin(), channel_names_.end(), name);
    if (it == channel_names_.end()) throw Error(ErrorCode::UnknownChannel, "unknown channel '" + name + "'");
    rows.push_back(it - channel_names_.begin());
  }
  return rows;
}

Recording parse_recording(std::istream& in, double sampling_rate) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> names;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (trim(line).empty()) continue;
    for (auto cell : split_csv_line(line)) names.emplace_back(cell);
    break;
  }
  if (names.empty()) throw Error(ErrorCode::EmptyFile, "recording file is empty");
  for (const auto& n : names) {
    if (n.empty()) throw Error(ErrorCode::MalformedFile, "empty channel name in header");
  }

  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != names.size()) {
      throw Error(ErrorCode::MalformedFile, "line " + std::to_string(line_no) + ": expected " +
                                                std::to_string(names.size()) + " columns, got " +
                                                std::to_string(cells.size()));
    }
    for (auto cell : cells) values.push_back(parse_double(cell, line_no));
    ++rows;
  }
  if (rows == 0) throw Error(ErrorCode::EmptyFile, "recording has a header but no samples");

  // values is time-major; a row-major map reads it as T x N.
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> tn(
      values.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(names.size()));
  return Recording(std::move(names), sampling_rate, tn.transpose());
}

Recording load_recording(const std::filesystem::path& path, double sampling_rate) {
  auto in = open_or_throw(path);
  return parse_recording(in, sampling_rate);
}

void write_recording(std::ostream& out, const Recording& recording) {
  const auto& names = recording.channel_names();
  for (std::size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << names[i];
  out << '\n';
  const auto& x = recording.samples();
  char buf[32];
  for (Eigen::Index t = 0; t < x.cols(); ++t) {
    for (Eigen::Index n = 0; n < x.rows(); ++n) {
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x(n, t));
      if (n) out.put(',');
      out.write(buf, ptr - buf);
    }
    out.put('\n');
  }
}

EpochSet epoch(const Recording& recording, double duration) {
  const double exact = duration * recording.sampling_rate();
  const auto length = static_cast<Eigen::Index>(std::llround(exact));
  if (!(duration > 0.0) || length < 2) throw Error(ErrorCode::TooShort, "epoch duration shorter than 2 samples");
  const Eigen::Index count = recording.n_samples() / length;
  if (count == 0) {
    throw Error(ErrorCode::DurationTooLong, "epoch duration exceeds recording length");
  }
  EpochSet set;
  set.epoch_duration = duration;
  set.channel_names = recording.channel_names();
  set.sampling_rate = recording.sampling_rate();
  set.epochs.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index i = 0; i < count; ++i) {
    set.source_indices.push_back(i * length);
    set.epochs.emplace_back(recording.samples().middleCols(i * length, length));
  }
  return set;
}

std::vector<Label> parse_labels(std::istream& in, std::optional<std::size_t> n_epochs) {
  std::vector<Label> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto cell = trim(line);
    if (cell.empty()) continue;
    if (cell == "0") {
      labels.push_back(Label::Clean);
    } else if (cell == "1") {
      labels.push_back(Label::Artifact);
    } else {
      throw Error(ErrorCode::InvalidLabelValue,
                  "line " + std::to_string(line_no) + ": label must be 0 or 1, got '" + std::string(cell) + "'");
    }
  }
  if (labels.empty()) throw Error(ErrorCode::EmptyFile, "label file is empty");
  if (n_epochs && labels.size() != *n_epochs) {
    throw Error(ErrorCode::LengthMismatch, "expected " + std::to_string(*n_epochs) + " labels, got " +
                                               std::to_string(labels.size()));
  }
  return labels;
}

std::vector<Label> load_labels(const std::filesystem::path& path, std::optional<std::size_t> n_epochs) {
  auto in = open_or_throw(path);
  return parse_labels(in, n_epochs);
}

void write_labels(std::ostream& out, const std::vector<Label>& labels) {
  for (Label l : labels) out << (l == Label::Artifact ? "1\n" : "0\n");
}

void validate_field_config(const FieldConfig& config, const std::vector<std::string>& channel_names,
                           double sampling_rate) {
  if (config.potatoes.empty()) throw Error(ErrorCode::EmptyField, "field config has no potatoes");
  if (!(config.u_lim > 0.0)) throw Error(ErrorCode::InvalidConfig, "u_lim must be positive");
  if (!(config.rpf_p_threshold > 0.0 && config.rpf_p_threshold < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "rpf_p_threshold must lie in (0,1)");
  }
  if (!std::isfinite(config.rp_z_threshold)) throw Error(ErrorCode::InvalidConfig, "rp_z_threshold must be finite");
  const double nyquist = sampling_rate / 2.0;
  for (const auto& p : config.potatoes) {
    if (p.channels.empty()) throw Error(ErrorCode::EmptyField, "potato with no channels");
    std::set<std::string> seen;
    for (const auto& ch : p.channels) {
      if (std::find(channel_names.begin(), channel_names.end(), ch) == channel_names.end()) {
        throw Error(ErrorCode::UnknownChannel, "unknown channel '" + ch + "' in field config");
      }
      if (!seen.insert(ch).second) throw Error(ErrorCode::InvalidConfig, "channel '" + ch + "' repeated in potato");
    }
    if (!(p.band_low >= 0.0) || p.band_low >= nyquist) {
      throw Error(ErrorCode::BandOutOfRange, "band_low outside [0, Nyquist)");
    }
    if (p.band_high) {
      if (*p.band_high > nyquist) {
        throw Error(ErrorCode::BandOutOfRange, "band_high " + std::to_string(*p.band_high) + " Hz exceeds Nyquist " +
                                                   std::to_string(nyquist) + " Hz");
      }
      if (!(*p.band_high > p.band_low)) throw Error(ErrorCode::BandOutOfRange, "band_high must exceed band_low");
    } else if (!(p.band_low > 0.0)) {
      throw Error(ErrorCode::BandOutOfRange, "high-pass potato needs band_low > 0");
    }
  }
}

FieldConfig parse_field_config(const std::string& json_text, const std::vector<std::string>& channel_names,
                               double sampling_rate) {
  using nlohmann::json;
  FieldConfig config;
  try {
    const json j = json::parse(json_text);
    if (!j.is_object()) throw Error(ErrorCode::MalformedFile, "field config must be a JSON object");
    if (!j.contains("potatoes") || !j.at("potatoes").is_array()) {
      throw Error(ErrorCode::EmptyField, "field config has no 'potatoes' array");
    }
    for (const auto& jp : j.at("potatoes")) {
      PotatoSpec spec;
      spec.channels = jp.at("channels").get<std::vector<std::string>>();
      spec.band_low = jp.at("band_low").get<double>();
      if (jp.contains("band_high") && !jp.at("band_high").is_null()) spec.band_high = jp.at("band_high").get<double>();
      spec.distance = parse_distance_kind(jp.value("distance", std::string("riemannian")));
      config.potatoes.push_back(std::move(spec));
    }
    if (j.contains("combiner")) config.combiner = parse_combiner(j.at("combiner").get<std::string>());
    config.u_lim = j.value("u_lim", config.u_lim);
    config.rp_z_threshold = j.value("rp_z_threshold", config.rp_z_threshold);
    config.rpf_p_threshold = j.value("rpf_p_threshold", config.rpf_p_threshold);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedFile, std::string("field config: ") + e.what());
  }
  validate_field_config(config, channel_names, sampling_rate);
  return config;
}

FieldConfig load_field_config(const std::filesystem::path& path, const Recording& recording) {
  auto in = open_or_throw(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_field_config(ss.str(), recording.channel_names(), recording.sampling_rate());
}

std::string serialize_field_config(const FieldConfig& config) {
  using nlohmann::json;
  json potatoes = json::array();
  for (const auto& p : config.potatoes) {
    potatoes.push_back({{"channels", p.channels},
                        {"band_low", p.band_low},
                        {"band_high", p.band_high ? json(*p.band_high) : json(nullptr)},
                        {"distance", std::string(to_string(p.distance))}});
  }
  const json j = {{"potatoes", potatoes},
                  {"combiner", std::string(to_string(config.combiner))},
                  {"u_lim", config.u_lim},
                  {"rp_z_threshold", config.rp_z_threshold},
                  {"rpf_p_threshold", config.rpf_p_threshold}};
  return j.dump(2);
}

}  // namespace irpf
