#include "qscope/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "qscope/errors.hpp"

namespace qscope {

namespace {

/// Pulls typed values out of one JSON object and rejects keys it never saw.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& object, std::string context)
      : object_(object), context_(std::move(context)) {
    if (!object_.is_object())
      throw ConfigError(context_ + " must be a JSON object");
  }

  template <typename T>
  void read(const char* key, T& value) {
    seen_.insert(key);
    if (!object_.contains(key)) return;
    try {
      value = object_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(context_ + "." + key + " has the wrong type");
    }
  }

  bool has(const char* key) {
    seen_.insert(key);
    return object_.contains(key);
  }

  const nlohmann::json& child(const char* key) {
    seen_.insert(key);
    return object_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : object_.items())
      if (!seen_.contains(key))
        throw ConfigError("unknown config key " + context_ + "." + key);
  }

 private:
  const nlohmann::json& object_;
  std::string context_;
  std::set<std::string> seen_;
};

ReverseHandling parse_reverse(const std::string& name) {
  if (name == "fold") return ReverseHandling::Fold;
  if (name == "forward_only") return ReverseHandling::ForwardOnly;
  if (name == "reverse_only") return ReverseHandling::ReverseOnly;
  throw ConfigError("reconstruct.reverse_handling must be fold, forward_only or "
                    "reverse_only, got \"" + name + "\"");
}

std::string reverse_name(ReverseHandling handling) {
  switch (handling) {
    case ReverseHandling::Fold: return "fold";
    case ReverseHandling::ForwardOnly: return "forward_only";
    case ReverseHandling::ReverseOnly: return "reverse_only";
  }
  return "fold";
}

EdgeOrientation parse_orientation(const std::string& name) {
  if (name == "vertical") return EdgeOrientation::Vertical;
  if (name == "horizontal") return EdgeOrientation::Horizontal;
  throw ConfigError("edge_region.orientation must be vertical or horizontal, got \"" +
                    name + "\"");
}

Eigen::ArrayXXd load_reflectance_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open sample file " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size())
      throw ConfigError("sample file rows have inconsistent lengths: " + path.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("sample file is empty: " + path.string());
  Eigen::ArrayXXd map(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) map(r, c) = rows[r][c];
  return map;
}

}  // namespace

SamplePattern SampleParams::build(const std::filesystem::path& base_dir) const {
  if (type == "grating") {
    SamplePattern pattern = make_grating(square_size_um, gap_um, field_um, resolution_px);
    pattern.blur_sigma_um = blur_sigma_um;
    return pattern;
  }
  if (type == "uniform") {
    SamplePattern pattern = make_uniform(reflectance, field_um, resolution_px);
    pattern.blur_sigma_um = blur_sigma_um;
    return pattern;
  }
  if (type == "csv") {
    if (file.empty()) throw ConfigError("sample.file is required when sample.type is csv");
    std::filesystem::path path(file);
    if (path.is_relative()) path = base_dir / path;
    SamplePattern pattern;
    pattern.reflectance = load_reflectance_csv(path);
    pattern.size_x_um = field_um;
    pattern.size_y_um = field_um * static_cast<double>(pattern.reflectance.rows()) /
                        static_cast<double>(pattern.reflectance.cols());
    pattern.blur_sigma_um = blur_sigma_um;
    if ((pattern.reflectance < 0.0).any() || (pattern.reflectance > 1.0).any())
      throw ConfigError("sample file values must be in [0, 1]: " + path.string());
    return pattern;
  }
  throw ConfigError("sample.type must be grating, uniform or csv, got \"" + type + "\"");
}

void RunConfig::validate() const {
  if (schema_version != 1)
    throw ConfigError("unsupported schema_version " + std::to_string(schema_version));
  scan.validate();
  source.validate();
  if (duration_s < 0) throw ConfigError("duration_s must be non-negative");
  if (coincidence.bin_width_ps <= 0) throw ConfigError("coincidence.bin_width_ps must be positive");
  if (coincidence.window_ps <= 0) throw ConfigError("coincidence.window_ps must be positive");
  if (coincidence.lag_max_ps <= coincidence.lag_min_ps)
    throw ConfigError("coincidence lag range is empty");
  if ((coincidence.lag_max_ps - coincidence.lag_min_ps) % coincidence.bin_width_ps != 0)
    throw ConfigError("coincidence lag range must be a multiple of bin_width_ps");
  if (analysis.linescan_count < 0) throw ConfigError("analysis.linescan_count must be >= 0");
  if (sample.resolution_px <= 0) throw ConfigError("sample.resolution_px must be positive");
  if (sample.blur_sigma_um < 0) throw ConfigError("sample.blur_sigma_um must be >= 0");
  for (double na : analysis.confocal_na)
    if (!(na > 0) || na > 1.6) throw ConfigError("analysis.confocal_na entries must be in (0, 1.6]");
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig config;
  ObjectReader root(j, "config");
  root.read("schema_version", config.schema_version);

  if (root.has("scan")) {
    ObjectReader scan(root.child("scan"), "scan");
    scan.read("pixels_x", config.scan.pixels_x);
    scan.read("pixels_y", config.scan.pixels_y);
    scan.read("dwell_time_us", config.scan.dwell_time_us);
    scan.read("turnaround_time_us", config.scan.turnaround_time_us);
    scan.read("field_of_view_x_um", config.scan.field_of_view_x_um);
    scan.read("field_of_view_y_um", config.scan.field_of_view_y_um);
    scan.read("bidirectional", config.scan.bidirectional);
    scan.read("flyback_equals_frame", config.scan.flyback_equals_frame);
    scan.finish();
  }

  if (root.has("source")) {
    ObjectReader source(root.child("source"), "source");
    source.read("pair_rate_hz", config.source.pair_rate_hz);
    source.read("signal_efficiency", config.source.signal_efficiency);
    source.read("idler_path_efficiency", config.source.idler_path_efficiency);
    source.read("signal_dark_rate_hz", config.source.signal_dark_rate_hz);
    source.read("idler_dark_rate_hz", config.source.idler_dark_rate_hz);
    source.read("inter_arm_delay_ps", config.source.inter_arm_delay_ps);
    source.read("jitter_sigma_ps", config.source.jitter_sigma_ps);
    source.read("rng_seed", config.source.rng_seed);
    source.finish();
  }

  if (root.has("sample")) {
    ObjectReader sample(root.child("sample"), "sample");
    sample.read("type", config.sample.type);
    sample.read("field_um", config.sample.field_um);
    sample.read("square_size_um", config.sample.square_size_um);
    sample.read("gap_um", config.sample.gap_um);
    sample.read("reflectance", config.sample.reflectance);
    sample.read("file", config.sample.file);
    sample.read("blur_sigma_um", config.sample.blur_sigma_um);
    sample.read("resolution_px", config.sample.resolution_px);
    sample.finish();
  }

  if (root.has("coincidence")) {
    ObjectReader coincidence(root.child("coincidence"), "coincidence");
    coincidence.read("bin_width_ps", config.coincidence.bin_width_ps);
    coincidence.read("window_ps", config.coincidence.window_ps);
    coincidence.read("lag_min_ps", config.coincidence.lag_min_ps);
    coincidence.read("lag_max_ps", config.coincidence.lag_max_ps);
    coincidence.finish();
  }

  if (root.has("reconstruct")) {
    ObjectReader reconstruct(root.child("reconstruct"), "reconstruct");
    std::string reverse = reverse_name(config.reconstruct.reverse_handling);
    reconstruct.read("reverse_handling", reverse);
    config.reconstruct.reverse_handling = parse_reverse(reverse);
    reconstruct.read("emit_frame_stack", config.reconstruct.emit_frame_stack);
    reconstruct.read("stream_files", config.reconstruct.stream_files);
    reconstruct.finish();
  }

  if (root.has("analysis")) {
    ObjectReader analysis(root.child("analysis"), "analysis");
    analysis.read("linescan_count", config.analysis.linescan_count);
    analysis.read("snr_max_frames", config.analysis.snr_max_frames);
    analysis.read("lambda_pump_nm", config.analysis.lambda_pump_nm);
    analysis.read("lambda_signal_nm", config.analysis.lambda_signal_nm);
    analysis.read("confocal_lambda_um", config.analysis.confocal_lambda_um);
    analysis.read("confocal_na", config.analysis.confocal_na);
    if (analysis.has("edge_region")) {
      ObjectReader region(analysis.child("edge_region"), "analysis.edge_region");
      EdgeRegion edge;
      region.read("first_row", edge.first_row);
      region.read("last_row", edge.last_row);
      region.read("first_col", edge.first_col);
      region.read("last_col", edge.last_col);
      std::string orientation = "vertical";
      region.read("orientation", orientation);
      edge.orientation = parse_orientation(orientation);
      region.finish();
      config.analysis.edge_region = edge;
    }
    analysis.finish();
  }

  if (root.has("run")) {
    ObjectReader run(root.child("run"), "run");
    run.read("duration_s", config.duration_s);
    run.read("out_dir", config.out_dir);
    run.finish();
  }

  root.finish();
  config.validate();
  return config;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["schema_version"] = schema_version;
  j["scan"] = {{"pixels_x", scan.pixels_x},
               {"pixels_y", scan.pixels_y},
               {"dwell_time_us", scan.dwell_time_us},
               {"turnaround_time_us", scan.turnaround_time_us},
               {"field_of_view_x_um", scan.field_of_view_x_um},
               {"field_of_view_y_um", scan.field_of_view_y_um},
               {"bidirectional", scan.bidirectional},
               {"flyback_equals_frame", scan.flyback_equals_frame}};
  j["source"] = {{"pair_rate_hz", source.pair_rate_hz},
                 {"signal_efficiency", source.signal_efficiency},
                 {"idler_path_efficiency", source.idler_path_efficiency},
                 {"signal_dark_rate_hz", source.signal_dark_rate_hz},
                 {"idler_dark_rate_hz", source.idler_dark_rate_hz},
                 {"inter_arm_delay_ps", source.inter_arm_delay_ps},
                 {"jitter_sigma_ps", source.jitter_sigma_ps},
                 {"rng_seed", source.rng_seed}};
  j["sample"] = {{"type", sample.type},
                 {"field_um", sample.field_um},
                 {"square_size_um", sample.square_size_um},
                 {"gap_um", sample.gap_um},
                 {"reflectance", sample.reflectance},
                 {"file", sample.file},
                 {"blur_sigma_um", sample.blur_sigma_um},
                 {"resolution_px", sample.resolution_px}};
  j["coincidence"] = {{"bin_width_ps", coincidence.bin_width_ps},
                      {"window_ps", coincidence.window_ps},
                      {"lag_min_ps", coincidence.lag_min_ps},
                      {"lag_max_ps", coincidence.lag_max_ps}};
  j["reconstruct"] = {{"reverse_handling", reverse_name(reconstruct.reverse_handling)},
                      {"emit_frame_stack", reconstruct.emit_frame_stack},
                      {"stream_files", reconstruct.stream_files}};
  j["analysis"] = {{"linescan_count", analysis.linescan_count},
                   {"snr_max_frames", analysis.snr_max_frames},
                   {"lambda_pump_nm", analysis.lambda_pump_nm},
                   {"lambda_signal_nm", analysis.lambda_signal_nm},
                   {"confocal_lambda_um", analysis.confocal_lambda_um},
                   {"confocal_na", analysis.confocal_na}};
  if (analysis.edge_region) {
    const EdgeRegion& edge = *analysis.edge_region;
    j["analysis"]["edge_region"] = {
        {"first_row", edge.first_row},
        {"last_row", edge.last_row},
        {"first_col", edge.first_col},
        {"last_col", edge.last_col},
        {"orientation",
         edge.orientation == EdgeOrientation::Vertical ? "vertical" : "horizontal"}};
  }
  j["run"] = {{"duration_s", duration_s}, {"out_dir", out_dir}};
  return j;
}

}  // namespace qscope
