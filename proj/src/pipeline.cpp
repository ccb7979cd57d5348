#include "qscope/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <functional>

#include "qscope/errors.hpp"
#include "qscope/stream_io.hpp"

namespace qscope {

namespace fs = std::filesystem;

namespace {

void atomic_emit(const fs::path& path, const std::function<void(const fs::path&)>& writer) {
  const fs::path tmp = path.string() + ".tmp";
  writer(tmp);
  fs::rename(tmp, path);
}

nlohmann::json edge_fit_json(const EdgeFitResult& fit) {
  const char* status = "converged";
  if (fit.status == EdgeFitResult::Status::MaxIterations) status = "max_iterations";
  if (fit.status == EdgeFitResult::Status::SigmaAtBound) status = "sigma_at_bound";
  return {{"amplitude", fit.amplitude},
          {"offset", fit.offset},
          {"center_um", fit.center_um},
          {"sigma_um", fit.sigma_um},
          {"amplitude_se", fit.amplitude_se},
          {"offset_se", fit.offset_se},
          {"center_se", fit.center_se},
          {"sigma_se", fit.sigma_se},
          {"residual_norm", fit.residual_norm},
          {"iterations", fit.iterations},
          {"status", status}};
}

}  // namespace

ReconstructionResult reconstruct_streams(const TagStream& signal, const TagStream& idler,
                                         const TagStream& triggers,
                                         const RunConfig& config) {
  ReconstructionResult result;
  result.histogram = cross_correlation_histogram(
      signal, idler, config.coincidence.bin_width_ps, config.coincidence.lag_min_ps,
      config.coincidence.lag_max_ps);

  std::int64_t delay = 0;
  if (result.histogram.total() > 0) {
    const DelayEstimate estimate = estimate_delay(result.histogram);
    result.delay_ps = estimate.delay_ps;
    result.delay_significance = estimate.significance;
    result.delay_estimated = true;
    delay = std::llround(estimate.delay_ps);
    if (estimate.significance < 5.0)
      result.warnings.push_back("correlation peak significance below 5; the delay "
                                "estimate may be unreliable");
  } else {
    result.warnings.push_back("no coincidences found; images will be empty");
  }

  result.coincidences =
      match_coincidences(signal, idler, delay, config.coincidence.window_ps);
  result.timeline = build_timeline(triggers, config.scan);

  const ReverseHandling reverse = config.reconstruct.reverse_handling;
  result.frame_grids = per_frame_grids(result.coincidences.times, result.timeline,
                                       config.scan, reverse);
  result.coincidence_image =
      accumulate_frames(std::span<const ImageGrid>(result.frame_grids));
  result.idler_image = assign_pixels(idler, result.timeline, config.scan, reverse);

  if (!result.timeline.frames.empty() && !result.timeline.frames.back().complete)
    result.warnings.push_back("acquisition ended inside frame " +
                              std::to_string(result.timeline.frame_count() - 1) +
                              "; the partial frame was kept");
  return result;
}

AnalysisResult analyze_images(const ImageGrid& coincidence_image,
                              const ImageGrid& idler_image, const FrameStack* stack,
                              const AnalysisParams& params) {
  AnalysisResult result;
  const MaskPair masks = threshold_mask(idler_image);

  if (stack && !stack->frames.empty()) {
    std::size_t frames = stack->frames.size();
    if (params.snr_max_frames > 0)
      frames = std::min(frames, static_cast<std::size_t>(params.snr_max_frames));
    ImageGrid cumulative;
    cumulative.counts = CountArray::Zero(stack->frames.front().rows(),
                                         stack->frames.front().cols());
    cumulative.pixel_pitch_um = stack->pixel_pitch_um;
    for (std::size_t k = 0; k < frames; ++k) {
      cumulative.counts += stack->frames[k];
      result.snr_curve.push_back(
          {static_cast<int>(k) + 1, snr(cumulative, masks)});
    }
  } else {
    result.snr_curve.push_back(
        {static_cast<int>(std::max<std::int64_t>(coincidence_image.frames_accumulated, 1)),
         snr(coincidence_image, masks)});
  }

  result.sqrt_fit_degenerate = result.snr_curve.size() < 2;
  try {
    result.sqrt_fit = fit_sqrt_scaling(result.snr_curve);
    result.sqrt_fit_valid = true;
  } catch (const NumericalError& e) {
    result.warnings.push_back(std::string("sqrt scaling fit failed: ") + e.what());
  }

  if (params.linescan_count > 0) {
    if (!params.edge_region)
      throw ConfigError(
          "edge fits need analysis.edge_region "
          "{first_row,last_row,first_col,last_col,orientation}; set it or set "
          "analysis.linescan_count to 0");
    result.linescans =
        extract_linescans(coincidence_image, *params.edge_region, params.linescan_count);
    double sum = 0.0, sum_sq = 0.0;
    for (const Linescan& scan : result.linescans) {
      const EdgeFitResult fit = fit_edge(scan);
      result.edge_fits.push_back(fit);
      if (fit.converged()) {
        ++result.converged_fits;
        sum += fit.sigma_um;
        sum_sq += fit.sigma_um * fit.sigma_um;
      }
    }
    if (result.converged_fits > 0) {
      const double n = result.converged_fits;
      result.sigma_mean_um = sum / n;
      result.sigma_std_um = std::sqrt(std::max(0.0, sum_sq / n - result.sigma_mean_um *
                                                                     result.sigma_mean_um));
    }
    if (result.converged_fits < static_cast<int>(result.edge_fits.size()))
      result.warnings.push_back(
          std::to_string(result.edge_fits.size() - result.converged_fits) +
          " edge fit(s) did not converge");
  }

  result.idler_wavelength_nm =
      idler_wavelength(params.lambda_pump_nm, params.lambda_signal_nm);
  for (double na : params.confocal_na)
    result.confocal_limits_um.emplace_back(na,
                                           confocal_limit(params.confocal_lambda_um, na));
  return result;
}

SimulationResult run_simulate(const RunConfig& config, const fs::path& dir) {
  config.validate();
  const SamplePattern sample = config.sample.build(dir);
  fs::create_directories(dir);

  SimulationResult result =
      simulate(sample, config.source, config.scan, config.duration_s);

  atomic_emit(dir / "signal.qtt",
              [&](const fs::path& p) { write_stream(result.signal, p); });
  atomic_emit(dir / "idler.qtt", [&](const fs::path& p) { write_stream(result.idler, p); });
  atomic_emit(dir / "triggers.qtt",
              [&](const fs::path& p) { write_stream(result.triggers, p); });
  atomic_emit(dir / "ground_truth.csv",
              [&](const fs::path& p) { write_image_csv(result.ground_truth, p); });
  atomic_emit(dir / "ground_truth.pgm",
              [&](const fs::path& p) { write_image_pgm(result.ground_truth, p); });

  nlohmann::json manifest;
  manifest["config"] = config.to_json();
  manifest["outputs"] = {"signal.qtt", "idler.qtt", "triggers.qtt", "ground_truth.csv",
                         "ground_truth.pgm"};
  manifest["pairs_emitted"] = result.pairs_emitted;
  manifest["signal_tags"] = result.signal.size();
  manifest["idler_tags"] = result.idler.size();
  manifest["trigger_tags"] = result.triggers.size();
  atomic_emit(dir / "manifest.json", [&](const fs::path& p) {
    std::ofstream out(p);
    out << manifest.dump(2) << '\n';
  });
  return result;
}

ReconstructionResult run_reconstruct(const RunConfig& config, const fs::path& dir) {
  config.validate();

  std::vector<fs::path> files;
  if (config.reconstruct.stream_files.empty()) {
    files = {dir / "signal.qtt", dir / "idler.qtt", dir / "triggers.qtt"};
  } else {
    for (const std::string& name : config.reconstruct.stream_files) {
      fs::path p(name);
      files.push_back(p.is_relative() ? dir / p : p);
    }
  }

  // Channels are pooled across every input file, so per-channel files and a
  // single merged file are both accepted.
  TagStream signal, idler, triggers;
  std::vector<std::string> input_warnings;
  bool first = true;
  for (const fs::path& file : files) {
    const TagStream stream = read_stream(file);
    const ValidationReport report = validate_stream(stream);
    if (!report.ok())
      throw FormatError("invalid stream " + file.string() + ": " + report.summary());
    if (first) {
      signal.resolution_ps = idler.resolution_ps = triggers.resolution_ps =
          stream.resolution_ps;
      first = false;
      if (stream.resolution_ps != 1.0)
        input_warnings.push_back("stream resolution is " +
                                 std::to_string(stream.resolution_ps) +
                                 " ps per unit; the pipeline interprets timestamps as "
                                 "picoseconds");
    }
    signal = merge_streams(signal, select_channel(stream, kChannelSignal));
    idler = merge_streams(idler, select_channel(stream, kChannelIdler));
    triggers = merge_streams(triggers, select_channel(stream, kChannelTrigger));
  }
  if (triggers.empty())
    throw FormatError("cannot build timeline: no channel-2 line triggers in input");

  ReconstructionResult result = reconstruct_streams(signal, idler, triggers, config);
  result.warnings.insert(result.warnings.end(), input_warnings.begin(),
                         input_warnings.end());

  atomic_emit(dir / "coincidence_image.csv",
              [&](const fs::path& p) { write_image_csv(result.coincidence_image, p); });
  atomic_emit(dir / "coincidence_image.pgm",
              [&](const fs::path& p) { write_image_pgm(result.coincidence_image, p); });
  atomic_emit(dir / "idler_image.csv",
              [&](const fs::path& p) { write_image_csv(result.idler_image, p); });
  atomic_emit(dir / "idler_image.pgm",
              [&](const fs::path& p) { write_image_pgm(result.idler_image, p); });
  atomic_emit(dir / "histogram.csv",
              [&](const fs::path& p) { write_histogram_csv(result.histogram, p); });
  if (config.reconstruct.emit_frame_stack)
    atomic_emit(dir / "frames.qfs",
                [&](const fs::path& p) { write_frame_stack(result.frame_grids, p); });

  nlohmann::json report;
  report["delay_ps"] = result.delay_ps;
  report["delay_significance"] = result.delay_significance;
  report["delay_estimated"] = result.delay_estimated;
  report["coincidences"] = result.coincidences.size();
  report["matched_window_ps"] = result.coincidences.window_ps;
  report["frames"] = result.timeline.frame_count();
  report["last_frame_complete"] =
      result.timeline.frames.empty() ? false : result.timeline.frames.back().complete;
  report["image_counts"] = result.coincidence_image.total_counts();
  report["discarded_tags"] = result.coincidence_image.discarded_tags;
  report["idler_image_counts"] = result.idler_image.total_counts();
  report["idler_discarded_tags"] = result.idler_image.discarded_tags;
  report["signal_tags"] = signal.size();
  report["idler_tags"] = idler.size();
  report["trigger_tags"] = triggers.size();
  report["warnings"] = result.warnings;
  atomic_emit(dir / "reconstruction_report.json", [&](const fs::path& p) {
    std::ofstream out(p);
    out << report.dump(2) << '\n';
  });
  return result;
}

AnalysisResult run_analyze(const RunConfig& config, const fs::path& dir) {
  config.validate();
  if (config.analysis.linescan_count > 0 && !config.analysis.edge_region)
    throw ConfigError(
        "edge fits need analysis.edge_region "
        "{first_row,last_row,first_col,last_col,orientation}; set it or set "
        "analysis.linescan_count to 0");

  const fs::path coincidence_path = dir / "coincidence_image.csv";
  const fs::path idler_path = dir / "idler_image.csv";
  if (!fs::exists(coincidence_path) || !fs::exists(idler_path))
    throw FormatError("analyze needs coincidence_image.csv and idler_image.csv in " +
                      dir.string() + "; run reconstruct first");

  const ImageGrid coincidence_image = read_image_csv(coincidence_path);
  const ImageGrid idler_image = read_image_csv(idler_path);

  FrameStack stack;
  const bool have_stack = fs::exists(dir / "frames.qfs");
  if (have_stack) stack = read_frame_stack(dir / "frames.qfs");

  AnalysisResult result = analyze_images(coincidence_image, idler_image,
                                         have_stack ? &stack : nullptr, config.analysis);

  atomic_emit(dir / "snr_vs_frames.csv", [&](const fs::path& p) {
    std::ofstream out(p);
    out << "frames,snr\n";
    for (const SnrPoint& point : result.snr_curve)
      out << point.frames << ',' << point.snr << '\n';
  });

  if (!result.linescans.empty()) {
    atomic_emit(dir / "edge_curves.csv", [&](const fs::path& p) {
      std::ofstream out(p);
      out << "scan,position_um,counts,fit\n";
      for (std::size_t s = 0; s < result.linescans.size(); ++s) {
        const Linescan& scan = result.linescans[s];
        const EdgeFitResult& fit = result.edge_fits[s];
        const Eigen::Vector4d params(fit.amplitude, fit.offset, fit.center_um,
                                     fit.sigma_um);
        const Eigen::ArrayXd fitted = edge_model(scan.position_um, params);
        for (Eigen::Index i = 0; i < scan.position_um.size(); ++i)
          out << s << ',' << scan.position_um[i] << ',' << scan.counts[i] << ','
              << fitted[i] << '\n';
      }
    });
  }

  nlohmann::json summary;
  summary["snr_points"] = result.snr_curve.size();
  summary["snr_final"] =
      result.snr_curve.empty() ? 0.0 : result.snr_curve.back().snr;
  summary["sqrt_fit"] = {{"amplitude", result.sqrt_fit.amplitude},
                         {"r_squared", result.sqrt_fit.r_squared},
                         {"valid", result.sqrt_fit_valid},
                         {"degenerate", result.sqrt_fit_degenerate}};
  summary["edge_fits"] = nlohmann::json::array();
  for (const EdgeFitResult& fit : result.edge_fits)
    summary["edge_fits"].push_back(edge_fit_json(fit));
  summary["resolution"] = {{"mean_sigma_um", result.sigma_mean_um},
                           {"std_sigma_um", result.sigma_std_um},
                           {"converged_fits", result.converged_fits}};
  summary["idler_wavelength_nm"] = result.idler_wavelength_nm;
  summary["confocal_limits_um"] = nlohmann::json::array();
  for (const auto& [na, limit] : result.confocal_limits_um)
    summary["confocal_limits_um"].push_back({{"na", na}, {"limit_um", limit}});
  summary["warnings"] = result.warnings;
  atomic_emit(dir / "analysis.json", [&](const fs::path& p) {
    std::ofstream out(p);
    out << summary.dump(2) << '\n';
  });
  return result;
}

}  // namespace qscope
