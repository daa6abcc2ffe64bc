// tlfusion command-line front end: simulate, run, eval, plot-data.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "tlfusion/errors.hpp"
#include "tlfusion/harness.hpp"
#include "tlfusion/io.hpp"
#include "tlfusion/simulator.hpp"

namespace fs = std::filesystem;
using namespace tlfusion;

namespace {

void report_error(std::string_view kind, std::string_view message) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  std::cerr << j.dump() << '\n';
}

struct RunArgs {
  std::string map, calib, detections, poses, mode = "tracking", output;
  std::string config, hmm, stats;
};

int cmd_simulate(const std::string& scenario_path, const std::string& out_dir) {
  const Scenario scenario = parse_scenario(read_text_file(scenario_path), scenario_path);
  write_simulation(generate(scenario), out_dir);
  return 0;
}

int cmd_run(const RunArgs& a) {
  PipelineInputs inputs;
  inputs.map = load_map(a.map);
  inputs.cameras = load_calibration_dir(a.calib);
  inputs.detections = parse_detections(read_text_file(a.detections), a.detections);
  inputs.poses = PoseBuffer(parse_poses(read_text_file(a.poses), a.poses));

  PipelineConfig config;
  if (!a.config.empty()) config = parse_pipeline_config(read_text_file(a.config), a.config);
  if (!a.hmm.empty()) config.hmms = load_hmm_dir(a.hmm);

  RunStats stats;
  const auto reports = run_pipeline_timed(inputs, mode_from_name(a.mode), config, stats);
  write_text_file(a.output, serialize_reports(reports));
  if (!a.stats.empty()) write_text_file(a.stats, serialize_stats(stats));
  return 0;
}

int cmd_eval(const std::string& reports_path, const std::string& gt_path, const std::string& out,
             const std::string& stats_path, double radius) {
  const auto reports = parse_reports(read_text_file(reports_path), reports_path);
  const auto gt = parse_ground_truth(read_text_file(gt_path), gt_path);
  EvalReport report = evaluate(reports, gt, radius);
  if (!stats_path.empty()) report.fps = parse_stats(read_text_file(stats_path), stats_path).fps;
  const std::string text = serialize_eval_report(report);
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_text_file(out, text);
  }
  return 0;
}

int cmd_plot(const std::string& reports_path, const std::string& gt_path, const std::string& light,
             const std::string& out, const std::string& od_path) {
  const auto reports = parse_reports(read_text_file(reports_path), reports_path);
  const auto gt = parse_ground_truth(read_text_file(gt_path), gt_path);
  std::vector<FrameReport> od;
  if (!od_path.empty()) od = parse_reports(read_text_file(od_path), od_path);
  write_text_file(out, emit_sequence_csv(reports, od, gt, light));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Map-aided multi-camera traffic-light state tracking"};
  app.require_subcommand(1);

  std::string scenario_path, sim_out;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset from a scenario");
  simulate->add_option("scenario", scenario_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("-o,--output", sim_out, "Output directory")->required();

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run the pipeline over recorded inputs");
  run->add_option("-m,--map", run_args.map, "Map JSON")->required()->check(CLI::ExistingFile);
  run->add_option("-c,--calib", run_args.calib, "Calibration directory")->required()->check(CLI::ExistingDirectory);
  run->add_option("-d,--detections", run_args.detections, "Detections JSONL")->required()->check(CLI::ExistingFile);
  run->add_option("-p,--poses", run_args.poses, "Poses JSONL")->required()->check(CLI::ExistingFile);
  run->add_option("--mode", run_args.mode, "od | fusion | tracking")
      ->check(CLI::IsMember({"od", "fusion", "tracking"}));
  run->add_option("-o,--output", run_args.output, "Reports JSONL")->required();
  run->add_option("--config", run_args.config, "Pipeline config JSON")->check(CLI::ExistingFile);
  run->add_option("--hmm", run_args.hmm, "Directory of per-type HMM JSON files")->check(CLI::ExistingDirectory);
  run->add_option("--stats", run_args.stats, "Write timing stats JSON here");

  std::string eval_reports, eval_gt, eval_out = "-", eval_stats;
  double eval_radius = kDefaultMatchRadiusM;
  auto* eval = app.add_subcommand("eval", "Score reports against ground truth");
  eval->add_option("-r,--reports", eval_reports, "Reports JSONL")->required()->check(CLI::ExistingFile);
  eval->add_option("-g,--ground-truth", eval_gt, "Ground truth JSONL")->required()->check(CLI::ExistingFile);
  eval->add_option("-o,--output", eval_out, "Eval report JSON (default stdout)");
  eval->add_option("--stats", eval_stats, "Timing stats JSON from run")->check(CLI::ExistingFile);
  eval->add_option("--match-radius", eval_radius, "Match radius in metres");

  std::string plot_reports, plot_gt, plot_light, plot_out, plot_od;
  auto* plot = app.add_subcommand("plot-data", "Per-light state sequence as CSV");
  plot->add_option("-r,--reports", plot_reports, "Reports JSONL")->required()->check(CLI::ExistingFile);
  plot->add_option("-g,--ground-truth", plot_gt, "Ground truth JSONL")->required()->check(CLI::ExistingFile);
  plot->add_option("--light", plot_light, "light_id")->required();
  plot->add_option("-o,--output", plot_out, "CSV output")->required();
  plot->add_option("--od", plot_od, "Reports from od mode for the od_state column")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return 2;
  }

  try {
    if (*simulate) return cmd_simulate(scenario_path, sim_out);
    if (*run) return cmd_run(run_args);
    if (*eval) return cmd_eval(eval_reports, eval_gt, eval_out, eval_stats, eval_radius);
    if (*plot) return cmd_plot(plot_reports, plot_gt, plot_light, plot_out, plot_od);
  } catch (const Error& e) {
    report_error(e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return 1;
  }
  return 1;
}
