#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "frailty/errors.hpp"
#include "frailty/pipeline.hpp"

namespace {

struct CommonOpts {
  std::string config_path = "pipeline.json";
  std::string out_dir;
  int threads = 0;
  bool force = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("-c,--config", opts.config_path,
                  "Pipeline configuration file (JSON)")
      ->capture_default_str();
  cmd->add_option("-o,--out", opts.out_dir,
                  "Output directory (overrides the config and $FRAILTY_OUT_DIR)");
  cmd->add_option("-t,--threads", opts.threads,
                  "Worker threads (overrides the config; results do not depend on it)");
  cmd->add_flag("-f,--force", opts.force, "Rerun stages even when up to date");
}

frailty::PipelineConfig load_config(const CommonOpts& opts) {
  frailty::PipelineConfig config = frailty::load_pipeline_config(opts.config_path);
  if (!opts.out_dir.empty()) config.output_dir = opts.out_dir;
  return config;
}

void print_result(const frailty::PipelineResult& result) {
  fmt::print("output directory: {}\n", result.out_dir);
  for (const frailty::StageReport& s : result.stages) {
    if (s.executed) {
      fmt::print("[{}] {} rows in {:.1f} ms -> {}\n", to_string(s.stage), s.rows,
                 s.elapsed_ms, fmt::join(s.artifacts, ", "));
    } else {
      fmt::print("[{}] up to date ({} rows) -> {}\n", to_string(s.stage), s.rows,
                 fmt::join(s.artifacts, ", "));
    }
    for (const std::string& w : s.warnings) {
      fmt::print(stderr, "[{}] warning: {}\n", to_string(s.stage), w);
    }
  }
}

int run_stage_command(const CommonOpts& opts, frailty::Stage stage,
                      const char* command_name) {
  const frailty::PipelineConfig config = load_config(opts);
  if (stage == frailty::Stage::Cohort) {
    const bool synthetic = config.cohort.source == frailty::CohortSource::Synthetic;
    if (synthetic && std::string(command_name) == "ingest") {
      throw frailty::DataError(
          "the configuration generates a synthetic cohort; use 'frailty synth' "
          "or set cohort.source to \"flows\"");
    }
    if (!synthetic && std::string(command_name) == "synth") {
      throw frailty::DataError(
          "the configuration ingests flow files; use 'frailty ingest' "
          "or set cohort.source to \"synthetic\"");
    }
  }
  const frailty::RunOptions run_options{opts.force, opts.threads};
  print_result(frailty::run_pipeline(config, {stage}, run_options));
  return 0;
}

int run_chain_command(const CommonOpts& opts, const std::vector<std::string>& stage_names) {
  const frailty::PipelineConfig config = load_config(opts);
  std::vector<frailty::Stage> stages;
  if (stage_names.empty()) {
    stages = frailty::default_stages();
  } else {
    for (const std::string& name : stage_names) {
      stages.push_back(frailty::stage_from_string(name));
    }
  }
  const frailty::RunOptions run_options{opts.force, opts.threads};
  print_result(frailty::run_pipeline(config, stages, run_options));
  return 0;
}

int run_report_command(const CommonOpts& opts, const std::vector<std::string>& which) {
  const frailty::PipelineConfig config = load_config(opts);
  const frailty::RunOptions run_options{opts.force, opts.threads};
  const std::vector<frailty::EmittedReport> emitted =
      frailty::emit_reports(config, which, run_options);
  for (const frailty::EmittedReport& r : emitted) {
    fmt::print("[{}] {} {}\n", r.id, r.csv_path, r.text_path);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frailty-index pipeline: cohort ingestion, marker extraction, variable\n"
               "screening and selection, ranking-based scoring, and validation reports."};
  app.require_subcommand(1);
  CommonOpts opts;

  struct StageCommand {
    const char* name;
    const char* help;
    frailty::Stage stage;
  };
  const std::vector<StageCommand> stage_commands = {
      {"synth", "Generate the synthetic cohort artifact", frailty::Stage::Cohort},
      {"ingest", "Ingest flow files into the cohort artifact", frailty::Stage::Cohort},
      {"markers", "Extract ordinal marker profiles", frailty::Stage::Markers},
      {"screen", "Screen candidate variables (prevalence, protective, votes)",
       frailty::Stage::Screen},
      {"select", "Forward-select the final marker set", frailty::Stage::Select},
      {"score", "Compute the frailty index for every subject", frailty::Stage::Score},
      {"robustness", "Rerun the selection under perturbed designs",
       frailty::Stage::Robustness},
  };
  for (const StageCommand& sc : stage_commands) {
    CLI::App* cmd = app.add_subcommand(sc.name, sc.help);
    add_common(cmd, opts);
  }

  CLI::App* report_cmd =
      app.add_subcommand("report", "Emit analytics reports from existing artifacts");
  add_common(report_cmd, opts);
  std::vector<std::string> which = {"all"};
  report_cmd->add_option("-w,--which", which,
                         "Report ids to emit, or 'all'")
      ->delimiter(',')
      ->capture_default_str();

  CLI::App* run_cmd = app.add_subcommand("run", "Run a chain of pipeline stages");
  add_common(run_cmd, opts);
  std::vector<std::string> stage_names;
  run_cmd->add_option("-s,--stages", stage_names,
                      "Stages to run (default: synth/ingest through analytics)")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    for (const StageCommand& sc : stage_commands) {
      if (app.got_subcommand(sc.name)) return run_stage_command(opts, sc.stage, sc.name);
    }
    if (app.got_subcommand(report_cmd)) return run_report_command(opts, which);
    if (app.got_subcommand(run_cmd)) return run_chain_command(opts, stage_names);
    fmt::print(stderr, "error: no command\n");
    return 1;
  } catch (const frailty::DependencyError& e) {
    fmt::print(stderr, "dependency error: {}\n", e.what());
    return 3;
  } catch (const frailty::DataError& e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
}
