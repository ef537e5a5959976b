#include <cstdlib>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"

namespace {

void add_common(CLI::App* sub, widthlab::cli::CommonOptions& o, std::string& out) {
  sub->add_option("--config", o.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", out, "Output directory (default: $WIDTHLAB_OUT_ROOT/<name>)");
  sub->add_option("--jobs", o.jobs, "Parallel cells (default: all cores)");
  sub->add_option("--seed-offset", o.seed_offset, "Added to every seed in the config");
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("widthlab"));
  spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");

  CLI::App app{"Width-scaling experiments for MLPs and the uv-model"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  widthlab::cli::CommonOptions opts;
  std::string out;
  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const widthlab::cli::CommonOptions&);
  };
  const Command commands[] = {
      {"train", "Single training run with full artifacts", widthlab::cli::cmd_train},
      {"sweep", "Width x learning-rate x seed sweep and exponent report", widthlab::cli::cmd_sweep},
      {"coordcheck", "Refined coordinate check across widths", widthlab::cli::cmd_coordcheck},
      {"align", "Alignment study with operator-norm metrics", widthlab::cli::cmd_align},
      {"uvmodel", "uv-model stability scan and limit distance", widthlab::cli::cmd_uvmodel},
      {"gendata", "Generate and persist the configured dataset", widthlab::cli::cmd_gendata},
  };
  int (*selected)(const widthlab::cli::CommonOptions&) = nullptr;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub, opts, out);
    sub->callback([&selected, fn = c.fn] { selected = fn; });
  }

  std::string report_dir;
  bool presets = false;
  CLI::App* report = app.add_subcommand("report", "Rebuild report files from a results directory");
  report->add_option("--out,dir", report_dir, "Results directory")->required();
  report->add_flag("--presets", presets, "Write the preset scaling table instead");

  CLI11_PARSE(app, argc, argv);
  if (verbose) spdlog::set_level(spdlog::level::debug);
  if (!out.empty()) opts.out = out;

  return widthlab::cli::guarded([&] {
    if (report->parsed())
      return presets ? widthlab::cli::cmd_presets(report_dir) : widthlab::cli::cmd_report(report_dir);
    return selected(opts);
  });
}
