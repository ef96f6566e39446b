#include "stemtrace/cli.hpp"

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "stemtrace/annotation.hpp"
#include "stemtrace/dataset.hpp"
#include "stemtrace/error.hpp"
#include "stemtrace/png_io.hpp"
#include "stemtrace/service.hpp"

namespace stemtrace {

namespace {

struct MaskFlags {
  std::optional<int> tau;
  bool clamp_ends = false;
  std::optional<std::size_t> samples_per_segment;
};

void add_mask_flags(CLI::App& cmd, MaskFlags& flags) {
  cmd.add_option("--tau", flags.tau, "Stem mask width in pixels (default: the annotation's tau, else 30)")
      ->check(CLI::Range(1, 1'000'000));
  cmd.add_flag("--clamp-ends", flags.clamp_ends, "Triple the end points so the curve reaches them");
  cmd.add_option("--samples-per-segment", flags.samples_per_segment, "Curve samples per spline segment")
      ->check(CLI::Range(std::size_t{2}, kMaxSamplesPerSegment));
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Service* g_running_service = nullptr;

void on_signal(int) {
  if (g_running_service != nullptr) g_running_service->stop();
}

}  // namespace

int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"stemtrace: stem masks from control points, and pixel-level mask evaluation", "stemtrace"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(version()));

  MaskFlags gen_flags;
  std::string gen_in;
  std::string gen_out;
  unsigned gen_jobs = 1;
  auto* generate = app.add_subcommand("generate", "Render <image_id>_mask.png for every annotation in a directory");
  generate->add_option("--in", gen_in, "Directory of LabelMe annotation files")->required();
  generate->add_option("--out", gen_out, "Output directory for masks")->required();
  generate->add_option("--jobs", gen_jobs, "Parallel workers")->check(CLI::Range(1u, 256u));
  add_mask_flags(*generate, gen_flags);

  std::string eval_pred;
  std::string eval_gt;
  std::string eval_format = "table";
  std::string eval_f1 = "both";
  std::string eval_aggregate = "micro";
  std::string eval_out;
  unsigned eval_jobs = 1;
  auto* evaluate = app.add_subcommand("evaluate", "Compare predicted masks with ground-truth masks");
  evaluate->add_option("--pred", eval_pred, "Directory of predicted masks")->required();
  evaluate->add_option("--gt", eval_gt, "Directory of ground-truth masks")->required();
  evaluate->add_option("--format", eval_format, "Report format")->check(CLI::IsMember({"csv", "table"}));
  evaluate->add_option("--f1", eval_f1, "F1 column(s) in the table")->check(CLI::IsMember({"standard", "paper", "both"}));
  evaluate->add_option("--aggregate", eval_aggregate, "Headline aggregation")->check(CLI::IsMember({"micro", "macro"}));
  evaluate->add_option("--report", eval_out, "Write the report to this file instead of stdout");
  evaluate->add_option("--jobs", eval_jobs, "Parallel workers")->check(CLI::Range(1u, 256u));

  std::string split_dir;
  std::uint64_t split_seed = 0;
  std::string split_out;
  auto* split = app.add_subcommand("split", "Write a train/val/test manifest (floor 1/10 val and test)");
  split->add_option("--n-from", split_dir, "Directory whose annotations or masks name the images")->required();
  split->add_option("--seed", split_seed, "Shuffle seed");
  split->add_option("--out", split_out, "Manifest path (default: stdout)");

  std::string serve_addr;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--addr", serve_addr, "host:port (default: STEMTRACE_ADDR or 127.0.0.1:8080)");

  MaskFlags preview_flags;
  std::string preview_in;
  std::string preview_out = "-";
  auto* preview = app.add_subcommand("preview", "Render one annotation to a PNG");
  preview->add_option("--in", preview_in, "LabelMe annotation file")->required();
  preview->add_option("--out", preview_out, "PNG path, or - for stdout");
  add_mask_flags(*preview, preview_flags);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    out << (e.get_name() == "CallForVersion" ? std::string(version()) + "\n" : app.help());
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "stemtrace: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (generate->parsed()) {
      GenerateOptions options;
      options.tau = gen_flags.tau;
      options.samples_per_segment = gen_flags.samples_per_segment;
      options.ends = gen_flags.clamp_ends ? EndMode::clamped : EndMode::open;
      options.jobs = gen_jobs;
      const GenerateReport report = batch_generate(gen_in, gen_out, options);
      out << generate_report_text(report);
      return report.failed() == 0 ? kExitOk : kExitFailure;
    }

    if (evaluate->parsed()) {
      EvaluateOptions options;
      options.jobs = eval_jobs;
      options.headline = eval_aggregate == "macro" ? Aggregation::macro : Aggregation::micro;
      const EvaluateReport report = batch_evaluate(eval_pred, eval_gt, options);
      for (const auto& id : report.missing_gt) err << "warning: " << id << ": no ground-truth mask, excluded\n";
      for (const auto& id : report.missing_pred) err << "warning: " << id << ": no predicted mask, excluded\n";
      for (const auto& e : report.errors) err << "error: " << e.image_id << ": " << e.error << "\n";
      if (!report.metrics) {
        err << "stemtrace: no mask pairs could be evaluated\n";
        return kExitFailure;
      }
      const F1Columns columns = eval_f1 == "standard" ? F1Columns::standard
                                : eval_f1 == "paper"  ? F1Columns::paper
                                                      : F1Columns::both;
      write_text(eval_out, eval_format == "csv" ? report_csv(*report.metrics) : report_table(*report.metrics, columns),
                 out);
      if (report.warnings() > 0) err << report.warnings() << " warning(s)\n";
      return report.errors.empty() ? kExitOk : kExitFailure;
    }

    if (split->parsed()) {
      const DatasetSplit result = split_dataset(collect_image_ids(split_dir), split_seed);
      write_text(split_out, split_manifest_json(result), out);
      err << "train " << result.train.size() << ", val " << result.val.size() << ", test " << result.test.size()
          << "\n";
      return kExitOk;
    }

    if (serve->parsed()) {
      ServiceConfig config = ServiceConfig::from_environment();
      if (!serve_addr.empty()) parse_address(serve_addr, config.host, config.port);
      Service service(config);
      const int port = service.bind();
      err << "stemtrace " << version() << " listening on " << config.host << ":" << port << "\n";
      g_running_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      service.run();
      g_running_service = nullptr;
      return kExitOk;
    }

    if (preview->parsed()) {
      const auto bytes = read_file_bytes(preview_in);
      const ControlPointAnnotation annotation = parse_annotation(
          std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
          std::filesystem::path(preview_in).stem().string());
      const RenderedMask rendered = render_mask(request_from_annotation(
          annotation, preview_flags.tau, preview_flags.clamp_ends, preview_flags.samples_per_segment));
      if (preview_out == "-") {
        out.write(reinterpret_cast<const char*>(rendered.png.data()), static_cast<std::streamsize>(rendered.png.size()));
        out.flush();
      } else {
        write_file_bytes(preview_out, rendered.png);
      }
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "stemtrace: " << to_string(e.code()) << ": " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "stemtrace: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace stemtrace
