#pragma once

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eco/engine.hpp"
#include "eco/io.hpp"

namespace eco {

namespace detail {

struct CommonFlags {
  std::string input;
  bool planar = false;
  bool strict = false;
  Params params;
  EngineOptions options;
  std::optional<double> origin;
  std::optional<double> ref_lat, ref_lon;

  void attach(CLI::App& cmd, bool input_required) {
    auto* in = cmd.add_option("--input", input, "input CSV file");
    if (input_required) in->required();
    cmd.add_flag("--planar", planar, "input coordinates are planar meters");
    cmd.add_flag("--strict", strict, "abort on the first malformed record");
    cmd.add_option("--delta-t", params.delta_t, "time step duration, seconds");
    cmd.add_option("--eps", params.eps0, "initial clustering radius, meters");
    cmd.add_option("--min-pts", params.min_pts, "density threshold");
    cmd.add_option("--delta", params.delta, "minimal-group radius, meters");
    cmd.add_option("--rho", params.rho, "minimal-group activation size");
    cmd.add_option("--alpha", params.alpha, "historical cost weight");
    cmd.add_option("--mu", params.mu, "speed limit, m/s");
    cmd.add_option("--delta-eps", params.delta_eps, "epsilon adaptation step, meters");
    cmd.add_option("--dist-floor", params.dist_floor, "similarity distance floor, meters");
    cmd.add_flag("--disable-smoothing", options.disable_smoothing,
                 "cluster raw locations without temporal smoothing");
    cmd.add_option("--gap-steps", options.gap_steps,
                   "steps an absent object keeps its previous location");
    cmd.add_option("--origin", origin, "stream origin, seconds (default: first record)");
    cmd.add_option("--ref-lat", ref_lat, "projection reference latitude");
    cmd.add_option("--ref-lon", ref_lon, "projection reference longitude");
  }

  ParseOutcome load() const {
    std::optional<std::pair<double, double>> ref;
    if (ref_lat && ref_lon) ref = {*ref_lat, *ref_lon};
    return parse_records_file(
        input, planar ? InputMode::planar : InputMode::geographic, strict, ref);
  }
};

struct OutputStream {
  std::ofstream file;
  std::ostream* os = nullptr;
  explicit OutputStream(const std::string& path) {
    if (path.empty() || path == "-") {
      os = &std::cout;
    } else {
      file.open(path);
      if (!file) throw DataError("cannot open output file: " + path);
      os = &file;
    }
  }
  std::ostream& get() { return *os; }
};

struct RunOutputs {
  std::string out;
  std::string metrics_out;
  std::string assignments_out;
};

inline void emit_run(std::span<const PlanarRecord> records,
                     const CommonFlags& flags, const RunOutputs& paths) {
  OutputStream out(paths.out);
  std::unique_ptr<OutputStream> metrics;
  std::unique_ptr<OutputStream> assignments;
  if (!paths.metrics_out.empty()) {
    metrics = std::make_unique<OutputStream>(paths.metrics_out);
    write_summary_header(metrics->get());
  }
  if (!paths.assignments_out.empty()) {
    assignments = std::make_unique<OutputStream>(paths.assignments_out);
    write_assignments_header(assignments->get());
  }

  // Snapshots are rebuilt here only for the assignments file timestamps.
  const double t0 = records.empty()
                        ? 0.0
                        : flags.origin.value_or(records.front().t);
  std::map<StepIndex, std::vector<PlanarRecord>> buckets;
  for (const PlanarRecord& r : records) {
    if (r.t < t0) throw DataError("record precedes the stream origin");
    buckets[discretize_timestamp(r.t, t0, flags.params.delta_t)].push_back(r);
  }

  double qs_sum = 0.0, nmi_sum = 0.0;
  std::size_t qs_n = 0, nmi_n = 0;
  run(records, flags.params, flags.options, flags.origin,
      [&](const StepResult& r) {
        out.get() << to_jsonl_line(r) << '\n';
        for (const std::string& w : r.warnings) {
          std::cerr << "warning: step " << r.k << ": " << w << '\n';
        }
        if (metrics) write_summary_row(metrics->get(), r);
        if (assignments) {
          auto it = buckets.find(r.k);
          if (it != buckets.end()) {
            const Snapshot snap =
                build_snapshot(it->second, r.k, t0, flags.params.delta_t);
            write_assignments_rows(assignments->get(), r, snap);
          }
        }
        if (r.metrics.qs) { qs_sum += *r.metrics.qs; ++qs_n; }
        if (r.metrics.nmi_with_prev) { nmi_sum += *r.metrics.nmi_with_prev; ++nmi_n; }
      });
  if (qs_n > 0) std::cerr << "mean qs: " << qs_sum / qs_n << '\n';
  if (nmi_n > 0) std::cerr << "mean nmi: " << nmi_sum / nmi_n << '\n';
}

}  // namespace detail

// Entry point shared by the binary and the tests. Returns 0 on success, 1 on
// usage errors, 2 on data errors.
inline int cli_main(std::vector<std::string> args) {
  CLI::App app{"Evolutionary clustering of streaming trajectories"};
  app.require_subcommand(1);

  // --- run -----------------------------------------------------------------
  auto* run_cmd = app.add_subcommand("run", "cluster a stream and emit per-step results");
  detail::CommonFlags run_flags;
  detail::RunOutputs run_paths;
  run_flags.attach(*run_cmd, /*input_required=*/true);
  run_cmd->add_option("--out", run_paths.out, "per-step JSONL output (default: stdout)");
  run_cmd->add_option("--metrics-out", run_paths.metrics_out, "summary CSV output");
  run_cmd->add_option("--assignments-out", run_paths.assignments_out,
                      "per-object assignments CSV output");
  std::uint64_t run_seed = 0;
  run_cmd->add_option("--seed", run_seed, "accepted for symmetry; run is deterministic");

  // --- generate --------------------------------------------------------------
  auto* gen_cmd = app.add_subcommand("generate", "emit a synthetic co-movement stream");
  GeneratorSpec spec;
  std::string gen_out;
  gen_cmd->add_option("--out", gen_out, "output CSV (default: stdout)");
  gen_cmd->add_option("--groups", spec.group_count, "number of co-moving groups");
  gen_cmd->add_option("--objects", spec.objects_per_group, "objects per group");
  gen_cmd->add_option("--steps", spec.steps, "number of time steps");
  gen_cmd->add_option("--speed", spec.speed, "group speed, m/s");
  gen_cmd->add_option("--spread", spec.spread, "intra-group jitter bound, meters");
  gen_cmd->add_option("--dev-prob", spec.dev_prob, "per object-step deviation probability");
  gen_cmd->add_option("--dev-mag", spec.dev_mag, "deviation magnitude, meters");
  gen_cmd->add_option("--seed", spec.seed, "random seed");
  gen_cmd->add_option("--delta-t", spec.delta_t, "timestamp spacing, seconds");
  gen_cmd->add_option("--spacing", spec.group_spacing,
                      "grid pitch of group origins (default: auto)");

  // --- evaluate ----------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("evaluate", "recompute QS/NMI from an assignments file");
  std::string eval_input, eval_out;
  double eval_floor = 1e-3;
  eval_cmd->add_option("--input", eval_input, "assignments CSV from `run`")->required();
  eval_cmd->add_option("--out", eval_out, "per-step metrics CSV (default: stdout)");
  eval_cmd->add_option("--dist-floor", eval_floor, "similarity distance floor, meters");

  // --- sweep ------------------------------------------------------------------
  auto* sweep_cmd = app.add_subcommand("sweep", "run a grid over one parameter");
  detail::CommonFlags sweep_flags;
  sweep_flags.attach(*sweep_cmd, /*input_required=*/true);
  std::string sweep_param, sweep_out;
  std::vector<double> sweep_values;
  sweep_cmd->add_option("--param", sweep_param, "one of alpha|delta|rho|min-pts|eps|mu|delta-eps")
      ->required();
  sweep_cmd->add_option("--values", sweep_values, "values to sweep")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--out", sweep_out, "table CSV (default: stdout)");

  try {
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(std::move(args));
  } catch (const CLI::Success& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n' << app.help();
    return 1;
  }

  try {
    if (run_cmd->parsed()) {
      run_flags.params.validate();
      const ParseOutcome parsed = run_flags.load();
      if (parsed.skipped > 0) {
        std::cerr << "skipped " << parsed.skipped << " malformed line(s)\n";
      }
      detail::emit_run(parsed.records, run_flags, run_paths);
      return 0;
    }
    if (gen_cmd->parsed()) {
      detail::OutputStream out(gen_out);
      write_records_csv(out.get(), generate_synthetic(spec));
      return 0;
    }
    if (eval_cmd->parsed()) {
      std::ifstream in(eval_input);
      if (!in) throw DataError("cannot open input file: " + eval_input);
      const Evaluation eval = evaluate_assignments(in, eval_floor);
      detail::OutputStream out(eval_out);
      out.get() << "step,qs,nmi\n";
      for (const EvaluatedStep& s : eval.steps) {
        out.get() << s.k << ',';
        if (s.qs) out.get() << *s.qs;
        out.get() << ',';
        if (s.nmi) out.get() << *s.nmi;
        out.get() << '\n';
      }
      std::cerr << "mean qs: ";
      if (eval.mean_qs) std::cerr << *eval.mean_qs;
      std::cerr << "\nmean nmi: ";
      if (eval.mean_nmi) std::cerr << *eval.mean_nmi;
      std::cerr << '\n';
      return 0;
    }
    if (sweep_cmd->parsed()) {
      const ParseOutcome parsed = sweep_flags.load();
      detail::OutputStream out(sweep_out);
      out.get() << "param,value,mean_qs,mean_nmi,mean_ms\n";
      for (double value : sweep_values) {
        Params p = sweep_flags.params;
        if (sweep_param == "alpha") p.alpha = value;
        else if (sweep_param == "delta") p.delta = value;
        else if (sweep_param == "rho") p.rho = static_cast<int>(value);
        else if (sweep_param == "min-pts") p.min_pts = static_cast<int>(value);
        else if (sweep_param == "eps") p.eps0 = value;
        else if (sweep_param == "mu") p.mu = value;
        else if (sweep_param == "delta-eps") p.delta_eps = value;
        else {
          std::cerr << "unknown sweep parameter: " << sweep_param << '\n';
          return 1;
        }
        p.validate();
        double qs_sum = 0.0, nmi_sum = 0.0, ms_sum = 0.0;
        std::size_t qs_n = 0, nmi_n = 0, steps = 0;
        run(parsed.records, p, sweep_flags.options, sweep_flags.origin,
            [&](const StepResult& r) {
              if (r.metrics.qs) { qs_sum += *r.metrics.qs; ++qs_n; }
              if (r.metrics.nmi_with_prev) { nmi_sum += *r.metrics.nmi_with_prev; ++nmi_n; }
              ms_sum += r.metrics.processing_seconds * 1000.0;
              ++steps;
            });
        out.get() << sweep_param << ',' << value << ',';
        if (qs_n > 0) out.get() << qs_sum / qs_n;
        out.get() << ',';
        if (nmi_n > 0) out.get() << nmi_sum / nmi_n;
        out.get() << ',';
        if (steps > 0) out.get() << ms_sum / steps;
        out.get() << '\n';
      }
      return 0;
    }
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

inline int cli_main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_main(std::move(args));
}

}  // namespace eco
