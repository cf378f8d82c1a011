#include "ucortest/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ucortest/dataset_io.hpp"
#include "ucortest/error.hpp"
#include "ucortest/evt.hpp"
#include "ucortest/kendall.hpp"
#include "ucortest/parallel.hpp"
#include "ucortest/simulation.hpp"

namespace ucortest::cli {
namespace {

using json = nlohmann::json;

// CLI11 consumes arguments from the back of the vector.
int parse_args(CLI::App& app, std::vector<std::string> args, std::ostream& out,
               std::ostream& err, bool& done) {
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    done = true;
    const int code = app.exit(e, out, err);
    return code == 0 ? kNotRejected : kUsageError;
  }
  done = false;
  return kNotRejected;
}

std::string fmt6(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

bool write_json(const std::string& path, const json& doc, std::ostream& err) {
  std::ofstream file(path);
  if (!file) {
    err << "error: cannot write '" << path << "'\n";
    return false;
  }
  file << doc.dump(2) << '\n';
  return static_cast<bool>(file);
}

bool is_kendall(Method m) { return m != Method::GenericJackknife; }

json entry_json(const TestOutcome& o, const DifferentialEntry& e) {
  const auto i = static_cast<Eigen::Index>(e.i);
  const auto j = static_cast<Eigen::Index>(e.j);
  json entry = {{"i", e.i + 1},
                {"j", e.j + 1},
                {"m_ij", e.statistic},
                {"p_marginal", e.p_marginal},
                {"u_x", o.u1.entries(i, j)},
                {"u_y", o.u2.entries(i, j)}};
  if (is_kendall(o.method)) {
    entry["latent_corr_x"] = kendall::sine_latent_correlation(o.u1.entries(i, j));
    entry["latent_corr_y"] = kendall::sine_latent_correlation(o.u2.entries(i, j));
  }
  return entry;
}

}  // namespace

int cmd_test(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Test equality of two U-statistic correlation matrices", "ucortest test"};
  std::string x_path;
  std::string y_path;
  std::string method_text = "ps";
  std::string generic_text;
  std::string json_path;
  std::string delimiter_text;
  double alpha = 0.05;
  std::size_t row = 0;
  std::size_t top = 10;
  unsigned threads = 0;
  bool header = false;
  bool pseudo_asymptotic = false;

  app.add_option("--x", x_path, "first sample (rows = samples, columns = variables)")->required();
  app.add_option("--y", y_path, "second sample")->required();
  app.add_option("--method", method_text, "variance estimator: jack, plug or ps");
  app.add_option("--alpha", alpha, "significance level in (0, 1)");
  app.add_option("--row", row, "test only this row (1-based)");
  app.add_option("--top", top, "number of largest entries to report");
  app.add_option("--json", json_path, "write a JSON report to this path");
  app.add_option("--generic-kernel", generic_text,
                 "use the generic Jackknife engine with kernel kendall or spearman");
  app.add_option("--delimiter", delimiter_text, "field delimiter (default: auto-detect)");
  app.add_flag("--header", header, "first line holds column names");
  app.add_flag("--pseudo-asymptotic", pseudo_asymptotic,
               "use the limiting null variance 4/9 for ps");
  app.add_option("--threads", threads, "worker threads (default: $UCORTEST_THREADS or all cores)");

  bool done = false;
  if (const int code = parse_args(app, args, out, err, done); done) return code;

  const auto started = std::chrono::steady_clock::now();
  try {
    TestConfig config;
    config.alpha = alpha;
    config.pseudo_asymptotic = pseudo_asymptotic;
    config.workers = resolve_workers(threads);
    if (!generic_text.empty()) {
      config.method = Method::GenericJackknife;
      config.generic_kernel = parse_generic_kernel(generic_text);
    } else {
      config.method = parse_method(method_text);
      if (config.method == Method::GenericJackknife) {
        throw InvalidArgumentError("use --generic-kernel to select the generic engine");
      }
    }
    config.validate();
    if (app.count("--row") && row == 0) throw InvalidArgumentError("--row is 1-based");
    if (app.count("--row")) config.row = row - 1;

    io::ParseOptions parse;
    parse.header = header;
    if (!delimiter_text.empty()) {
      if (delimiter_text == "\\t" || delimiter_text == "tab") delimiter_text = "\t";
      if (delimiter_text.size() != 1) throw InvalidArgumentError("--delimiter takes one character");
      parse.delimiter = delimiter_text.front();
    }
    const auto x = io::parse_dataset(x_path, parse);
    const auto y = io::parse_dataset(y_path, parse);

    const TestOutcome outcome = run_full_test(x.data, y.data, config);
    const auto entries = differential_entries(outcome, 0.0);
    const std::size_t shown = std::min(top, entries.size());
    const auto runtime_ms = std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - started)
                                .count();

    std::vector<std::string> warnings;
    for (const auto& w : x.warnings) warnings.push_back("X: " + w);
    for (const auto& w : y.warnings) warnings.push_back("Y: " + w);
    warnings.insert(warnings.end(), outcome.warnings.begin(), outcome.warnings.end());

    out << "method           " << to_string(outcome.method);
    if (outcome.method == Method::GenericJackknife) out << " (" << to_string(config.generic_kernel) << ")";
    out << '\n';
    out << "mode             " << (outcome.row ? "row " + std::to_string(*outcome.row + 1) : "full")
        << '\n';
    out << "n1, n2, d        " << x.data.n() << ", " << y.data.n() << ", " << x.data.d() << '\n';
    out << "statistic        " << fmt6(outcome.statistic) << '\n';
    out << "centered         " << fmt6(outcome.x_centered) << '\n';
    out << "critical value   " << fmt6(outcome.critical_value) << " (alpha = " << fmt6(alpha)
        << ")\n";
    out << "p-value          " << fmt6(outcome.p_value) << '\n';
    out << "argmax           (" << outcome.argmax.i + 1 << ", " << outcome.argmax.j + 1 << ")\n";
    out << "decision         " << (outcome.reject ? "reject H0" : "do not reject H0") << '\n';
    if (shown > 0) {
      out << "top entries (marginal p-values are not adjusted for multiplicity):\n";
      for (std::size_t k = 0; k < shown; ++k) {
        const auto& e = entries[k];
        out << "  (" << e.i + 1 << ", " << e.j + 1 << ")  M = " << fmt6(e.statistic)
            << "  p_marginal = " << fmt6(e.p_marginal) << '\n';
      }
    }
    for (const auto& w : warnings) out << "warning: " << w << '\n';

    if (!json_path.empty()) {
      json report = {{"method", std::string(to_string(outcome.method))},
                     {"alpha", alpha},
                     {"n1", x.data.n()},
                     {"n2", y.data.n()},
                     {"d", x.data.d()},
                     {"statistic", outcome.statistic},
                     {"critical_value", outcome.critical_value},
                     {"p_value", outcome.p_value},
                     {"reject", outcome.reject},
                     {"argmax", {outcome.argmax.i + 1, outcome.argmax.j + 1}},
                     {"centered_x", outcome.x_centered},
                     {"warnings", warnings},
                     {"runtime_ms", runtime_ms}};
      if (outcome.row) report["row"] = *outcome.row + 1;
      if (outcome.method == Method::GenericJackknife) {
        report["kernel"] = std::string(to_string(config.generic_kernel));
      }
      json top_entries = json::array();
      for (std::size_t k = 0; k < shown; ++k) top_entries.push_back(entry_json(outcome, entries[k]));
      report["top_entries"] = std::move(top_entries);
      if (!write_json(json_path, report, err)) return kUsageError;
    }
    return outcome.reject ? kRejected : kNotRejected;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
}

int cmd_simulate(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monte-Carlo size and power of the Kendall tests", "ucortest simulate"};
  std::string config_path;
  std::string model_text = "1";
  std::string structure_text = "block";
  std::string method_text = "ps";
  std::string json_path;
  std::string log_path;
  sim::SimSpec spec;
  unsigned threads = 0;
  bool dump_config = false;

  app.add_option("--config", config_path, "key = value file with the simulation settings");
  app.add_option("--model", model_text, "1 normal, 2 multivariate t(3), 3 Cauchy margins");
  app.add_option("--structure", structure_text, "block, tri or multi");
  app.add_option("--d", spec.structure.d, "dimension");
  app.add_option("--n1", spec.n1, "first sample size");
  app.add_option("--n2", spec.n2, "second sample size");
  app.add_option("--zeta", spec.zeta, "perturbation scale (0 = null)");
  app.add_option("--method", method_text, "jack, plug, ps, a comma list, or all");
  app.add_option("--alpha", spec.alpha, "significance level");
  app.add_option("--reps", spec.reps, "replications");
  app.add_option("--seed", spec.master_seed, "master seed");
  app.add_option("--json", json_path, "write a JSON summary to this path");
  app.add_option("--log", log_path, "write a per-replication CSV log to this path");
  app.add_option("--threads", threads, "worker threads (default: $UCORTEST_THREADS or all cores)");
  app.add_flag("--pseudo-asymptotic", spec.pseudo_asymptotic, "use 4/9 for ps");
  app.add_flag("--copy-x-as-y", spec.copy_x_as_y, "diagnostic: Y is a copy of X");
  app.add_flag("--dump-config", dump_config, "print the resolved settings and exit");

  bool done = false;
  if (const int code = parse_args(app, args, out, err, done); done) return code;

  const auto started = std::chrono::steady_clock::now();
  try {
    if (!config_path.empty()) {
      std::ifstream file(config_path);
      if (!file) throw ParseError("cannot open '" + config_path + "'", 0);
      std::ostringstream text;
      text << file.rdbuf();
      sim::SimSpec flags = spec;
      spec = sim::parse_config_text(text.str());
      // Flags given explicitly override the file.
      if (app.count("--d")) spec.structure.d = flags.structure.d;
      if (app.count("--n1")) spec.n1 = flags.n1;
      if (app.count("--n2")) spec.n2 = flags.n2;
      if (app.count("--zeta")) spec.zeta = flags.zeta;
      if (app.count("--alpha")) spec.alpha = flags.alpha;
      if (app.count("--reps")) spec.reps = flags.reps;
      if (app.count("--seed")) spec.master_seed = flags.master_seed;
      if (flags.pseudo_asymptotic) spec.pseudo_asymptotic = true;
      if (flags.copy_x_as_y) spec.copy_x_as_y = true;
    }
    if (config_path.empty() || app.count("--model")) spec.model = sim::parse_model(model_text);
    if (config_path.empty() || app.count("--structure")) {
      spec.structure.kind = sim::parse_structure(structure_text);
    }
    if (config_path.empty() || app.count("--method")) {
      spec.methods = sim::parse_method_list(method_text);
    }
    spec.validate();
    if (dump_config) {
      out << sim::to_config_text(spec);
      return kNotRejected;
    }

    const auto result = sim::empirical_rejection_rate(spec, resolve_workers(threads));
    const auto runtime_ms = std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - started)
                                .count();

    out << "model " << static_cast<int>(spec.model) << " (" << to_string(spec.model)
        << "), structure " << to_string(spec.structure.kind) << ", d = " << spec.structure.d
        << ", n1 = " << spec.n1 << ", n2 = " << spec.n2 << ", zeta = " << fmt6(spec.zeta)
        << ", alpha = " << fmt6(spec.alpha) << ", reps = " << spec.reps
        << ", seed = " << spec.master_seed << '\n';
    for (const auto& r : result.rates) {
      out << "  " << std::left << std::setw(5) << to_string(r.method) << std::right
          << " rejection rate " << fmt6(r.rate) << " +/- " << fmt6(r.standard_error) << "  ("
          << r.rejections << "/" << r.valid_reps << ")\n";
    }
    for (const auto& w : result.warnings) out << "warning: " << w << '\n';

    if (!log_path.empty()) {
      std::ofstream log(log_path);
      if (!log) throw ParseError("cannot write '" + log_path + "'", 0);
      log << std::setprecision(17) << "rep,method,reject,statistic,p_value,error\n";
      for (const auto& rec : result.log) {
        if (rec.error) {
          log << rec.index + 1 << ",,,,,\"" << *rec.error << "\"\n";
          continue;
        }
        for (std::size_t m = 0; m < spec.methods.size(); ++m) {
          log << rec.index + 1 << ',' << to_string(spec.methods[m]) << ','
              << (rec.reject[m] ? 1 : 0) << ',' << rec.statistic[m] << ',' << rec.p_value[m]
              << ",\n";
        }
      }
    }
    if (!json_path.empty()) {
      json rates = json::array();
      for (const auto& r : result.rates) {
        rates.push_back({{"method", std::string(to_string(r.method))},
                         {"rate", r.rate},
                         {"stderr", r.standard_error},
                         {"rejections", r.rejections},
                         {"valid_reps", r.valid_reps}});
      }
      json report = {{"model", static_cast<int>(spec.model)},
                     {"structure", std::string(to_string(spec.structure.kind))},
                     {"d", spec.structure.d},
                     {"n1", spec.n1},
                     {"n2", spec.n2},
                     {"zeta", spec.zeta},
                     {"alpha", spec.alpha},
                     {"reps", spec.reps},
                     {"seed", spec.master_seed},
                     {"pseudo_asymptotic", spec.pseudo_asymptotic},
                     {"rates", rates},
                     {"warnings", result.warnings},
                     {"runtime_ms", runtime_ms}};
      if (!write_json(json_path, report, err)) return kUsageError;
    }
    return kNotRejected;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  const std::string usage =
      "usage: ucortest <command> [options]\n"
      "commands:\n"
      "  test       test equality of two correlation matrices from CSV/TSV files\n"
      "  simulate   Monte-Carlo size/power of the Kendall tests\n"
      "run 'ucortest <command> --help' for the options of a command\n";
  if (argc < 2) {
    err << usage;
    return kUsageError;
  }
  const std::string command = argv[1];
  std::vector<std::string> args(argv + 2, argv + argc);
  if (command == "test") return cmd_test(args, out, err);
  if (command == "simulate") return cmd_simulate(args, out, err);
  if (command == "--help" || command == "-h" || command == "help") {
    out << usage;
    return kNotRejected;
  }
  err << "unknown command '" << command << "'\n" << usage;
  return kUsageError;
}

}  // namespace ucortest::cli
