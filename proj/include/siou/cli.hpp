#pragma once

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "siou/box.hpp"
#include "siou/criteria.hpp"
#include "siou/error.hpp"
#include "siou/eval.hpp"
#include "siou/io.hpp"
#include "siou/loss.hpp"
#include "siou/random.hpp"
#include "siou/rating.hpp"
#include "siou/stats.hpp"
#include "siou/theory.hpp"

namespace siou::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

/// Everything a subcommand may read. Defaults are the built-in layer of the
/// flags > config file > defaults precedence.
struct RunConfig {
  std::string criterion = "iou";
  CriterionParams params = CriterionParams::evaluation_preset();

  std::vector<double> box_a;
  std::vector<double> box_b;

  std::vector<double> omegas;
  double max_shift = 40.0;
  double shift_step = 1.0;
  std::string direction;
  double size_ratio = 1.0;

  double sigma = 16.0;
  double sigma_slope = 0.0;
  std::size_t n = 100000;
  std::uint64_t seed = 0;
  std::string pdf = "none";
  std::size_t bins = 64;
  double bandwidth = 0.0;

  std::string theory_mode = "moments";
  std::size_t pdf_points = 199;

  std::string input;
  std::string thresholds = "0.5";
  std::string size = "all";
  std::string table = "summary";

  std::string analysis = "tau";
  std::string grouping = "size";

  double field = 512.0;
  double min_width = 4.0;
  double max_width = 256.0;
  bool rectangles = false;

  std::string output = "-";
  std::string format = "csv";
  std::string config_path;
};

namespace detail {

inline std::vector<double> default_omega_grid() { return {4, 8, 16, 32, 64, 128, 256}; }

inline std::vector<double> parse_thresholds(const std::string& text) {
  // "lo:hi" expands to lo, lo + 0.05, ..., hi; otherwise a comma list.
  if (const auto colon = text.find(':'); colon != std::string::npos) {
    const double lo = std::stod(text.substr(0, colon));
    const double hi = std::stod(text.substr(colon + 1));
    std::vector<double> out;
    for (int i = 0;; ++i) {
      const double t = lo + 0.05 * i;
      if (t > hi + 1e-9) {
        break;
      }
      out.push_back(std::round(t * 1e6) / 1e6);
    }
    return out;
  }
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find(',', start);
    const std::string tok = text.substr(start, end == std::string::npos ? std::string::npos
                                                                        : end - start);
    if (!tok.empty()) {
      out.push_back(std::stod(tok));
    }
    if (end == std::string::npos) {
      break;
    }
    start = end + 1;
  }
  return out;
}

inline ShiftDirection parse_direction(const std::string& s) {
  if (s == "horizontal") {
    return ShiftDirection::Horizontal;
  }
  if (s == "diagonal") {
    return ShiftDirection::Diagonal;
  }
  throw InvalidArgument("direction must be 'horizontal' or 'diagonal'");
}

inline Box corner_box(const std::vector<double>& v, const char* name) {
  if (v.size() != 4) {
    throw InvalidArgument(std::string("--") + name + " expects x_min,y_min,w,h");
  }
  try {
    return Box::from_corner(v[0], v[1], v[2], v[3]);
  } catch (const InvalidBox& e) {
    throw InvalidArgument(std::string("--") + name + ": " + e.what());
  }
}

inline std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) {
    throw InvalidArgument("cannot read config file '" + path + "'");
  }
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line.erase(hash);
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    if (!key.empty()) {
      kv[key] = trim(line.substr(eq + 1));
    }
  }
  return kv;
}

inline void add_criterion_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--id,--criterion", cfg.criterion,
                  "iou, giou, alpha-iou, nwd, siou or gsiou");
  sub->add_option("--gamma", cfg.params.gamma, "SIoU gamma (<= 1)");
  sub->add_option("--kappa", cfg.params.kappa, "SIoU kappa (> 0)");
  sub->add_option("--alpha", cfg.params.alpha, "alpha-IoU exponent (> 0)");
  sub->add_option("--nwd-c", cfg.params.nwd_constant, "NWD normalizing constant (> 0)");
}

inline void add_output_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("-o,--output", cfg.output, "output path, '-' for stdout");
  sub->add_option("--format", cfg.format, "csv or json");
}

inline void add_model_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--sigma", cfg.sigma, "shift standard deviation sigma_0 (pixels)");
  sub->add_option("--sigma-slope", cfg.sigma_slope, "sigma(omega) = sigma + slope * omega");
  sub->add_option("--direction", cfg.direction, "horizontal or diagonal");
  sub->add_option("--ratio", cfg.size_ratio, "ground-truth to prediction width ratio");
}

inline ShiftModel model_from(const RunConfig& cfg, ShiftDirection fallback) {
  ShiftModel m;
  m.direction = cfg.direction.empty() ? fallback : parse_direction(cfg.direction);
  m.sigma_base = cfg.sigma;
  m.sigma_slope = cfg.sigma_slope;
  m.size_ratio = cfg.size_ratio;
  m.validate();
  return m;
}

inline io::Table summary_table(CriterionId id, const ShiftModel& model,
                               const std::vector<DistributionSummary>& rows) {
  io::Table t{{"criterion", "omega", "sigma", "n", "mean", "std_dev", "std_error"}, {}};
  for (const auto& s : rows) {
    t.add_row({std::string(to_string(id)), s.omega, model.sigma(s.omega),
               static_cast<long long>(s.n_samples), s.mean, s.std_dev, s.std_error});
  }
  return t;
}

// Subcommand bodies. Each returns the table to write.

inline io::Table cmd_criterion(const RunConfig& cfg) {
  const CriterionId id = parse_criterion(cfg.criterion);
  const Box a = corner_box(cfg.box_a, "a");
  const Box b = corner_box(cfg.box_b, "b");
  io::Table t{{"criterion", "value"}, {}};
  t.add_row({std::string(to_string(id)), evaluate(id, a, b, cfg.params)});
  return t;
}

inline io::Table cmd_shift_curve(const RunConfig& cfg) {
  const CriterionId id = parse_criterion(cfg.criterion);
  if (!(cfg.shift_step > 0.0) || !(cfg.max_shift >= 0.0)) {
    throw InvalidArgument("--step must be > 0 and --max-shift >= 0");
  }
  const ShiftDirection dir =
      cfg.direction.empty() ? ShiftDirection::Diagonal : parse_direction(cfg.direction);
  std::vector<double> shifts;
  for (long long i = 0;; ++i) {
    const double s = static_cast<double>(i) * cfg.shift_step;
    if (s > cfg.max_shift + 1e-12) {
      break;
    }
    shifts.push_back(s);
  }
  const auto omegas = cfg.omegas.empty() ? default_omega_grid() : cfg.omegas;
  io::Table t{{"criterion", "omega", "shift", "value"}, {}};
  for (double omega : omegas) {
    for (const auto& pt : shift_curve(id, omega, shifts, dir, cfg.size_ratio, cfg.params)) {
      t.add_row({std::string(to_string(id)), omega, pt.shift, pt.value});
    }
  }
  return t;
}

inline io::Table cmd_simulate(const RunConfig& cfg) {
  const CriterionId id = parse_criterion(cfg.criterion);
  const ShiftModel model = model_from(cfg, ShiftDirection::Horizontal);
  if (cfg.omegas.size() != 1) {
    throw InvalidArgument("simulate takes exactly one --omega");
  }
  const double omega = cfg.omegas.front();
  const auto samples = simulate_criterion(id, omega, model, cfg.n, rng::derive_seed(cfg.seed, omega),
                                          cfg.params);
  if (cfg.pdf == "none") {
    auto s = summarize(samples);
    s.omega = omega;
    return summary_table(id, model, {s});
  }
  PdfOptions opts;
  std::tie(opts.lo, opts.hi) = criterion_range(id);
  if (cfg.pdf == "histogram") {
    opts.method = PdfMethod::Histogram;
    opts.bins = cfg.bins;
  } else if (cfg.pdf == "kde") {
    opts.method = PdfMethod::GaussianKde;
    if (cfg.bandwidth > 0.0) {
      opts.bandwidth = cfg.bandwidth;
    }
  } else {
    throw InvalidArgument("--pdf must be none, histogram or kde");
  }
  io::Table t{{"criterion", "omega", "z", "density"}, {}};
  for (const auto& pt : empirical_pdf(samples, opts)) {
    t.add_row({std::string(to_string(id)), omega, pt.z, pt.density});
  }
  return t;
}

inline io::Table cmd_moments(const RunConfig& cfg) {
  const CriterionId id = parse_criterion(cfg.criterion);
  const ShiftModel model = model_from(cfg, ShiftDirection::Horizontal);
  const auto omegas = cfg.omegas.empty() ? default_omega_grid() : cfg.omegas;
  return summary_table(id, model, moment_curve(id, omegas, model, cfg.n, cfg.seed, cfg.params));
}

inline io::Table cmd_theory(const RunConfig& cfg) {
  const auto omegas = cfg.omegas.empty() ? default_omega_grid() : cfg.omegas;
  std::vector<TheorySetup> setups;
  for (double omega : omegas) {
    setups.emplace_back(omega, cfg.sigma, cfg.params);
  }
  if (cfg.theory_mode == "pdf") {
    io::Table t{{"omega", "sigma", "z", "density"}, {}};
    if (cfg.pdf_points < 1) {
      throw InvalidArgument("--pdf-points must be >= 1");
    }
    for (const auto& s : setups) {
      for (std::size_t i = 1; i <= cfg.pdf_points; ++i) {
        const double z = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(cfg.pdf_points + 1);
        t.add_row({s.omega(), s.sigma(), z, giou_pdf(z, s)});
      }
    }
    return t;
  }
  const CriterionId id = parse_criterion(cfg.criterion);
  if (cfg.theory_mode == "moments") {
    io::Table t{{"criterion", "omega", "sigma", "a", "p", "mean", "second_moment", "variance"}, {}};
    for (const auto& s : setups) {
      const double m1 = theoretical_moment(id, 1, s);
      const double m2 = theoretical_moment(id, 2, s);
      const bool adaptive = id == CriterionId::SIoU || id == CriterionId::GSIoU;
      t.add_row({std::string(to_string(id)), s.omega(), s.sigma(), s.a(), adaptive ? s.p() : 1.0,
                 m1, m2, m2 - m1 * m1});
    }
    return t;
  }
  if (cfg.theory_mode == "consistency") {
    MonteCarloConfig mc;
    mc.n = cfg.n;
    mc.seed = cfg.seed;
    const CriterionId ids[] = {id};
    io::Table t{{"criterion", "order", "omega", "sigma", "a", "theory", "mc", "std_error", "z",
                 "flagged"},
                {}};
    for (const auto& r : moment_consistency_report(setups, ids, mc)) {
      t.add_row({std::string(to_string(r.criterion)), static_cast<long long>(r.order), r.omega,
                 r.sigma, r.a, r.theory, r.mc, r.std_error, r.z_score,
                 static_cast<long long>(r.flagged ? 1 : 0)});
    }
    return t;
  }
  throw InvalidArgument("--mode must be moments, consistency or pdf");
}

inline io::Table cmd_eval(const RunConfig& cfg) {
  EvalConfig ec;
  ec.criterion = parse_criterion(cfg.criterion);
  ec.params = cfg.params;
  try {
    ec.thresholds = parse_thresholds(cfg.thresholds);
  } catch (const std::logic_error&) {
    throw InvalidArgument("cannot parse --thresholds '" + cfg.thresholds + "'");
  }
  ec.validate();
  if (cfg.table != "summary" && cfg.table != "categories") {
    throw InvalidArgument("--table must be summary or categories");
  }
  MapReport report;
  if (cfg.size == "each") {
    const auto data = io::load_boxes(cfg.input);
    report = map_report_all_buckets(data.detections, data.ground_truth, ec);
  } else {
    if (cfg.size != "all") {
      ec.size_filter = parse_size_class(cfg.size);
    }
    const auto data = io::load_boxes(cfg.input);
    report = map_report(data.detections, data.ground_truth, ec);
  }
  const std::string crit(to_string(ec.criterion));
  auto opt_cell = [](const std::optional<double>& v) -> io::Cell {
    if (v) {
      return *v;
    }
    return std::monostate{};
  };
  if (cfg.table == "categories") {
    io::Table t{{"criterion", "category", "bucket", "threshold", "ap", "n_gt", "n_tp"}, {}};
    for (const auto& r : report.per_category) {
      t.add_row({crit, r.category, r.bucket, r.threshold, opt_cell(r.ap),
                 static_cast<long long>(r.n_ground_truth),
                 static_cast<long long>(r.n_true_positive)});
    }
    return t;
  }
  io::Table t{{"criterion", "bucket", "threshold", "map"}, {}};
  for (const auto& r : report.summary) {
    io::Cell thr = std::string("mean");
    if (r.threshold) {
      thr = *r.threshold;
    }
    t.add_row({crit, r.bucket, thr, opt_cell(r.map)});
  }
  return t;
}

inline io::Table cmd_rating(const RunConfig& cfg) {
  const auto records = io::load_ratings(cfg.input);
  if (cfg.analysis == "tau") {
    io::Table t{{"criterion", "tau"}, {}};
    if (cfg.criterion == "all") {
      for (CriterionId id : kAllCriteria) {
        t.add_row({std::string(to_string(id)), criterion_rating_correlation(records, id, cfg.params)});
      }
    } else {
      const CriterionId id = parse_criterion(cfg.criterion);
      t.add_row({std::string(to_string(id)), criterion_rating_correlation(records, id, cfg.params)});
    }
    return t;
  }
  if (cfg.analysis == "anova") {
    const Grouping g = parse_grouping(cfg.grouping);
    const auto groups = ratings_by_group(records, g);
    const auto r = one_way_anova(groups);
    io::Table t{{"grouping", "groups", "f", "p_value", "df_between", "df_within"}, {}};
    t.add_row({cfg.grouping, static_cast<long long>(groups.size()), r.f_statistic, r.p_value,
               r.df_between, r.df_within});
    return t;
  }
  const CriterionId id = parse_criterion(cfg.criterion);
  if (cfg.analysis == "gaps") {
    io::Table t{{"criterion", "rating", "size", "count", "cell_mean", "gap"}, {}};
    for (const auto& row : relative_gap(records, id, cfg.params)) {
      for (std::size_t s = 0; s < 3; ++s) {
        t.add_row({std::string(to_string(id)), static_cast<long long>(row.rating),
                   std::string(to_string(SizeClass(s))), static_cast<long long>(row.count[s]),
                   row.cell_mean[s], row.gap[s]});
      }
    }
    return t;
  }
  if (cfg.analysis == "groups") {
    io::Table t{{"criterion", "grouping", "group", "n", "mean_rating", "mean_criterion"}, {}};
    for (const auto& row : group_means(records, parse_grouping(cfg.grouping), id, cfg.params)) {
      t.add_row({std::string(to_string(id)), cfg.grouping, row.group,
                 static_cast<long long>(row.n), row.mean_rating, row.mean_criterion});
    }
    return t;
  }
  throw InvalidArgument("--analysis must be tau, gaps, groups or anova");
}

inline io::Table cmd_order_check(const RunConfig& cfg) {
  BoxSamplerConfig sampler{cfg.field, cfg.min_width, cfg.max_width, !cfg.rectangles};
  const auto r = order_preservation_rate(cfg.params, cfg.n, cfg.seed, sampler);
  io::Table t{{"gamma", "kappa", "triples", "violations", "resampled", "rate", "area_aligned",
                "area_aligned_violations"},
               {}};
  t.add_row({cfg.params.gamma, cfg.params.kappa, static_cast<long long>(r.triples),
             static_cast<long long>(r.violations), static_cast<long long>(r.resampled), r.rate,
             static_cast<long long>(r.area_aligned),
             static_cast<long long>(r.area_aligned_violations)});
  return t;
}

} // namespace detail

/// Parses argv, runs one subcommand and writes its table. Returns 0 on
/// success, 1 on usage errors, 2 on data errors and 3 on numerical failures;
/// diagnostics go to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  RunConfig cfg;
  CLI::App app{"Scale-adaptive box similarity criteria and their statistics", "siou"};
  app.require_subcommand(1);
  app.add_option("--config", cfg.config_path, "key=value file; flags take precedence");

  using namespace detail;
  std::map<std::string, std::pair<CLI::App*, std::function<io::Table(const RunConfig&)>>> subs;
  std::map<CLI::App*, bool> needs_seed;

  auto* crit = app.add_subcommand("criterion", "evaluate one criterion on a box pair");
  add_criterion_options(crit, cfg);
  crit->add_option("--a", cfg.box_a, "first box x_min,y_min,w,h")->delimiter(',')->expected(4);
  crit->add_option("--b", cfg.box_b, "second box x_min,y_min,w,h")->delimiter(',')->expected(4);
  add_output_options(crit, cfg);
  subs["criterion"] = {crit, cmd_criterion};

  auto* shift = app.add_subcommand("shift-curve", "criterion value against shift for square boxes");
  add_criterion_options(shift, cfg);
  shift->add_option("--omega", cfg.omegas, "box widths")->delimiter(',');
  shift->add_option("--max-shift", cfg.max_shift, "largest shift (pixels)");
  shift->add_option("--step", cfg.shift_step, "shift increment (pixels)");
  shift->add_option("--direction", cfg.direction, "horizontal or diagonal (default diagonal)");
  shift->add_option("--ratio", cfg.size_ratio, "ground-truth to prediction width ratio");
  add_output_options(shift, cfg);
  subs["shift-curve"] = {shift, cmd_shift_curve};

  auto* sim = app.add_subcommand("simulate", "Monte Carlo samples of a criterion at one width");
  add_criterion_options(sim, cfg);
  add_model_options(sim, cfg);
  sim->add_option("--omega", cfg.omegas, "box width")->delimiter(',');
  sim->add_option("--n", cfg.n, "number of samples");
  sim->add_option("--seed", cfg.seed, "master seed (required)");
  sim->add_option("--pdf", cfg.pdf, "none, histogram or kde");
  sim->add_option("--bins", cfg.bins, "histogram bins");
  sim->add_option("--bandwidth", cfg.bandwidth, "KDE bandwidth (default Silverman)");
  add_output_options(sim, cfg);
  subs["simulate"] = {sim, cmd_simulate};
  needs_seed[sim] = true;

  auto* mom = app.add_subcommand("moments", "Monte Carlo mean/std curve over box widths");
  add_criterion_options(mom, cfg);
  add_model_options(mom, cfg);
  mom->add_option("--omega", cfg.omegas, "box widths")->delimiter(',');
  mom->add_option("--n", cfg.n, "samples per width");
  mom->add_option("--seed", cfg.seed, "master seed (required)");
  add_output_options(mom, cfg);
  subs["moments"] = {mom, cmd_moments};
  needs_seed[mom] = true;

  auto* th = app.add_subcommand("theory", "quadrature moments, GIoU density, MC consistency");
  add_criterion_options(th, cfg);
  th->add_option("--omega", cfg.omegas, "box widths")->delimiter(',');
  th->add_option("--sigma", cfg.sigma, "shift standard deviation (pixels)");
  th->add_option("--mode", cfg.theory_mode, "moments, consistency or pdf");
  th->add_option("--pdf-points", cfg.pdf_points, "interior grid points for --mode pdf");
  th->add_option("--n", cfg.n, "Monte Carlo samples for --mode consistency");
  th->add_option("--seed", cfg.seed, "seed for --mode consistency");
  add_output_options(th, cfg);
  subs["theory"] = {th, cmd_theory};

  auto* ev = app.add_subcommand("eval", "criterion-thresholded mAP report");
  add_criterion_options(ev, cfg);
  ev->add_option("--input", cfg.input, "detection/ground-truth JSON file");
  ev->add_option("--thresholds", cfg.thresholds, "comma list or lo:hi in 0.05 steps");
  ev->add_option("--size", cfg.size, "all, small, medium, large or each");
  ev->add_option("--table", cfg.table, "summary or categories");
  add_output_options(ev, cfg);
  subs["eval"] = {ev, cmd_eval};

  auto* rt = app.add_subcommand("rating", "rank correlation, relative gaps, group means, ANOVA");
  add_criterion_options(rt, cfg);
  rt->add_option("--input", cfg.input, "rating CSV file");
  rt->add_option("--analysis", cfg.analysis, "tau, gaps, groups or anova");
  rt->add_option("--grouping", cfg.grouping, "size, context, expertise or age");
  add_output_options(rt, cfg);
  subs["rating"] = {rt, cmd_rating};

  auto* oc = app.add_subcommand("order-check", "rate at which SIoU preserves IoU's ordering");
  add_criterion_options(oc, cfg);
  oc->add_option("--n", cfg.n, "number of triples");
  oc->add_option("--seed", cfg.seed, "seed (required)");
  oc->add_option("--field", cfg.field, "side of the square field holding box centers");
  oc->add_option("--min-width", cfg.min_width, "smallest box width");
  oc->add_option("--max-width", cfg.max_width, "largest box width");
  oc->add_flag("--rectangles", cfg.rectangles, "draw width and height independently");
  add_output_options(oc, cfg);
  subs["order-check"] = {oc, cmd_order_check};
  needs_seed[oc] = true;

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) {
    args.emplace_back(argv[i]);
  }
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const auto& [sub, body] = subs.at(chosen->get_name());
  io::Table table;
  try {
    if (!cfg.config_path.empty()) {
      for (const auto& [key, value] : read_config_file(cfg.config_path)) {
        CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (opt != nullptr && opt->count() == 0) {
          opt->add_result(value);
          opt->run_callback();
        }
      }
    }
    if (needs_seed.count(sub) && sub->get_option("--seed")->count() == 0) {
      throw InvalidArgument(sub->get_name() + " requires --seed (flag or config file)");
    }
    cfg.params.validate();
    const io::Format format = io::parse_format(cfg.format);
    table = body(cfg);
    if (sub == crit && format == io::Format::Csv) {
      // A single value prints bare so the command composes in shell pipelines.
      io::write_text(io::format_number(std::get<double>(table.rows.front()[1])) + "\n", cfg.output,
                     out);
    } else {
      io::write_table(table, cfg.output, format, out);
    }
  } catch (const CLI::ParseError& e) {
    err << "siou: " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidArgument& e) {
    err << "siou: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    err << "siou: numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const DataError& e) {
    err << "siou: data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    err << "siou: error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}

} // namespace siou::cli
