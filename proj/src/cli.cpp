#include "rmt/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "rmt/analysis.hpp"
#include "rmt/dbm.hpp"
#include "rmt/ensembles.hpp"
#include "rmt/errors.hpp"
#include "rmt/gaussian_model.hpp"
#include "rmt/interlacing.hpp"
#include "rmt/moment_flow.hpp"
#include "rmt/report_io.hpp"
#include "rmt/secular.hpp"

namespace rmt::cli
{

using nlohmann::json;

namespace
{

struct Common
{
  std::uint64_t seed = 0;
  std::string out;
  std::string format;  // empty: the command's default
  int jobs = 0;
};

struct Output
{
  json result = json::object();
  std::string csv;  // empty when the command has no tabular form
  bool raw_csv_default = false;  // `sample` writes its CSV unless --format json
};

struct MatrixSource
{
  std::string input;
  std::string ensemble = "tournament";
  std::size_t n = 11;
  double scale = 1.0;
};

struct Loaded
{
  bool is_tournament = false;
  TournamentMatrix D;
  SkewMatrix W;
};

Loaded load_matrix(const MatrixSource &src, const Seed &seed)
{
  Loaded out;
  if (!src.input.empty())
  {
    std::ifstream is(src.input);
    if (!is)
    {
      throw InvalidInput("cannot open " + src.input);
    }
    std::string header;
    std::getline(is, header);
    is.seekg(0);
    if (header.rfind("# tournament", 0) == 0)
    {
      out.is_tournament = true;
      out.D = read_tournament_csv(is);
      out.W = tournament_to_skew(out.D);
    }
    else
    {
      out.W = read_skew_csv(is);
    }
    return out;
  }
  if (src.ensemble == "tournament")
  {
    out.is_tournament = true;
    out.D = sample_tournament(src.n, seed);
    out.W = tournament_to_skew(out.D);
  }
  else if (src.ensemble == "pm1")
  {
    out.W = sample_skew_pm1(src.n, seed);
  }
  else if (src.ensemble == "gaussian")
  {
    out.W = sample_skew_gaussian(src.n, seed, src.scale);
  }
  else
  {
    throw InvalidInput("unknown ensemble '" + src.ensemble + "' (tournament, pm1, gaussian)");
  }
  return out;
}

void add_source(CLI::App *sub, MatrixSource &src)
{
  sub->add_option("--input", src.input, "matrix CSV (tournament or skew)");
  sub->add_option("--ensemble", src.ensemble, "tournament, pm1 or gaussian");
  sub->add_option("--n", src.n, "matrix size")->check(CLI::PositiveNumber);
  sub->add_option("--scale", src.scale, "entry standard deviation (gaussian)");
}

json complex_json(Complex z)
{
  return json{{"re", z.real()}, {"im", z.imag()}};
}

json vector_json(const Eigen::VectorXd &v)
{
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json estimate_json(const MeanEstimate &m)
{
  return json{{"mean", m.mean}, {"std_error", m.std_error}, {"count", m.count}};
}

json proportion_json(const ProportionEstimate &p)
{
  return json{{"successes", p.successes}, {"trials", p.trials}, {"rate", p.defined ? json(p.rate) : json(nullptr)},
              {"lower", p.lower}, {"upper", p.upper}};
}

std::string csv_lines(const std::vector<std::vector<double>> &rows, const std::string &header)
{
  std::string out = header + "\n";
  for (const auto &r : rows)
  {
    out += csv_row(r) + "\n";
  }
  return out;
}

json interlace_json(const InterlaceReport &rep, bool verbose)
{
  json trials = json::array();
  for (const auto &r : rep.records)
  {
    json t{{"trial", r.trial}, {"ok", r.ok}};
    if (!r.ok)
    {
      t["error"] = r.error;
    }
    else
    {
      t["start"] = r.start;
      t["interlaced"] = r.interlaced;
      t["boundary_degenerate"] = r.boundary_degenerate;
      t["max_re_deviation"] = r.max_re_deviation;
      t["real_root_deviation"] = r.real_root_deviation;
      t["max_polish_shift"] = r.max_polish_shift;
      json gaps = json::array();
      for (const auto &g : r.matches)
      {
        json m{{"gap", g.gap}, {"lower", g.lower}, {"upper", g.upper}, {"outcome", to_string(g.outcome)}};
        if (g.root)
        {
          m["root"] = complex_json(*g.root);
        }
        gaps.push_back(m);
      }
      t["gaps"] = gaps;
    }
    trials.push_back(t);
  }
  json failures = json::array();
  for (const auto &r : rep.records)
  {
    if (!r.ok)
    {
      failures.push_back(json{{"trial", r.trial}, {"error", r.error}});
    }
  }
  json doc{{"ensemble", rep.ensemble},
              {"n", rep.n},
              {"trials", rep.trials},
              {"alpha", rep.options.alpha},
              {"n_gaps", rep.options.n_gaps},
              {"solver_failures", rep.solver_failures},
              {"degenerate", rep.degenerate},
              {"ambiguous", rep.ambiguous},
              {"interlace_rate", proportion_json(rep.interlace_rate)},
              {"re_within_rate", proportion_json(rep.re_within_rate)},
              {"re_tolerance", rep.re_tolerance},
              {"real_root_rate", proportion_json(rep.real_root_rate)},
              {"median_real_root_deviation", rep.median_real_root_deviation},
              {"failures", failures}};
  if (verbose)
  {
    doc["records"] = trials;
  }
  return doc;
}

std::string interlace_csv(const InterlaceReport &rep)
{
  std::string out = "trial,ok,start,interlaced,boundary_degenerate,max_re_deviation,real_root_deviation\n";
  for (const auto &r : rep.records)
  {
    out += std::to_string(r.trial) + "," + (r.ok ? "1" : "0") + "," + std::to_string(r.start) + "," +
           (r.interlaced ? "1" : "0") + "," + (r.boundary_degenerate ? "1" : "0") + "," +
           format_double(r.max_re_deviation) + "," + format_double(r.real_root_deviation) + "\n";
  }
  return out;
}

// Option values as JSON: numbers and booleans typed, everything else a string.
json option_value(const CLI::Option *opt)
{
  auto scalar = [](const std::string &s) -> json {
    if (s == "true" || s == "false")
    {
      return s == "true";
    }
    try
    {
      std::size_t used = 0;
      if (s.find_first_of(".eEn") == std::string::npos)
      {
        const long long v = std::stoll(s, &used);
        if (used == s.size())
        {
          return v;
        }
      }
      const double d = parse_double(s);
      return d;
    }
    catch (const std::exception &)
    {
      return s;
    }
  };
  const auto &res = opt->results();
  if (opt->get_expected_max() > 1)
  {
    json arr = json::array();
    for (const auto &r : res)
    {
      arr.push_back(scalar(r));
    }
    return arr;
  }
  if (res.empty())
  {
    return nullptr;
  }
  return scalar(res.back());
}

std::string long_name(const std::string &token)
{
  if (token.rfind("--", 0) != 0 || token.size() < 3)
  {
    return {};
  }
  return token.substr(2, token.find('=') == std::string::npos ? std::string::npos : token.find('=') - 2);
}

std::string config_scalar(const json &v)
{
  if (v.is_string())
  {
    return v.get<std::string>();
  }
  if (v.is_boolean())
  {
    return v.get<bool>() ? "true" : "false";
  }
  if (v.is_number_float())
  {
    return format_double(v.get<double>());
  }
  return v.dump();
}

// Expands --config into flags placed before the command-line flags it does not override.
std::vector<std::string> expand_config(const std::vector<std::string> &args)
{
  std::vector<std::string> rest;
  std::string path;
  for (std::size_t k = 0; k < args.size(); k++)
  {
    if (args[k] == "--config")
    {
      if (k + 1 >= args.size())
      {
        throw CLI::ArgumentMismatch("--config needs a file");
      }
      path = args[++k];
    }
    else if (args[k].rfind("--config=", 0) == 0)
    {
      path = args[k].substr(9);
    }
    else
    {
      rest.push_back(args[k]);
    }
  }
  if (path.empty())
  {
    return rest;
  }
  std::ifstream is(path);
  if (!is)
  {
    throw InvalidInput("cannot open config " + path);
  }
  json cfg;
  try
  {
    cfg = json::parse(is);
  }
  catch (const json::exception &e)
  {
    throw InvalidInput(std::string("config is not valid JSON: ") + e.what());
  }
  if (!cfg.is_object())
  {
    throw InvalidInput("config must be a JSON object");
  }
  std::set<std::string> given;
  for (const auto &a : rest)
  {
    given.insert(long_name(a));
  }
  std::vector<std::string> out;
  std::size_t first_flag = 0;
  if (!rest.empty() && rest[0].rfind("-", 0) != 0)
  {
    out.push_back(rest[0]);
    first_flag = 1;
  }
  else if (cfg.contains("command"))
  {
    out.push_back(cfg["command"].get<std::string>());
  }
  const json &params = cfg.contains("params") ? cfg["params"] : cfg;
  for (const auto &[key, value] : params.items())
  {
    if (key == "command" || given.count(key) || value.is_null())
    {
      continue;
    }
    if (value.is_array())
    {
      for (const auto &v : value)
      {
        out.push_back("--" + key + "=" + config_scalar(v));
      }
    }
    else
    {
      out.push_back("--" + key + "=" + config_scalar(value));
    }
  }
  out.insert(out.end(), rest.begin() + static_cast<long>(first_flag), rest.end());
  return out;
}

void write_text(const std::string &path, const std::string &text, std::ostream &out)
{
  if (path.empty())
  {
    out << text;
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os)
  {
    throw InvalidInput("cannot write " + path);
  }
  os << text;
}

json error_json(const std::exception &e)
{
  json j{{"message", e.what()}};
  if (const auto *x = dynamic_cast<const NoConvergence *>(&e))
  {
    j["error"] = "no-convergence";
    j["best_residual"] = x->best_residual;
  }
  else if (const auto *x = dynamic_cast<const PoleProximity *>(&e))
  {
    j["error"] = "pole-proximity";
    j["nearest_pole"] = x->nearest_pole;
  }
  else if (const auto *x = dynamic_cast<const StepFailure *>(&e))
  {
    j["error"] = "step-failure";
    j["time"] = x->time;
  }
  else if (const auto *x = dynamic_cast<const StabilityViolation *>(&e))
  {
    j["error"] = "stability-violation";
    j["required_dt"] = x->required_dt;
  }
  else if (dynamic_cast<const SecularAnomaly *>(&e))
  {
    j["error"] = "secular-anomaly";
  }
  else if (dynamic_cast<const StructuralError *>(&e))
  {
    j["error"] = "structural-error";
  }
  else if (dynamic_cast<const SingularCoefficient *>(&e))
  {
    j["error"] = "singular-coefficient";
  }
  else if (dynamic_cast<const InvalidInput *>(&e))
  {
    j["error"] = "invalid-input";
  }
  else
  {
    j["error"] = "numerical-error";
  }
  return j;
}

}  // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
{
  CLI::App app{"Random anti-symmetric matrix laboratory", "rmt_lab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", lab_version);
  app.add_option("--config", "JSON config; flags on the command line win");
  app.footer("Exit codes: 0 ok, 1 usage error, 2 numerical failure. RMT_LAB_JOBS sets the default --jobs.");

  Common common;
  std::map<std::string, std::function<Output()>> actions;
  auto add_common = [&](CLI::App *sub) {
    sub->add_option("--seed", common.seed, "master seed");
    sub->add_option("--out", common.out, "output file (default stdout)");
    sub->add_option("--format", common.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--jobs", common.jobs, "worker threads (0: RMT_LAB_JOBS or all cores)");
  };
  auto seed = [&] { return Seed{common.seed, 0}; };

  // sample
  MatrixSource sample_src;
  {
    auto *sub = app.add_subcommand("sample", "draw one matrix");
    sub->add_option("--ensemble", sample_src.ensemble, "tournament, pm1, gaussian or gue");
    sub->add_option("--n", sample_src.n, "matrix size")->check(CLI::PositiveNumber);
    sub->add_option("--scale", sample_src.scale, "entry standard deviation (gaussian)");
    add_common(sub);
    actions["sample"] = [&] {
      Output o;
      o.raw_csv_default = true;
      std::ostringstream os;
      if (sample_src.ensemble == "gue")
      {
        const Eigen::MatrixXcd G = sample_gue(sample_src.n, seed()).dense();
        json re = json::array(), im = json::array();
        for (Eigen::Index i = 0; i < G.rows(); i++)
        {
          std::vector<double> r(static_cast<std::size_t>(G.cols())), c(static_cast<std::size_t>(G.cols()));
          for (Eigen::Index j = 0; j < G.cols(); j++)
          {
            r[static_cast<std::size_t>(j)] = G(i, j).real();
            c[static_cast<std::size_t>(j)] = G(i, j).imag();
            os << (j ? "," : "") << format_double(G(i, j).real()) << "," << format_double(G(i, j).imag());
          }
          os << "\n";
          re.push_back(r);
          im.push_back(c);
        }
        o.result = json{{"ensemble", "gue"}, {"n", sample_src.n}, {"re", re}, {"im", im}};
        o.csv = os.str();
        return o;
      }
      const Loaded m = load_matrix(sample_src, seed());
      if (m.is_tournament)
      {
        write_tournament_csv(os, m.D);
        const Eigen::MatrixXi D = m.D.dense();
        json rows = json::array();
        for (Eigen::Index i = 0; i < D.rows(); i++)
        {
          json r = json::array();
          for (Eigen::Index j = 0; j < D.cols(); j++)
          {
            r.push_back(D(i, j));
          }
          rows.push_back(r);
        }
        o.result = json{{"ensemble", "tournament"}, {"n", sample_src.n}, {"matrix", rows}};
      }
      else
      {
        write_skew_csv(os, m.W);
        const Eigen::MatrixXd W = m.W.dense();
        json rows = json::array();
        for (Eigen::Index i = 0; i < W.rows(); i++)
        {
          json r = json::array();
          for (Eigen::Index j = 0; j < W.cols(); j++)
          {
            r.push_back(W(i, j));
          }
          rows.push_back(r);
        }
        o.result = json{{"ensemble", sample_src.ensemble}, {"n", sample_src.n}, {"matrix", rows}};
      }
      o.csv = os.str();
      return o;
    };
  }

  // spectrum
  MatrixSource spectrum_src;
  bool spectrum_vectors = false;
  {
    auto *sub = app.add_subcommand("spectrum", "eigenvalues of M = iW");
    add_source(sub, spectrum_src);
    sub->add_flag("--vectors", spectrum_vectors, "also report |v_j| overlaps with the all-ones direction");
    add_common(sub);
    actions["spectrum"] = [&] {
      const Loaded m = load_matrix(spectrum_src, seed());
      const SkewSpectrum spec =
          eigen_skew(m.W, spectrum_vectors ? SpectrumJob::values_and_vectors : SpectrumJob::values_only);
      Output o;
      o.result = json{{"n", spec.n}, {"values", vector_json(spec.values)}};
      std::vector<std::vector<double>> rows;
      std::vector<double> overlaps;
      for (Eigen::Index k = 0; k < spec.values.size(); k++)
      {
        std::vector<double> row{static_cast<double>(spec.label(static_cast<std::size_t>(k))), spec.values(k)};
        if (spectrum_vectors)
        {
          const double w = std::norm(spec.vectors.col(k).sum());
          overlaps.push_back(w);
          row.push_back(w);
        }
        rows.push_back(row);
      }
      if (spectrum_vectors)
      {
        o.result["ones_overlap"] = overlaps;
      }
      o.csv = csv_lines(rows, spectrum_vectors ? "label,value,ones_overlap" : "label,value");
      return o;
    };
  }

  // secular
  MatrixSource secular_src;
  bool secular_polish = true;
  {
    auto *sub = app.add_subcommand("secular", "eigenvalues of W + 11^T (2D + I for tournaments) via the secular equation");
    add_source(sub, secular_src);
    sub->add_option("--polish", secular_polish, "inverse-iteration polishing (true/false)");
    add_common(sub);
    actions["secular"] = [&] {
      const Loaded m = load_matrix(secular_src, seed());
      const SkewSpectrum spec = eigen_skew(m.W);
      const Eigen::MatrixXd Wd = m.W.dense();
      const auto n = static_cast<Eigen::Index>(m.W.size());
      const Eigen::MatrixXcd A = (Wd + Eigen::MatrixXd::Ones(n, n)).cast<Complex>();
      SolveOptions opt;
      opt.polish = secular_polish;
      const PerturbedSpectrum ps = solve_perturbed(build_secular(spec), spec, A, opt);
      Output o;
      json roots = json::array();
      std::string csv = "re,im,tag,residual,interval_index\n";
      for (const auto &r : ps.roots)
      {
        roots.push_back(json{{"re", r.value.real()},
                             {"im", r.value.imag()},
                             {"tag", to_string(r.tag)},
                             {"residual", r.residual},
                             {"interval_index", r.interval_index}});
        csv += format_double(r.value.real()) + "," + format_double(r.value.imag()) + "," + to_string(r.tag) + "," +
               format_double(r.residual) + "," + std::to_string(r.interval_index) + "\n";
      }
      json failures = json::array();
      for (const auto &f : ps.failures)
      {
        failures.push_back(json{{"interval_index", f.interval_index}, {"reason", f.reason}});
      }
      o.result = json{{"schema_version", report_schema_version},
                      {"n", m.W.size()},
                      {"sum_re", ps.sum().real()},
                      {"roots", roots},
                      {"failures", failures}};
      o.csv = csv;
      return o;
    };
  }

  // interlace and gue-interlace
  std::size_t il_n = 201, il_trials = 200;
  InterlaceOptions il_opt;
  long il_index = -1;
  bool il_verbose = false;
  auto add_interlace = [&](CLI::App *sub) {
    sub->add_option("--n", il_n, "matrix size")->check(CLI::PositiveNumber);
    sub->add_option("--trials", il_trials, "number of trials");
    sub->add_option("--alpha", il_opt.alpha, "bulk fraction excluded at each end");
    sub->add_option("--gaps", il_opt.n_gaps, "consecutive gaps per trial");
    sub->add_option("--index", il_index, "fixed starting gap (default: uniform over the bulk)");
    sub->add_option("--re-exponent", il_opt.re_exponent, "real-part tolerance n^-x");
    sub->add_flag("--verbose", il_verbose, "include per-trial records");
    add_common(sub);
  };
  auto interlace_output = [&](bool gue) {
    il_opt.jobs = common.jobs;
    if (il_index >= 0)
    {
      il_opt.fixed_index = static_cast<std::size_t>(il_index);
    }
    const InterlaceReport rep =
        gue ? run_gue_variant(il_n, il_trials, il_opt, seed()) : run_interlace_experiment(il_n, il_trials, il_opt, seed());
    Output o;
    o.result = interlace_json(rep, il_verbose);
    o.csv = interlace_csv(rep);
    return o;
  };
  add_interlace(app.add_subcommand("interlace", "tournament interlacing experiment"));
  actions["interlace"] = [&] { return interlace_output(false); };
  add_interlace(app.add_subcommand("gue-interlace", "GUE plus rank-one imaginary perturbation"));
  actions["gue-interlace"] = [&] { return interlace_output(true); };

  // kernel
  int k_N = 101;
  std::string k_regime = "origin";
  double k_energy = 1.0, k_half = 2.0;
  int k_per_side = 9;
  bool k_integral = false;
  {
    auto *sub = app.add_subcommand("kernel", "odd-Hermite kernel against its sine-kernel limit");
    sub->add_option("--N", k_N, "odd matrix size");
    sub->add_option("--regime", k_regime, "origin or bulk")->check(CLI::IsMember({"origin", "bulk"}));
    sub->add_option("--energy", k_energy, "bulk energy in (0, 2)");
    sub->add_option("--half-width", k_half, "scaled window half width");
    sub->add_option("--per-side", k_per_side, "grid points per side");
    sub->add_flag("--integral", k_integral, "also integrate the kernel diagonal");
    add_common(sub);
    actions["kernel"] = [&] {
      const auto rec = sine_limit_check(k_N, square_grid(k_half, k_per_side),
                                        k_regime == "origin" ? LimitRegime::origin : LimitRegime::bulk, k_energy);
      Output o;
      std::vector<std::vector<double>> rows;
      for (std::size_t k = 0; k < rec.points.size(); k++)
      {
        rows.push_back({rec.points[k].first, rec.points[k].second, rec.normalized[k], rec.limit[k],
                        rec.abs_difference[k], rec.printed_normalized[k], rec.printed_limit[k]});
      }
      o.result = json{{"N", rec.N},
                      {"regime", k_regime},
                      {"energy", rec.energy},
                      {"sup_difference", rec.sup_difference},
                      {"limit_scale", rec.limit_scale},
                      {"normalized", rec.normalized},
                      {"limit", rec.limit},
                      {"printed_normalized", rec.printed_normalized},
                      {"printed_limit", rec.printed_limit}};
      if (k_integral)
      {
        o.result["diagonal_integral"] = kernel_diagonal_integral(k_N);
      }
      o.csv = csv_lines(rows, "X,Y,normalized,limit,abs_difference,printed_normalized,printed_limit");
      return o;
    };
  }

  // density
  int d_N = 11;
  std::vector<double> d_lambdas, d_points;
  {
    auto *sub = app.add_subcommand("density", "joint density and correlation determinants of the Gaussian model");
    sub->add_option("--N", d_N, "odd matrix size");
    sub->add_option("--lambdas", d_lambdas, "(N-1)/2 positive eigenvalues for the joint log density");
    sub->add_option("--points", d_points, "points for the correlation determinant");
    add_common(sub);
    actions["density"] = [&] {
      Output o;
      o.result = json{{"N", d_N}};
      if (!d_lambdas.empty())
      {
        const double v = joint_density_log(d_N, d_lambdas);
        o.result["log_density"] = std::isfinite(v) ? json(v) : json("-inf");
      }
      if (!d_points.empty())
      {
        const auto c = correlation_det(d_N, d_points);
        o.result["determinant"] = c.determinant;
        o.result["prefactor"] = c.prefactor;
        o.result["correlation"] = c.value();
      }
      if (d_lambdas.empty() && d_points.empty())
      {
        std::vector<std::vector<double>> rows;
        for (int k = -80; k <= 80; k++)
        {
          const double x = 0.05 * k * std::sqrt(d_N - 1.0);
          rows.push_back({x, kernel_KN(d_N, x, x)});
        }
        o.csv = csv_lines(rows, "x,one_point");
        json xs = json::array(), ys = json::array();
        for (const auto &r : rows)
        {
          xs.push_back(r[0]);
          ys.push_back(r[1]);
        }
        o.result["x"] = xs;
        o.result["one_point"] = ys;
      }
      return o;
    };
  }

  // dbm
  std::size_t b_n = 5, b_paths = 1000;
  double b_t = 0.1, b_dt = 1e-3;
  {
    auto *sub = app.add_subcommand("dbm", "matrix flow against the eigenvalue SDE");
    sub->add_option("--n", b_n, "matrix size");
    sub->add_option("--t", b_t, "terminal time");
    sub->add_option("--dt", b_dt, "time step");
    sub->add_option("--paths", b_paths, "independent paths");
    add_common(sub);
    actions["dbm"] = [&] {
      const SkewMatrix M0 = sample_skew_gaussian(b_n, Seed{common.seed, 7}, 1.0 / std::sqrt(static_cast<double>(b_n)));
      const DbmComparison c = compare_dbm(M0, b_t, b_dt, b_paths, seed(), common.jobs);
      Output o;
      o.result = json{{"n", c.n},
                      {"t", c.T},
                      {"dt", c.dt},
                      {"paths", c.paths},
                      {"lambda0", vector_json(c.lambda0)},
                      {"matrix_sum_sq", estimate_json(c.matrix_sum_sq)},
                      {"sde_sum_sq", estimate_json(c.sde_sum_sq)},
                      {"expected_sum_sq", c.expected_sum_sq},
                      {"matrix_max", estimate_json(c.matrix_max)},
                      {"sde_max", estimate_json(c.sde_max)},
                      {"z_sum_sq", c.z_sum_sq},
                      {"z_max", c.z_max}};
      return o;
    };
  }

  // momentflow
  std::size_t f_sites = 3;
  int f_particles = 2;
  std::string f_mode = "antisymmetric", f_init = "sampled";
  std::vector<double> f_times{0.0, 0.5, 1.0, 2.0};
  double f_dt = 0.0;
  {
    auto *sub = app.add_subcommand("momentflow", "eigenvector moment flow convergence report");
    sub->add_option("--sites", f_sites, "number of sites");
    sub->add_option("--particles", f_particles, "number of particles");
    sub->add_option("--mode", f_mode, "hermitian or antisymmetric")->check(CLI::IsMember({"hermitian", "antisymmetric"}));
    sub->add_option("--init", f_init, "ones, synthetic or sampled (antisymmetric only)")
        ->check(CLI::IsMember({"ones", "synthetic", "sampled"}));
    sub->add_option("--t-list", f_times, "report times");
    sub->add_option("--dt", f_dt, "RK4 step (0: automatic)");
    add_common(sub);
    actions["momentflow"] = [&] {
      const bool as = f_mode == "antisymmetric";
      const FlowMode mode = as ? FlowMode::antisymmetric : FlowMode::hermitian;
      const std::size_t positive = as ? f_sites - 1 : f_sites;
      if (as && f_sites < 2)
      {
        throw InvalidInput("momentflow: antisymmetric mode needs at least two sites");
      }
      double N = as ? static_cast<double>(2 * (f_sites - 1) + 1) : static_cast<double>(f_sites);
      Eigen::VectorXd lam(static_cast<Eigen::Index>(positive));
      Eigen::VectorXd table;
      if (f_init == "sampled")
      {
        if (!as)
        {
          throw InvalidInput("momentflow: sampled initial tables need antisymmetric mode");
        }
        const auto n = static_cast<std::size_t>(N);
        const SkewSpectrum spec = eigen_skew(sample_skew_pm1(n, seed()));
        lam = spec.values.tail(static_cast<Eigen::Index>(positive)) / std::sqrt(N);
        std::vector<Eigen::VectorXd> probes;
        for (std::size_t k = 0; k < n; k++)
        {
          probes.push_back(Eigen::VectorXd::Unit(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k)));
        }
        table = antisymmetric_moment_table(spec, ConfigurationSpace(f_sites, f_particles), probes);
      }
      else
      {
        for (Eigen::Index k = 0; k < lam.size(); k++)
        {
          lam(k) = (as ? 2.0 : 4.0) * static_cast<double>(k + 1) / static_cast<double>(lam.size()) - (as ? 0.0 : 2.0);
        }
      }
      FlowState state = make_flow_state(mode, N, frozen_eigenvalues(lam), f_sites, f_particles);
      if (f_init == "sampled")
      {
        state.table = table;
      }
      else if (f_init == "synthetic")
      {
        CounterRng rng(seed());
        for (Eigen::Index k = 0; k < state.table.size(); k++)
        {
          state.table(k) = 1.0 + (rng.uniform() - 0.5);
        }
      }
      std::vector<double> times = f_times;
      std::sort(times.begin(), times.end());
      const std::vector<double> dev = convergence_report(state, times, f_dt);
      Output o;
      std::vector<std::vector<double>> rows;
      for (std::size_t k = 0; k < times.size(); k++)
      {
        rows.push_back({times[k], dev[k]});
      }
      o.result = json{{"mode", f_mode},
                      {"sites", f_sites},
                      {"particles", f_particles},
                      {"configurations", state.space.size()},
                      {"eigenvalues", vector_json(lam)},
                      {"max_rate", max_rate(state, 0.0)},
                      {"times", times},
                      {"deviation", dev}};
      o.csv = csv_lines(rows, "t,deviation");
      return o;
    };
  }

  // localsc
  std::size_t l_n = 1000, l_trials = 50;
  std::vector<double> l_energies{-1.0, -0.5, 0.0, 0.5, 1.0};
  double l_eta_exp = 0.5, l_thr_exp = 0.4;
  bool l_ks = false;
  {
    auto *sub = app.add_subcommand("localsc", "local semicircle law scan on +-1 matrices");
    sub->add_option("--n", l_n, "matrix size");
    sub->add_option("--trials", l_trials, "number of trials");
    sub->add_option("--energies", l_energies, "energies E");
    sub->add_option("--eta-exponent", l_eta_exp, "eta = n^-x");
    sub->add_option("--threshold-exponent", l_thr_exp, "deviation bound n^-x");
    sub->add_flag("--ks", l_ks, "also report the KS distance to the semicircle per trial");
    add_common(sub);
    actions["localsc"] = [&] {
      const LocalLawReport rep = run_local_law(l_n, l_trials, l_energies, seed(), common.jobs, l_eta_exp, l_thr_exp);
      Output o;
      o.result = json{{"n", rep.n},
                      {"trials", rep.trials},
                      {"energies", rep.energies},
                      {"eta", rep.eta},
                      {"threshold", rep.threshold},
                      {"within", proportion_json(rep.within)},
                      {"deviations", rep.deviations}};
      if (l_ks)
      {
        const SemicircleReport sc = run_semicircle(l_n, l_trials, seed(), common.jobs);
        o.result["semicircle_ks"] = sc.ks;
        o.result["mean_semicircle_ks"] = sc.mean_ks;
      }
      std::vector<std::vector<double>> rows;
      for (std::size_t t = 0; t < rep.trials; t++)
      {
        for (std::size_t e = 0; e < rep.energies.size(); e++)
        {
          rows.push_back({static_cast<double>(t), rep.energies[e], rep.deviations[t * rep.energies.size() + e]});
        }
      }
      o.csv = csv_lines(rows, "trial,energy,deviation");
      return o;
    };
  }

  // rigidity
  std::size_t r_n = 1001, r_trials = 50;
  double r_exp = 0.9, r_alpha = 0.25;
  {
    auto *sub = app.add_subcommand("rigidity", "bulk eigenvalue deviation from classical locations");
    sub->add_option("--n", r_n, "matrix size");
    sub->add_option("--trials", r_trials, "number of trials");
    sub->add_option("--threshold-exponent", r_exp, "deviation bound n^-x");
    sub->add_option("--alpha", r_alpha, "bulk fraction excluded at each end");
    add_common(sub);
    actions["rigidity"] = [&] {
      const RigidityExperiment rep = run_rigidity(r_n, r_trials, seed(), common.jobs, r_exp, r_alpha);
      Output o;
      o.result = json{{"n", rep.n},
                      {"trials", rep.trials},
                      {"threshold", rep.threshold},
                      {"within", proportion_json(rep.within)},
                      {"median", rep.median},
                      {"q90", rep.q90},
                      {"max_deviations", rep.max_deviations}};
      std::vector<std::vector<double>> rows;
      for (std::size_t t = 0; t < rep.trials; t++)
      {
        rows.push_back({static_cast<double>(t), rep.max_deviations[t]});
      }
      o.csv = csv_lines(rows, "trial,max_deviation");
      return o;
    };
  }

  // gaps
  std::size_t g_n = 201, g_trials = 2000;
  std::string g_a = "pm1", g_b = "gaussian", g_obs = "bump", g_scale = "density", g_size = "n";
  double g_fraction = 0.5;
  std::size_t g_window = 1;
  {
    auto *sub = app.add_subcommand("gaps", "gap observable comparison between two ensembles");
    sub->add_option("--n", g_n, "matrix size");
    sub->add_option("--trials", g_trials, "trials per ensemble");
    sub->add_option("--ensemble-a", g_a, "pm1 or gaussian");
    sub->add_option("--ensemble-b", g_b, "pm1 or gaussian");
    sub->add_option("--observable", g_obs, "bump or cosine");
    sub->add_option("--scale", g_scale, "raw or density")->check(CLI::IsMember({"raw", "density"}));
    sub->add_option("--fraction", g_fraction, "bulk position of the first gap among positive eigenvalues");
    sub->add_option("--window", g_window, "consecutive gaps per trial");
    sub->add_option("--gaussian-size", g_size, "size of ensemble b: n, n-1 or both")
        ->check(CLI::IsMember({"n", "n-1", "both"}));
    add_common(sub);
    actions["gaps"] = [&] {
      GapOptions opt;
      opt.ensemble_a = parse_gap_ensemble(g_a);
      opt.ensemble_b = parse_gap_ensemble(g_b);
      opt.observable = parse_gap_observable(g_obs);
      opt.scale = g_scale == "raw" ? GapScale::raw : GapScale::density;
      opt.size_a = g_n;
      opt.bulk_fraction = g_fraction;
      opt.window = g_window;
      opt.seed_a = Seed{common.seed, 0};
      opt.seed_b = Seed{common.seed, 1};
      opt.jobs = common.jobs;
      auto side_json = [](const GapSide &s) {
        return json{{"ensemble", s.ensemble},
                    {"n", s.n},
                    {"first_gap", s.first_gap},
                    {"estimate", estimate_json(s.estimate)},
                    {"raw_gap_q05", quantile(s.raw_gaps, 0.05)},
                    {"raw_gap_q95", quantile(s.raw_gaps, 0.95)},
                    {"density_gap_q05", quantile(s.density_gaps, 0.05)},
                    {"density_gap_q95", quantile(s.density_gaps, 0.95)}};
      };
      Output o;
      json comparisons = json::array();
      std::string csv = "size_b,mean_a,mean_b,difference,combined_std_error,z_score\n";
      std::vector<std::size_t> sizes;
      if (g_size != "n-1")
      {
        sizes.push_back(g_n);
      }
      if (g_size != "n")
      {
        sizes.push_back(g_n - 1);
      }
      for (std::size_t nb : sizes)
      {
        opt.size_b = nb;
        const GapComparison c = gap_statistics(g_trials, opt);
        comparisons.push_back(json{{"a", side_json(c.a)},
                                   {"b", side_json(c.b)},
                                   {"difference", c.difference},
                                   {"combined_std_error", c.combined_std_error},
                                   {"z_score", c.z_score}});
        csv += csv_row({static_cast<double>(nb), c.a.estimate.mean, c.b.estimate.mean, c.difference,
                        c.combined_std_error, c.z_score}) +
               "\n";
      }
      o.result = json{{"observable", g_obs}, {"scale", g_scale}, {"comparisons", comparisons}};
      o.csv = csv;
      return o;
    };
  }

  // overlap
  std::size_t v_n = 400, v_trials = 100, v_labels = 20;
  double v_alpha = 0.25;
  {
    auto *sub = app.add_subcommand("overlap", "eigenvector overlaps with the flat vector against Rayleigh");
    sub->add_option("--n", v_n, "matrix size");
    sub->add_option("--trials", v_trials, "number of matrices");
    sub->add_option("--labels", v_labels, "bulk eigenvectors per matrix");
    sub->add_option("--alpha", v_alpha, "bulk fraction excluded at each end");
    add_common(sub);
    actions["overlap"] = [&] {
      const Eigen::VectorXd q =
          Eigen::VectorXd::Constant(static_cast<Eigen::Index>(v_n), 1.0 / std::sqrt(static_cast<double>(v_n)));
      const OverlapReport rep =
          overlap_experiment(v_n, v_trials, q, bulk_labels(v_n, v_labels, v_alpha), seed(), common.jobs);
      Output o;
      o.result = json{{"n", rep.n},
                      {"trials", rep.trials},
                      {"labels", rep.labels},
                      {"samples", rep.samples.size()},
                      {"ks", rep.ks},
                      {"median", median(rep.samples)},
                      {"rayleigh_median", std::sqrt(2.0 * std::log(2.0))}};
      if (!rep.zero_samples.empty())
      {
        o.result["zero_mode_ks"] = ks_distance(rep.zero_samples, rayleigh_cdf);
      }
      std::vector<std::vector<double>> rows;
      for (double s : rep.samples)
      {
        rows.push_back({s});
      }
      o.csv = csv_lines(rows, "overlap");
      return o;
    };
  }

  // minor
  MatrixSource minor_src;
  {
    auto *sub = app.add_subcommand("minor", "Cauchy interlacing and Schur complement of the (1,1) minor");
    add_source(sub, minor_src);
    add_common(sub);
    actions["minor"] = [&] {
      const Loaded m = load_matrix(minor_src, seed());
      const MinorRecord rec = minor_consistency(m.W, Seed{common.seed, 3});
      Output o;
      json pts = json::array();
      for (const auto &p : rec.schur)
      {
        pts.push_back(json{{"s", complex_json(p.s)},
                           {"direct", complex_json(p.direct)},
                           {"formula", complex_json(p.formula)},
                           {"relative_error", p.relative_error}});
      }
      o.result = json{{"n", rec.n},
                      {"values", vector_json(rec.values)},
                      {"minor_values", vector_json(rec.minor_values)},
                      {"interlaced", rec.interlaced},
                      {"max_violation", rec.max_violation},
                      {"diagonal", rec.diagonal},
                      {"schur", pts},
                      {"max_relative_error", rec.max_relative_error}};
      return o;
    };
  }

  if (args.empty())
  {
    err << app.help();
    return 1;
  }
  try
  {
    std::vector<std::string> expanded = expand_config(args);
    std::reverse(expanded.begin(), expanded.end());
    app.parse(expanded);
  }
  catch (const CLI::CallForHelp &)
  {
    out << app.help();
    return 0;
  }
  catch (const CLI::CallForAllHelp &)
  {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  }
  catch (const CLI::CallForVersion &)
  {
    out << lab_version << "\n";
    return 0;
  }
  catch (const CLI::ParseError &e)
  {
    err << "error: " << e.what() << "\n";
    for (const auto *sub : app.get_subcommands())
    {
      err << sub->help();
      return 1;
    }
    err << app.help();
    return 1;
  }
  catch (const InvalidInput &e)
  {
    err << error_json(e).dump() << "\n";
    return 1;
  }

  CLI::App *sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try
  {
    Output o = actions.at(name)();
    const std::string fmt = common.format.empty() ? (o.raw_csv_default ? "csv" : "json") : common.format;
    if (fmt == "csv")
    {
      if (o.csv.empty())
      {
        throw InvalidInput(name + " has no CSV form; use --format json");
      }
      write_text(common.out, o.csv, out);
      return 0;
    }
    json params = json::object();
    for (const CLI::Option *opt : sub->get_options())
    {
      const std::string key = opt->get_single_name();
      if (key == "help" || key == "out" || key == "format" || key == "jobs" || opt->count() == 0)
      {
        continue;
      }
      params[key] = option_value(opt);
    }
    params["seed"] = common.seed;
    json doc{{"version", lab_version},
             {"schema_version", report_schema_version},
             {"command", name},
             {"argv", args},
             {"seed", common.seed},
             {"params", params},
             {"result", o.result}};
    write_text(common.out, doc.dump(2) + "\n", out);
    return 0;
  }
  catch (const InvalidInput &e)
  {
    err << error_json(e).dump() << "\n";
    return 1;
  }
  catch (const NumericalError &e)
  {
    err << error_json(e).dump() << "\n";
    return 2;
  }
}

int run(int argc, char **argv)
{
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace rmt::cli
