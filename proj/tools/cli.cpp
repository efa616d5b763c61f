#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "fbl/bounds.hpp"
#include "fbl/codec_sim.hpp"
#include "fbl/dispersion.hpp"
#include "fbl/error.hpp"
#include "fbl/instances.hpp"
#include "fbl/io.hpp"
#include "fbl/parallel.hpp"
#include "fbl/rate_distortion.hpp"
#include "fbl/region.hpp"

namespace fbl::cli {
namespace {

struct Config {
  std::string preset;
  std::string instance_path;
  std::string output;
  std::string format = "csv";
  std::string gnuplot;

  std::optional<double> alpha, beta, p, beta0, beta1, lambda, level_d;
  std::optional<std::size_t> n;
  double eps = 0.1;
  std::string beta_grid, grid, lambda_grid, n_grid, d_grid;
  std::string variant = "cs";
  std::size_t points = 201;
  bool drop_logterm = false;

  std::string kind = "wak";
  std::string bound = "cs";
  bool auto_params = false;
  std::optional<double> log_m, log_l, log_big_l, log_j;
  std::optional<double> gamma_b, gamma_c, gamma_p, gamma_s, delta;
  double rho = 0.0;
  std::string tail = "exact";
  std::uint64_t samples = 100000;
  std::uint64_t seed = 1;

  std::size_t k_size = 1;
  std::size_t l_size = 2;
  std::optional<double> sim_log_m;
  std::uint64_t trials = 10000;
  std::string mode = "fixed";

  bool uniform_binary = false;
  std::string source_path;
  std::string joint_path;
};

using Meta = std::vector<std::pair<std::string, std::string>>;

// Defaults for commands that run without an explicit instance.
constexpr double kDefaultAlpha = 0.11;
constexpr double kDefaultBeta = 0.2;
constexpr const char* kStuckAtNote =
    "note: stuck-at preset uses P(U=0|S=0) = P(U=1|S=1) = 1 - alpha, P(U|S=2) uniform, X = U";

template <typename T>
T need(const std::optional<T>& v, const char* flag) {
  if (!v) throw InvalidArgument(std::string("missing required flag ") + flag);
  return *v;
}

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

std::string describe(const Config& c) {
  std::ostringstream s;
  if (!c.preset.empty()) {
    s << c.preset;
  } else if (!c.instance_path.empty()) {
    s << "file:" << c.instance_path;
  } else if (!c.source_path.empty()) {
    s << "file:" << c.source_path;
  } else {
    s << (c.uniform_binary ? "uniform-binary" : "bernoulli");
  }
  auto add = [&](const char* k, const std::optional<double>& v) {
    if (v) s << ' ' << k << '=' << format_double(*v);
  };
  add("alpha", c.alpha);
  add("beta", c.beta);
  add("p", c.p);
  add("beta0", c.beta0);
  add("beta1", c.beta1);
  add("lambda", c.lambda);
  add("D", c.level_d);
  return s.str();
}

WakInstance wak_preset(const Config& c, double beta, std::ostream&) {
  const double alpha = need(c.alpha, "--alpha");
  if (c.preset == "dsbs") return dsbs_wak(alpha, beta);
  if (c.preset == "biased") return biased_binary_wak(need(c.p, "--p"), alpha, beta);
  throw InvalidArgument("preset '" + c.preset + "' does not define a one-parameter WAK family");
}

WakInstance wak_instance(const Config& c, std::ostream& err) {
  if (!c.instance_path.empty()) {
    Instance inst = instance_from_json(load_json(c.instance_path));
    if (!std::holds_alternative<WakInstance>(inst)) throw InvalidArgument("instance is not of kind wak");
    return std::get<WakInstance>(std::move(inst));
  }
  if (c.preset == "dsbs-ts") {
    return dsbs_wak_timeshared(need(c.alpha, "--alpha"), c.beta0.value_or(0.0),
                               c.beta1.value_or(0.5), need(c.lambda, "--lambda"));
  }
  if (c.preset == "dsbs" || c.preset == "biased") return wak_preset(c, need(c.beta, "--beta"), err);
  throw InvalidArgument("wak needs --preset {dsbs, dsbs-ts, biased} or --instance");
}

WzInstance wz_instance(const Config& c) {
  if (!c.instance_path.empty()) {
    Instance inst = instance_from_json(load_json(c.instance_path));
    if (!std::holds_alternative<WzInstance>(inst)) throw InvalidArgument("instance is not of kind wz");
    return std::get<WzInstance>(std::move(inst));
  }
  if (c.preset == "dsbs") {
    return dsbs_wz(need(c.alpha, "--alpha"), need(c.beta, "--beta"), need(c.level_d, "--D"));
  }
  throw InvalidArgument("wz needs --preset dsbs or --instance");
}

GpInstance gp_instance(const Config& c, std::ostream& err) {
  if (!c.instance_path.empty()) {
    Instance inst = instance_from_json(load_json(c.instance_path));
    if (!std::holds_alternative<GpInstance>(inst)) throw InvalidArgument("instance is not of kind gp");
    return std::get<GpInstance>(std::move(inst));
  }
  if (c.preset == "stuck-at") {
    err << kStuckAtNote << '\n';
    return stuck_at_gp(need(c.p, "--p"), need(c.alpha, "--alpha"));
  }
  throw InvalidArgument("gp needs --preset stuck-at or --instance");
}

struct Source {
  Pmf p_x;
  Eigen::MatrixXd distortion;
};

Eigen::MatrixXd hamming(std::size_t size) {
  return Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(size)) -
         Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(size));
}

// {"p_x": pmf, "distortion": rows}
Source source(const Config& c) {
  if (c.uniform_binary) return {Pmf::uniform(2), hamming(2)};
  if (c.p) return {Pmf::binary(1.0 - *c.p), hamming(2)};
  if (c.source_path.empty()) throw InvalidArgument("need --uniform-binary, --p or --source");
  const Json j = load_json(c.source_path);
  if (!j.is_object()) throw InvalidArgument("source: expected an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "p_x" && key != "distortion") throw InvalidArgument("source: unknown key '" + key + "'");
  }
  if (!j.contains("p_x") || !j.contains("distortion")) {
    throw InvalidArgument("source: needs p_x and distortion");
  }
  Pmf p_x = pmf_from_json(j.at("p_x"));
  const Json& rows = j.at("distortion");
  if (!rows.is_array() || rows.size() != p_x.size()) {
    throw InvalidArgument("source: distortion needs one row per source symbol");
  }
  const std::size_t cols = rows.at(0).size();
  Eigen::MatrixXd d(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!rows.at(r).is_array() || rows.at(r).size() != cols) throw InvalidArgument("source: ragged distortion");
    for (std::size_t k = 0; k < cols; ++k) {
      if (!rows.at(r).at(k).is_number()) throw InvalidArgument("source: distortion must be numeric");
      d(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = rows.at(r).at(k).get<double>();
    }
  }
  return {std::move(p_x), d};
}

// Either stdout or the --output file.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw InvalidArgument("cannot write " + path);
      out_ = &file_;
    }
  }
  std::ostream& stream() { return *out_; }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

void write_table(std::ostream& out, const Meta& meta, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows, const std::string& format) {
  if (format == "json") {
    Json m = Json::object();
    for (const auto& [k, v] : meta) m[k] = v;
    Json data = Json::array();
    for (const auto& row : rows) {
      Json r = Json::array();
      for (double v : row) {
        if (std::isfinite(v)) {
          r.push_back(v);
        } else {
          r.push_back(format_double(v));
        }
      }
      data.push_back(r);
    }
    out << Json{{"meta", m}, {"columns", header}, {"rows", data}}.dump(2) << '\n';
    return;
  }
  for (const auto& [k, v] : meta) out << "# meta: " << k << '=' << v << '\n';
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
}

void write_curve(const Config& c, const RegionCurve& curve, Meta meta, std::ostream& out) {
  meta.insert(meta.begin(), {{"instance", curve.instance_id},
                             {"construction", curve.construction},
                             {"n", std::to_string(curve.n)},
                             {"eps", format_double(curve.eps)}});
  std::vector<std::vector<double>> rows;
  for (const auto& [a, b] : curve.points) rows.push_back({a, b});
  Sink sink(c.output, out);
  write_table(sink.stream(), meta, {curve.first_name, curve.second_name}, rows, c.format);
  if (!c.gnuplot.empty()) {
    if (c.output.empty()) throw InvalidArgument("--gnuplot needs --output");
    std::ofstream g(c.gnuplot);
    if (!g) throw InvalidArgument("cannot write " + c.gnuplot);
    g << "set datafile separator ','\n"
      << "set datafile commentschars '#'\n"
      << "set xlabel '" << curve.first_name << " (bits)'\n"
      << "set ylabel '" << curve.second_name << "'\n"
      << "plot '" << c.output << "' every ::1 using 1:2 with lines title '" << curve.construction
      << "'\n";
  }
}

void write_json(const Config& c, const Json& j, std::ostream& out) {
  Sink sink(c.output, out);
  if (c.format == "json") {
    sink.stream() << j.dump(2) << '\n';
    return;
  }
  // CSV: one key,value row per scalar, nested keys joined by '.'.
  sink.stream() << "key,value\n";
  std::function<void(const std::string&, const Json&)> flat = [&](const std::string& prefix,
                                                                   const Json& v) {
    if (v.is_object()) {
      for (const auto& [k, x] : v.items()) flat(prefix.empty() ? k : prefix + "." + k, x);
    } else if (v.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i) flat(prefix + "." + std::to_string(i), v[i]);
    } else if (v.is_number_float()) {
      sink.stream() << prefix << ',' << format_double(v.get<double>()) << '\n';
    } else if (v.is_string()) {
      sink.stream() << prefix << ',' << v.get<std::string>() << '\n';
    } else {
      sink.stream() << prefix << ',' << v.dump() << '\n';
    }
  };
  flat("", j);
}

std::size_t need_n(const Config& c) {
  const std::size_t n = need(c.n, "--n");
  if (n == 0) throw InvalidArgument("--n must be positive");
  return n;
}

RegionOptions region_options(const Config& c) {
  if (c.points == 0) throw InvalidArgument("--points must be positive");
  return {c.drop_logterm, c.points, 1e-10};
}

Meta common_meta(const Config& c, const std::string& hash) {
  return {{"instance_hash", hash},
          {"variant", c.variant},
          {"drop_logterm", c.drop_logterm ? "true" : "false"}};
}

std::string family_hash(const std::vector<WakInstance>& family) {
  std::string all;
  for (const WakInstance& w : family) all += instance_hash(Instance(w));
  return fnv1a_hex(all);
}

void cmd_region_wak(const Config& c, std::ostream& out, std::ostream& err) {
  const std::size_t n = need_n(c);
  const RegionOptions opts = region_options(c);
  std::vector<WakInstance> family;
  if (!c.beta_grid.empty()) {
    for (double b : parse_grid(c.beta_grid)) family.push_back(wak_preset(c, b, err));
  } else if (c.preset == "dsbs-ts" && !c.lambda) {
    const double alpha = need(c.alpha, "--alpha");
    for (double l : parse_grid(c.lambda_grid.empty() ? "0:1:0.01" : c.lambda_grid)) {
      family.push_back(dsbs_wak_timeshared(alpha, c.beta0.value_or(0.0), c.beta1.value_or(0.5), l));
    }
  }
  RegionCurve curve;
  Meta meta;
  if (!family.empty()) {
    std::vector<double> rho{0.0};
    if (c.variant == "modified") {
      rho = parse_grid(c.grid);
    } else if (c.variant != "cs") {
      throw InvalidArgument("family unions support --variant cs or modified");
    }
    std::vector<DispersionStats> stats(family.size(), DispersionStats{});
    parallel_for(family.size(), [&](std::size_t i) { stats[i] = dispersion_stats(family[i]); });
    curve = wak_region_union(stats, n, c.eps, rho, opts);
    meta = common_meta(c, family_hash(family));
    meta.emplace_back("family_size", std::to_string(family.size()));
    if (!c.beta_grid.empty()) meta.emplace_back("beta_grid", c.beta_grid);
    if (c.preset == "dsbs-ts") meta.emplace_back("lambda_grid", c.lambda_grid.empty() ? "0:1:0.01" : c.lambda_grid);
  } else {
    Config single = c;
    if (c.variant == "corner" && !c.beta && c.preset != "dsbs-ts") single.beta = 0.0;
    const WakInstance inst = wak_instance(single, err);
    WakVariant v;
    std::vector<double> grid;
    if (c.variant == "cs") {
      v = WakVariant::kCs;
    } else if (c.variant == "modified") {
      v = WakVariant::kModified;
      grid = parse_grid(c.grid);
    } else if (c.variant == "verdu") {
      v = WakVariant::kVerduSplit;
      grid = parse_grid(c.grid.empty() ? "0:1:0.01" : c.grid);
    } else if (c.variant == "corner") {
      v = WakVariant::kCorner;
    } else {
      throw InvalidArgument("unknown --variant '" + c.variant + "'");
    }
    curve = wak_region(inst, n, c.eps, v, grid, opts);
    meta = common_meta(c, instance_hash(Instance(inst)));
    if (!grid.empty()) meta.emplace_back("grid", c.grid.empty() ? "0:1:0.01" : c.grid);
  }
  curve.instance_id = describe(c);
  write_curve(c, curve, std::move(meta), out);
}

void cmd_region_wz(const Config& c, std::ostream& out, std::ostream&) {
  const WzInstance inst = wz_instance(c);
  RegionCurve curve = wz_region(inst, need_n(c), c.eps, region_options(c));
  curve.instance_id = describe(c);
  Meta meta = common_meta(c, instance_hash(Instance(inst)));
  meta.emplace_back("projection", "third-coordinate scan");
  write_curve(c, curve, std::move(meta), out);
}

void cmd_region_gp(const Config& c, std::ostream& out, std::ostream& err) {
  const GpInstance inst = gp_instance(c, err);
  if (c.preset != "stuck-at") {
    RegionCurve curve = gp_region(inst, need_n(c), c.eps, region_options(c));
    curve.instance_id = describe(c);
    Meta meta = common_meta(c, instance_hash(Instance(inst)));
    meta.emplace_back("projection", "third-coordinate scan");
    write_curve(c, curve, std::move(meta), out);
    return;
  }
  // Rate against blocklength, with the decoder-side-information channel for comparison.
  std::vector<double> ns;
  if (!c.n_grid.empty()) {
    ns = parse_grid(c.n_grid);
  } else if (c.n) {
    ns = {static_cast<double>(*c.n)};
  } else {
    ns = parse_grid("1000:100000:1000");
  }
  const DispersionStats stats = dispersion_stats(inst);
  const ChannelInstance si = stuck_at_decoder_si(*c.p, *c.alpha);
  const double capacity = stats.j_mean(0) + stats.j_mean(1);
  std::vector<std::vector<double>> rows(ns.size());
  for (double v : ns) {
    if (v < 1.0 || v != std::floor(v)) throw InvalidArgument("--n-grid entries must be positive integers");
  }
  parallel_for(ns.size(), [&](std::size_t i) {
    const auto n = static_cast<std::size_t>(ns[i]);
    rows[i] = {ns[i], gp_rate(stats, n, c.eps, c.drop_logterm),
               channel_rate(si.channel, si.p_x, n, c.eps, c.drop_logterm), capacity};
  });
  Meta meta{{"instance", describe(c)},
            {"construction", "min_sum"},
            {"eps", format_double(c.eps)},
            {"instance_hash", instance_hash(Instance(inst))},
            {"drop_logterm", c.drop_logterm ? "true" : "false"},
            {"n_grid", c.n_grid.empty() ? (c.n ? std::to_string(*c.n) : "1000:100000:1000") : c.n_grid}};
  Sink sink(c.output, out);
  write_table(sink.stream(), meta, {"n", "rate_gp", "rate_decoder_si", "capacity"}, rows, c.format);
}

void cmd_region_lossy(const Config& c, std::ostream& out, std::ostream&) {
  const Source src = source(c);
  const std::size_t n = need_n(c);
  double d0 = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < src.distortion.cols(); ++k) {
    double e = 0.0;
    for (std::size_t x = 0; x < src.p_x.size(); ++x) {
      e += src.p_x[x] * src.distortion(static_cast<Eigen::Index>(x), k);
    }
    d0 = std::min(d0, e);
  }
  std::vector<double> levels;
  if (!c.d_grid.empty()) {
    levels = parse_grid(c.d_grid);
  } else {
    for (std::size_t i = 1; i < c.points; ++i) levels.push_back(d0 * static_cast<double>(i) / static_cast<double>(c.points));
    if (levels.empty()) throw InvalidArgument("empty distortion grid");
  }
  const double extra = log_term(n, c.drop_logterm);
  std::vector<std::vector<double>> rows(levels.size());
  parallel_for(levels.size(), [&](std::size_t i) {
    rows[i] = {levels[i], lossy_second_order(src.p_x, src.distortion, levels[i], n, c.eps) + extra};
  });
  Meta meta{{"instance", describe(c)},
            {"construction", "d_tilted"},
            {"n", std::to_string(n)},
            {"eps", format_double(c.eps)},
            {"drop_logterm", c.drop_logterm ? "true" : "false"}};
  Sink sink(c.output, out);
  write_table(sink.stream(), meta, {"D", "R"}, rows, c.format);
}

TailOptions tail_options(const Config& c) {
  TailOptions t;
  if (c.tail == "exact") {
    t.method = TailMethod::kExact;
  } else if (c.tail == "mc") {
    t.method = TailMethod::kMonteCarlo;
  } else if (c.tail == "gauss") {
    t.method = TailMethod::kGaussian;
  } else {
    throw InvalidArgument("unknown --tail '" + c.tail + "'");
  }
  t.samples = c.samples;
  t.seed = c.seed;
  return t;
}

void apply_overrides(const Config& c, BoundParams& p) {
  if (c.gamma_b) p.gamma_b = *c.gamma_b;
  if (c.gamma_c) p.gamma_c = *c.gamma_c;
  if (c.gamma_p) p.gamma_p = *c.gamma_p;
  if (c.gamma_s) p.gamma_s = *c.gamma_s;
  if (c.delta) p.delta = *c.delta;
  if (c.log_j) p.log_j = *c.log_j;
}

Config with_wak_defaults(Config c) {
  if (c.preset.empty() && c.instance_path.empty()) c.preset = "dsbs";
  if (!c.alpha) c.alpha = kDefaultAlpha;
  if (!c.beta && c.preset != "dsbs-ts") c.beta = kDefaultBeta;
  return c;
}

void cmd_bound(const Config& raw, std::ostream& out, std::ostream& err) {
  const std::size_t n = raw.n.value_or(8);
  if (n == 0) throw InvalidArgument("--n must be positive");
  const double nd = static_cast<double>(n);
  const double lm = raw.log_m.value_or(nd);
  const double ll = raw.log_l.value_or(nd / 2.0);
  const double lbig = raw.log_big_l.value_or(nd / 2.0);
  const TailOptions tail = tail_options(raw);
  BoundParams p;
  p.n = n;
  p.log_m = lm;
  p.log_l = ll;
  p.log_big_l = lbig;
  BoundReport report;
  if (raw.kind == "wak") {
    const Config c = with_wak_defaults(raw);
    const WakInstance inst = wak_instance(c, err);
    if (raw.auto_params) {
      if (c.bound == "modified") {
        p = wak_modified_auto_params(n, lm, ll, c.rho);
      } else if (c.bound == "corner") {
        p = corner_auto_params(n, lm, ll);
      } else {
        p = wak_auto_params(n, lm, ll);
      }
    }
    apply_overrides(c, p);
    if (c.bound == "cs") {
      report = wak_cs_bound(inst, p, tail);
    } else if (c.bound == "cs-simple") {
      report = wak_cs_simplified(inst, p, tail);
    } else if (c.bound == "modified") {
      report = wak_modified_bound(inst, p, tail);
    } else if (c.bound == "corner") {
      report = wak_corner_bound(inst.p_xy(), p, tail);
    } else if (c.bound == "kuzuoka") {
      report = wak_kuzuoka_bound(inst, p, tail);
    } else if (c.bound == "verdu") {
      report = wak_verdu_bound(inst, p, tail);
    } else {
      throw InvalidArgument("unknown wak --bound '" + c.bound + "'");
    }
  } else if (raw.kind == "wz") {
    const WzInstance inst = wz_instance(raw);
    if (raw.auto_params) p = wz_auto_params(n, lm, lbig);
    apply_overrides(raw, p);
    if (raw.bound == "cs") {
      report = wz_cs_bound(inst, p, tail);
    } else if (raw.bound == "verdu") {
      report = wz_verdu_bound(inst, p, tail);
    } else if (raw.bound == "iwata") {
      report = wz_iwata_bound(inst, p, tail);
    } else {
      throw InvalidArgument("unknown wz --bound '" + raw.bound + "'");
    }
  } else if (raw.kind == "gp") {
    const GpInstance inst = gp_instance(raw, err);
    if (raw.auto_params) p = gp_auto_params(n, lm, lbig);
    apply_overrides(raw, p);
    if (raw.bound == "cs") {
      report = gp_cs_bound(inst, p, tail);
    } else if (raw.bound == "verdu") {
      report = gp_verdu_bound(inst, p, tail);
    } else if (raw.bound == "tan") {
      report = gp_tan_bound(inst, p, tail);
    } else {
      throw InvalidArgument("unknown gp --bound '" + raw.bound + "'");
    }
  } else {
    throw InvalidArgument("unknown --kind '" + raw.kind + "'");
  }
  Json j = to_json(report);
  j["auto_params"] = raw.auto_params;
  write_json(raw, j, out);
}

void cmd_simulate(const Config& raw, std::ostream& out, std::ostream& err) {
  const Config c = with_wak_defaults(raw);
  const WakInstance inst = wak_instance(c, err);
  const std::size_t n = c.n.value_or(4);
  if (n == 0) throw InvalidArgument("--n must be positive");
  if (c.k_size == 0 || c.l_size == 0) throw InvalidArgument("--K and --L must be positive");
  if (c.trials == 0) throw InvalidArgument("--trials must be positive");
  const double log_m = c.sim_log_m.value_or(static_cast<double>(n));
  const double m_real = std::exp2(log_m);
  const auto m_size = static_cast<std::size_t>(std::llround(m_real));
  if (m_size == 0 || std::abs(m_real - static_cast<double>(m_size)) > 1e-9 * m_real) {
    throw InvalidArgument("--logM must be log2 of a positive integer");
  }
  const BoundParams auto_p = wak_auto_params(n, log_m, std::log2(static_cast<double>(c.l_size)));
  WakCodeParams params;
  params.m_size = m_size;
  params.l_size = c.l_size;
  params.k_size = c.k_size;
  params.gamma_b = c.gamma_b.value_or(auto_p.gamma_b);
  params.gamma_c = c.gamma_c.value_or(auto_p.gamma_c);
  TrialStats stats;
  if (c.mode == "fixed") {
    const Pmf p_u = marginal(inst.joint(), {1}).to_pmf();
    const ResolvabilityCode code = build_code(p_u, n, c.k_size, c.l_size, derive_seed(c.seed, 1));
    stats = wak_trial(inst, n, code, derive_seed(c.seed, 2), params, c.trials, derive_seed(c.seed, 3));
  } else if (c.mode == "ensemble") {
    stats = wak_trial_ensemble(inst, n, params, c.trials, derive_seed(c.seed, 3));
  } else {
    throw InvalidArgument("unknown --mode '" + c.mode + "'");
  }
  Json j = to_json(stats);
  j["config"] = Json{{"instance", describe(c)},
                     {"n", n},
                     {"K", c.k_size},
                     {"L", c.l_size},
                     {"M", m_size},
                     {"gamma_b", params.gamma_b},
                     {"gamma_c", params.gamma_c},
                     {"mode", c.mode},
                     {"seed", c.seed}};
  write_json(c, j, out);
}

void cmd_rd(const Config& c, std::ostream& out) {
  const Source src = source(c);
  const double level = need(c.level_d, "--D");
  const RateDistortionResult r = rate_distortion(src.p_x, src.distortion, level);
  const LossyDispersion disp = lossy_dispersion(src.p_x, src.distortion, level);
  Json j{{"rate", r.rate},
         {"lambda_star", std::isfinite(r.lambda_star) ? Json(r.lambda_star) : Json("inf")},
         {"dispersion", disp.dispersion},
         {"distortion", r.distortion},
         {"level", level},
         {"iterations", r.iterations},
         {"q_xhat", to_json(r.q_xhat_star).at("probs")}};
  write_json(c, j, out);
}

void cmd_delta(const Config& raw, std::ostream& out, std::ostream& err) {
  const double gamma = need(raw.gamma_c, "--gamma-c");
  const std::size_t n = raw.n.value_or(1);
  if (n == 0) throw InvalidArgument("--n must be positive");
  JointPmf p_uz = raw.joint_path.empty() ? JointPmf(Pmf::uniform(1)) : joint_from_json(load_json(raw.joint_path));
  std::string source_name = "file:" + raw.joint_path;
  if (raw.joint_path.empty()) {
    const Config c = with_wak_defaults(raw);
    const WakInstance inst = wak_instance(c, err);
    // (T, U) flattened into one auxiliary against Y.
    const JointPmf tuy = marginal(inst.joint(), {0, 1, 3});
    p_uz = JointPmf({tuy.dims()[0] * tuy.dims()[1], tuy.dims()[2]},
                    std::vector<double>(tuy.probs().begin(), tuy.probs().end()));
    source_name = describe(c);
  } else if (p_uz.rank() != 2) {
    throw InvalidArgument("--joint must be a rank-2 joint over (U, Z)");
  }
  const NfoldDelta d = delta_nfold(p_uz, n, gamma);
  Json j{{"source", source_name},
         {"n", n},
         {"gamma_c", gamma},
         {"delta", d.value},
         {"exact", d.exact},
         {"ceiling", std::exp2(gamma)}};
  write_json(raw, j, out);
}

void add_instance_flags(CLI::App* app, Config& c) {
  app->add_option("--preset", c.preset, "Built-in instance: dsbs, dsbs-ts, biased, stuck-at")
      ->check(CLI::IsMember({"dsbs", "dsbs-ts", "biased", "stuck-at"}));
  app->add_option("--instance", c.instance_path, "JSON instance file");
  app->add_option("--alpha", c.alpha, "Source or channel crossover");
  app->add_option("--beta", c.beta, "Test-channel crossover");
  app->add_option("--p", c.p, "Bias or fault probability");
  app->add_option("--beta0", c.beta0, "Time-sharing crossover of the first member (default 0)");
  app->add_option("--beta1", c.beta1, "Time-sharing crossover of the second member (default 0.5)");
  app->add_option("--lambda", c.lambda, "Time-sharing weight of the first member");
  app->add_option("--D", c.level_d, "Distortion level");
}

void add_output_flags(CLI::App* app, Config& c) {
  app->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("-o,--output", c.output, "Output path (default stdout)");
}

void add_region_flags(CLI::App* app, Config& c) {
  add_instance_flags(app, c);
  add_output_flags(app, c);
  app->add_option("--n", c.n, "Blocklength");
  app->add_option("--eps", c.eps, "Error probability");
  app->add_option("--variant", c.variant, "cs, modified, verdu or corner");
  app->add_option("--grid", c.grid, "rho grid (modified) or split grid (verdu), a:b:step or list");
  app->add_option("--beta-grid", c.beta_grid, "Union over the preset family at these crossovers");
  app->add_option("--lambda-grid", c.lambda_grid, "Time-sharing weights for dsbs-ts");
  app->add_option("--n-grid", c.n_grid, "Blocklengths for the stuck-at rate curve");
  app->add_option("--D-grid", c.d_grid, "Distortion levels for lossy");
  app->add_option("--points", c.points, "Boundary sample count");
  app->add_flag("--drop-logterm", c.drop_logterm, "Omit the 2 log n / n term");
  app->add_option("--gnuplot", c.gnuplot, "Also write a gnuplot script for --output");
  app->add_flag("--uniform-binary", c.uniform_binary, "Uniform binary source, Hamming distortion");
  app->add_option("--source", c.source_path, "JSON source {p_x, distortion}");
}

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
  if (text.empty()) throw InvalidArgument("empty grid");
  std::vector<double> out;
  auto to_num = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw InvalidArgument("malformed grid '" + text + "'");
    }
    if (used != s.size() || !std::isfinite(v)) throw InvalidArgument("malformed grid '" + text + "'");
    return v;
  };
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() != 3) throw InvalidArgument("grid ranges are a:b:step");
    const double a = to_num(parts[0]), b = to_num(parts[1]), step = to_num(parts[2]);
    if (step <= 0.0) throw InvalidArgument("grid step must be positive");
    if (b < a) throw InvalidArgument("empty grid '" + text + "'");
    const auto count = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
    if (count > 10'000'000) throw InvalidArgument("grid too large");
    // Grid points are rounded to 12 significant digits to drop accumulation noise.
    char buf[32];
    for (std::size_t i = 0; i < count; ++i) {
      std::snprintf(buf, sizeof buf, "%.12g", a + static_cast<double>(i) * step);
      out.push_back(std::strtod(buf, nullptr));
    }
  } else {
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ',');) out.push_back(to_num(part));
  }
  if (out.empty()) throw InvalidArgument("empty grid");
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Finite-blocklength bounds and second-order regions", "fbl");
  app.require_subcommand(1);
  Config c;

  auto* region = app.add_subcommand("region", "Second-order region boundary")->require_subcommand(1);
  auto* region_wak = region->add_subcommand("wak", "Helper-assisted lossless coding");
  auto* region_wz = region->add_subcommand("wz", "Lossy coding with decoder side information");
  auto* region_gp = region->add_subcommand("gp", "Channel coding with encoder state");
  auto* region_lossy = region->add_subcommand("lossy", "Lossy coding without side information");
  for (auto* sub : {region_wak, region_wz, region_gp, region_lossy}) add_region_flags(sub, c);

  auto* bound = app.add_subcommand("bound", "Non-asymptotic bound evaluation")->require_subcommand(1);
  auto* bound_eval = bound->add_subcommand("eval", "Evaluate one bound");
  add_instance_flags(bound_eval, c);
  add_output_flags(bound_eval, c);
  c.format = "json";
  bound_eval->add_option("--kind", c.kind, "wak, wz or gp");
  bound_eval->add_option("--bound", c.bound,
                         "wak: cs, cs-simple, modified, corner, kuzuoka, verdu; wz: cs, verdu, "
                         "iwata; gp: cs, verdu, tan");
  bound_eval->add_flag("--auto-params", c.auto_params, "Derive thresholds from the sizes");
  bound_eval->add_option("--n", c.n, "Blocklength (default 8)");
  bound_eval->add_option("--log-m", c.log_m, "log2 of the message/bin count (default n)");
  bound_eval->add_option("--log-l", c.log_l, "log2 of the helper message count (default n/2)");
  bound_eval->add_option("--log-big-l", c.log_big_l, "log2 of the codebook row size (default n/2)");
  bound_eval->add_option("--log-j", c.log_j, "log2 of the enlarged helper codebook");
  bound_eval->add_option("--gamma-b", c.gamma_b);
  bound_eval->add_option("--gamma-c", c.gamma_c);
  bound_eval->add_option("--gamma-p", c.gamma_p);
  bound_eval->add_option("--gamma-s", c.gamma_s);
  bound_eval->add_option("--delta", c.delta);
  bound_eval->add_option("--rho", c.rho, "Threshold shift for the modified bound");
  bound_eval->add_option("--tail", c.tail, "exact, mc or gauss")
      ->check(CLI::IsMember({"exact", "mc", "gauss"}));
  bound_eval->add_option("--samples", c.samples, "Monte Carlo samples");
  bound_eval->add_option("--seed", c.seed, "Monte Carlo seed");

  auto* simulate = app.add_subcommand("simulate", "Codec simulation")->require_subcommand(1);
  auto* sim_wak = simulate->add_subcommand("wak", "Binning plus soft-covering helper");
  add_instance_flags(sim_wak, c);
  add_output_flags(sim_wak, c);
  sim_wak->add_option("--n", c.n, "Blocklength (default 4)");
  sim_wak->add_option("--K", c.k_size, "Codebook rows");
  sim_wak->add_option("--L", c.l_size, "Codewords per row");
  sim_wak->add_option("--logM", c.sim_log_m, "log2 of the bin count (default n)");
  sim_wak->add_option("--trials", c.trials);
  sim_wak->add_option("--seed", c.seed);
  sim_wak->add_option("--gamma-b", c.gamma_b, "Binning threshold (default automatic)");
  sim_wak->add_option("--gamma-c", c.gamma_c, "Covering threshold (default automatic)");
  sim_wak->add_option("--mode", c.mode, "fixed or ensemble")->check(CLI::IsMember({"fixed", "ensemble"}));

  auto* rd = app.add_subcommand("rd", "Rate-distortion function and dispersion");
  add_output_flags(rd, c);
  rd->add_flag("--uniform-binary", c.uniform_binary, "Uniform binary source, Hamming distortion");
  rd->add_option("--p", c.p, "Bernoulli(p) source, Hamming distortion");
  rd->add_option("--source", c.source_path, "JSON source {p_x, distortion}");
  rd->add_option("--D", c.level_d, "Distortion level")->required();

  auto* delta = app.add_subcommand("delta", "Soft-covering residual");
  add_instance_flags(delta, c);
  add_output_flags(delta, c);
  delta->add_option("--joint", c.joint_path, "JSON rank-2 joint over (U, Z)");
  delta->add_option("--gamma-c", c.gamma_c)->required();
  delta->add_option("--n", c.n, "Blocklength (default 1)");

  // Commands emitting a single record default to JSON.
  for (auto* sub : {bound_eval, sim_wak, rd, delta}) {
    sub->preparse_callback([&c](std::size_t) { c.format = "json"; });
  }
  for (auto* sub : {region_wak, region_wz, region_gp, region_lossy}) {
    sub->preparse_callback([&c](std::size_t) { c.format = "csv"; });
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*region_wak) {
      cmd_region_wak(c, out, err);
    } else if (*region_wz) {
      cmd_region_wz(c, out, err);
    } else if (*region_gp) {
      cmd_region_gp(c, out, err);
    } else if (*region_lossy) {
      cmd_region_lossy(c, out, err);
    } else if (*bound_eval) {
      cmd_bound(c, out, err);
    } else if (*sim_wak) {
      cmd_simulate(c, out, err);
    } else if (*rd) {
      cmd_rd(c, out);
    } else if (*delta) {
      cmd_delta(c, out, err);
    }
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Infeasible& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const NumericFailure& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitOk;
}

}  // namespace fbl::cli
