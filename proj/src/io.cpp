#include "fbl/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <set>

#include "fbl/error.hpp"

namespace fbl {
namespace {

void reject_unknown(const Json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw InvalidArgument(std::string(what) + ": expected an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!keys.contains(key)) throw InvalidArgument(std::string(what) + ": unknown key '" + key + "'");
  }
}

const Json& require(const Json& j, const char* key, const char* what) {
  if (!j.contains(key)) throw InvalidArgument(std::string(what) + ": missing key '" + key + "'");
  return j.at(key);
}

double number(const Json& j, const char* what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw InvalidArgument(std::string(what) + ": expected a number");
}

std::vector<double> numbers(const Json& j, const char* what) {
  if (!j.is_array()) throw InvalidArgument(std::string(what) + ": expected an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const Json& v : j) out.push_back(number(v, what));
  return out;
}

std::vector<std::size_t> sizes(const Json& j, const char* what) {
  if (!j.is_array()) throw InvalidArgument(std::string(what) + ": expected an array");
  std::vector<std::size_t> out;
  for (const Json& v : j) {
    if (!v.is_number_integer() || v.get<long long>() <= 0) {
      throw InvalidArgument(std::string(what) + ": dims must be positive integers");
    }
    out.push_back(v.get<std::size_t>());
  }
  return out;
}

bool renormalize_flag(const Json& j) {
  if (!j.contains("renormalize")) return false;
  if (!j.at("renormalize").is_boolean()) throw InvalidArgument("renormalize: expected a boolean");
  return j.at("renormalize").get<bool>();
}

std::vector<Channel> channels(const Json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw InvalidArgument(std::string(what) + ": expected a non-empty array");
  std::vector<Channel> out;
  for (const Json& c : j) out.push_back(channel_from_json(c));
  return out;
}

Json channels_json(const std::vector<Channel>& cs) {
  Json arr = Json::array();
  for (const Channel& c : cs) arr.push_back(to_json(c));
  return arr;
}

Json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

Pmf time_share_from(const Json& j) {
  return j.contains("time_share") ? pmf_from_json(j.at("time_share")) : Pmf::point_mass(1, 0);
}

}  // namespace

Pmf pmf_from_json(const Json& j) {
  if (j.is_array()) return Pmf(numbers(j, "pmf"));
  reject_unknown(j, {"probs", "renormalize"}, "pmf");
  return Pmf(numbers(require(j, "probs", "pmf"), "pmf"), renormalize_flag(j));
}

Channel channel_from_json(const Json& j) {
  reject_unknown(j, {"dims", "probs", "renormalize"}, "channel");
  const std::vector<std::size_t> dims = sizes(require(j, "dims", "channel"), "channel");
  if (dims.size() != 2) throw InvalidArgument("channel: dims must have two entries");
  return Channel(dims[0], dims[1], numbers(require(j, "probs", "channel"), "channel"),
                 renormalize_flag(j));
}

JointPmf joint_from_json(const Json& j) {
  reject_unknown(j, {"dims", "probs", "renormalize"}, "joint");
  return JointPmf(sizes(require(j, "dims", "joint"), "joint"),
                  numbers(require(j, "probs", "joint"), "joint"), renormalize_flag(j));
}

Json to_json(const Pmf& pmf) {
  return Json{{"probs", std::vector<double>(pmf.probs().begin(), pmf.probs().end())}};
}

Json to_json(const Channel& channel) {
  return Json{{"dims", {channel.input_size(), channel.output_size()}},
              {"probs", std::vector<double>(channel.data().begin(), channel.data().end())}};
}

Json to_json(const JointPmf& joint) {
  return Json{{"dims", joint.dims()},
              {"probs", std::vector<double>(joint.probs().begin(), joint.probs().end())}};
}

Instance instance_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    throw InvalidArgument("instance: missing string key 'kind'");
  }
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "wak") {
    reject_unknown(j, {"kind", "p_xy", "time_share", "test_channels"}, "wak instance");
    return WakInstance(joint_from_json(require(j, "p_xy", "wak instance")), time_share_from(j),
                       channels(require(j, "test_channels", "wak instance"), "test_channels"));
  }
  if (kind == "wz") {
    reject_unknown(j, {"kind", "p_xy", "time_share", "test_channels", "reproduction", "distortion",
                       "level_d"},
                   "wz instance");
    const Json& rows = require(j, "distortion", "wz instance");
    if (!rows.is_array() || rows.empty()) throw InvalidArgument("distortion: expected rows");
    const std::size_t cols = rows.at(0).is_array() ? rows.at(0).size() : 0;
    Eigen::MatrixXd d(rows.size(), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::vector<double> row = numbers(rows.at(r), "distortion");
      if (row.size() != cols) throw InvalidArgument("distortion: ragged rows");
      for (std::size_t c = 0; c < cols; ++c) d(r, c) = row[c];
    }
    return WzInstance(joint_from_json(require(j, "p_xy", "wz instance")), time_share_from(j),
                      channels(require(j, "test_channels", "wz instance"), "test_channels"),
                      channels(require(j, "reproduction", "wz instance"), "reproduction"), d,
                      number(require(j, "level_d", "wz instance"), "level_d"));
  }
  if (kind == "gp") {
    reject_unknown(j, {"kind", "p_s", "channel_w", "time_share", "encoder_channels", "cost",
                       "budget_gamma"},
                   "gp instance");
    const double budget = j.contains("budget_gamma") ? number(j.at("budget_gamma"), "budget_gamma")
                                                     : std::numeric_limits<double>::infinity();
    return GpInstance(pmf_from_json(require(j, "p_s", "gp instance")),
                      channel_from_json(require(j, "channel_w", "gp instance")), time_share_from(j),
                      channels(require(j, "encoder_channels", "gp instance"), "encoder_channels"),
                      numbers(require(j, "cost", "gp instance"), "cost"), budget);
  }
  throw InvalidArgument("instance: unknown kind '" + kind + "'");
}

Json to_json(const WakInstance& inst) {
  return Json{{"kind", "wak"},
              {"p_xy", to_json(inst.p_xy())},
              {"time_share", to_json(inst.time_share())},
              {"test_channels", channels_json(inst.test_channels())}};
}

Json to_json(const WzInstance& inst) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < inst.distortion().rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < inst.distortion().cols(); ++c) row.push_back(inst.distortion()(r, c));
    rows.push_back(row);
  }
  return Json{{"kind", "wz"},
              {"p_xy", to_json(inst.p_xy())},
              {"time_share", to_json(inst.time_share())},
              {"test_channels", channels_json(inst.test_channels())},
              {"reproduction", channels_json(inst.reproduction())},
              {"distortion", rows},
              {"level_d", inst.level_d()}};
}

Json to_json(const GpInstance& inst) {
  return Json{{"kind", "gp"},
              {"p_s", to_json(inst.p_s())},
              {"channel_w", to_json(inst.channel_w())},
              {"time_share", to_json(inst.time_share())},
              {"encoder_channels", channels_json(inst.encoder_channels())},
              {"cost", inst.cost()},
              {"budget_gamma", num(inst.budget_gamma())}};
}

Json to_json(const Instance& inst) {
  return std::visit([](const auto& i) { return to_json(i); }, inst);
}

std::string instance_hash(const Instance& inst) { return fnv1a_hex(to_json(inst).dump()); }

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xf];
  return out;
}

Json to_json(const BoundParams& p) {
  Json j{{"n", p.n},
         {"log_m", num(p.log_m)},
         {"log_l", num(p.log_l)},
         {"log_big_l", num(p.log_big_l)}};
  if (p.log_j) j["log_j"] = num(*p.log_j);
  j["gamma_b"] = num(p.gamma_b);
  j["gamma_c"] = num(p.gamma_c);
  j["gamma_p"] = num(p.gamma_p);
  j["gamma_s"] = num(p.gamma_s);
  j["delta"] = num(p.delta);
  return j;
}

Json to_json(const BoundReport& r) {
  Json terms = Json::object();
  for (const BoundTerm& t : r.terms) terms[t.name] = num(t.value);
  Json j{{"bound", r.bound},
         {"total", num(r.total)},
         {"raw_total", num(r.raw_total)},
         {"terms", terms},
         {"evaluator", r.evaluator}};
  if (r.primary_std_error) j["primary_std_error"] = num(*r.primary_std_error);
  if (r.primary_certificate) j["primary_certificate"] = num(*r.primary_certificate);
  j["notes"] = r.notes;
  j["params"] = to_json(r.params);
  return j;
}

Json to_json(const TrialStats& s) {
  return Json{{"trials", s.trials},
              {"errors", s.errors},
              {"error_rate", s.error_rate},
              {"std_error", s.std_error},
              {"binning_violations", s.binning_violations},
              {"collisions", s.collisions}};
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == std::floor(v) && std::abs(v) < 1e15) return std::to_string(static_cast<long long>(v));
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_region_csv(std::ostream& out, const RegionCurve& curve,
                      const std::vector<std::pair<std::string, std::string>>& meta) {
  out << "# meta: instance=" << curve.instance_id << '\n';
  out << "# meta: construction=" << curve.construction << '\n';
  out << "# meta: n=" << curve.n << '\n';
  out << "# meta: eps=" << format_double(curve.eps) << '\n';
  for (const auto& [key, value] : meta) out << "# meta: " << key << '=' << value << '\n';
  out << curve.first_name << ',' << curve.second_name << '\n';
  for (const auto& [a, b] : curve.points) out << format_double(a) << ',' << format_double(b) << '\n';
}

}  // namespace fbl
