#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fbl/bounds.hpp"
#include "fbl/codec_sim.hpp"
#include "fbl/instances.hpp"
#include "fbl/prob.hpp"
#include "fbl/region.hpp"

namespace fbl {

using Json = nlohmann::ordered_json;

// Pmf:      {"probs": [...], "renormalize": false} or a bare array.
// Channel:  {"dims": [in, out], "probs": [row-major], "renormalize": false}.
// JointPmf: {"dims": [...], "probs": [row-major], "renormalize": false}.
// Parse errors throw InvalidArgument; unknown keys are rejected.
Pmf pmf_from_json(const Json& j);
Channel channel_from_json(const Json& j);
JointPmf joint_from_json(const Json& j);

Json to_json(const Pmf& pmf);
Json to_json(const Channel& channel);
Json to_json(const JointPmf& joint);

using Instance = std::variant<WakInstance, WzInstance, GpInstance>;

// {"kind": "wak" | "wz" | "gp", ...} with the instance fields by name.
// time_share defaults to a single point mass.
Instance instance_from_json(const Json& j);
Json to_json(const WakInstance& inst);
Json to_json(const WzInstance& inst);
Json to_json(const GpInstance& inst);
Json to_json(const Instance& inst);

// 64-bit FNV-1a, as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);
// fnv1a_hex of the compact serialization.
std::string instance_hash(const Instance& inst);

Json to_json(const BoundParams& params);
Json to_json(const BoundReport& report);
Json to_json(const TrialStats& stats);

// Doubles as round-trip decimal; infinities as "inf" / "-inf".
std::string format_double(double v);

// "# meta: key=value" lines, then the header row, then one row per point.
void write_region_csv(std::ostream& out, const RegionCurve& curve,
                      const std::vector<std::pair<std::string, std::string>>& meta);

}  // namespace fbl
