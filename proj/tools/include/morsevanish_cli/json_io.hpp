#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "morsevanish/critical.hpp"
#include "morsevanish/flow.hpp"
#include "morsevanish/homology.hpp"
#include "morsevanish/oracle.hpp"

namespace morsevanish::cli {

using nlohmann::json;

inline constexpr int kSchema = 1;

/// Finite doubles stay numbers (the serializer prints the shortest
/// round-trip form); non-finite ones become "inf", "-inf" or "nan".
json number(double x);
double to_double(const json& j);

json to_json(const CriticalPoint& p);
CriticalPoint critical_point_from_json(const json& j);
json to_json(const std::vector<CriticalPoint>& points);
std::vector<CriticalPoint> critical_points_from_json(const json& j);

json to_json(const CountTable& counts);
CountTable counts_from_json(const json& j);

json to_json(const Integer& x);
json to_json(const IntMatrix& m);

/// {"0": {"betti": b, "torsion": [...]}, ...} for degrees 0..top.
json to_json(const HomologyResult& h, int top_degree);
HomologyResult homology_from_json(const json& j);

json to_json(const OracleResult& r, int top_degree);
OracleResult oracle_from_json(const json& j);

json to_json(const MorseComplex& c);
json to_json(const SweepReport& r);
json summary_json(const TrajectoryRecord& t);

/// Trajectory path as CSV: s, coordinates, value.
std::string path_csv(const TrajectoryRecord& t, const std::vector<std::string>& variables);

/// Deterministic text form: sorted keys, two-space indent, trailing newline.
std::string dump(const json& j);

}  // namespace morsevanish::cli
