#pragma once

#include "closedgeo/loopspace.hpp"
#include "closedgeo/morse.hpp"
#include "closedgeo/spectral.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace closedgeo {

using Json = nlohmann::ordered_json;

/// Bumped whenever a document layout changes incompatibly; see schemas/.
inline constexpr int kSchemaVersion = 1;

/// "%.17g".
std::string format_double(double x);

Json to_json(const Manifold& m);
Manifold manifold_from_json(const Json& j);

Json to_json(const Polygon& p);
/// Reconnects the stored vertices; a stored homotopy class must match.
Polygon polygon_from_json(const Json& j);

Json to_json(const ClosedGeodesic& g, double grad_tol = 1e-10);
/// Accepts a geodesic document (re-certified with its stored grad_tol) or a bare polygon.
ClosedGeodesic geodesic_from_json(const Json& j);

Json to_json(const SpectralData& s);
Json to_json(const IteratedIndex& r);
Json to_json(const TypeNumberTable& t, int s);
Json to_json(const SeriesExpansion& s);
Json to_json(const MorseVerdict& v);

/// Columns: iteration,max_length,grad_norm.
void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace);
/// Columns: z_arg,lambda,n.
void write_bott_csv(std::ostream& os, const std::vector<BottSample>& samples);
/// Columns: n,index,nullity,bott_index,bott_nullity,direct_index,direct_nullity,agree.
void write_iterates_csv(std::ostream& os, const std::vector<IteratedIndex>& rows);
/// Two integer columns M_k,B_k, one row per k starting at 0; an optional header line
/// and '#' comments are skipped.
MorseCheckInput read_morse_csv(std::istream& is);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace closedgeo
