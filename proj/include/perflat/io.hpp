#pragma once

// JSON formats for spaces, variables, measures and dividend processes.
//
//   space:    {"name":?, "times":[0..T], "leaves":[{"id","p"}], "atoms":{"t":[[ids]]}}
//   variable: {"space":name, "values":{leafId: num | "inf"}}
//   measure:  {"kind", "params":{...}, "z_d":?, "z_u":?}
//   process:  {"space":name, "payments":{"t":{atomOrLeafId: num | "inf"}}}
//
// Numbers are written with 17 significant digits, infinities as strings.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "perflat/dividends.hpp"
#include "perflat/lattice.hpp"
#include "perflat/measures.hpp"

namespace perflat::io {

/// Reads and parses a JSON file; syntax errors become ParseError with a line.
nlohmann::json read_json_file(const std::filesystem::path& path);
nlohmann::json parse_json_text(const std::string& text);

/// Serializes with 17-digit numbers. indent < 0 gives one line.
std::string dump(const nlohmann::json& j, int indent = 2);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

/// Number or "inf"/"-inf"/"+inf". `field` names the location for errors.
double read_ext(const nlohmann::json& j, const std::string& field);

/// `default_name` is used when the document has no "name".
SpacePtr parse_space(const nlohmann::json& j, const std::string& default_name = "space");
nlohmann::json space_to_json(const FilteredSpace& sp);

XVar parse_xvar(const nlohmann::json& j, const SpacePtr& space);
nlohmann::json xvar_to_json(const XVar& x);
/// {"space", "stage", "values":{atomId: value}}.
nlohmann::json tvar_to_json(const TVar& v);

Utility parse_utility(const nlohmann::json& j, const std::string& field = "utility");
nlohmann::json utility_to_json(const Utility& u);

MeasureSpec parse_measure(const nlohmann::json& j, const FilteredSpace& space);
nlohmann::json measure_to_json(const MeasureSpec& spec, const FilteredSpace& space);

DividendProcess parse_dividends(const nlohmann::json& j, const SpacePtr& space);
nlohmann::json dividends_to_json(const DividendProcess& d);

}  // namespace perflat::io
