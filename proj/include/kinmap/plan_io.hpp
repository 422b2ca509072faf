#pragma once

// Plan documents (JSON). A document names the map, the recipe that rebuilds
// the section generators, and per piece its domain predicate together with
// the recipe piece whose generator it uses.
//
// {
//   "map": "planar_rr", "params": [2, 1], "note": "",
//   "recipe": {"kind": "builtin", "name": "planar_rr"},
//   "pieces": [{"domain": {...}, "section": {"recipe_piece": 0, "descriptor": "..."}}, ...]
// }

#include <string>

#include <json.hpp>

#include "kinmap/mechanism_io.hpp"
#include "kinmap/planning.hpp"
#include "kinmap/validation.hpp"

namespace kinmap {

namespace detail {

inline std::vector<double> params_of(const nlohmann::json& r, const std::string& path) {
  std::vector<double> out;
  if (!r.contains("params")) return out;
  const auto& p = r.at("params");
  if (!p.is_array()) throw Error(ErrorCode::parse, "field '" + path + ".params': expected an array");
  for (size_t i = 0; i < p.size(); ++i) out.push_back(number(p[i], path + ".params[" + std::to_string(i) + "]"));
  return out;
}

inline std::string string_field(const nlohmann::json& r, const std::string& path, const char* key) {
  const auto& v = member(r, path, key);
  if (!v.is_string()) throw Error(ErrorCode::parse, "field '" + path + "." + key + "': expected a string");
  return v.get<std::string>();
}

inline KinematicMap recipe_map(const nlohmann::json& r, const std::string& path) {
  return canonical_map(string_field(r, path, "map"), params_of(r, path));
}

}  // namespace detail

/// Named covers accepted by combine recipes: cat "standard"; sec
/// "half_annulus" (with "branch"), "pointing_lunes", "h_fixture".
inline std::vector<SectionPiece> named_sec_cover(const KinematicMap& k, const std::string& name, const std::string& branch) {
  if (name == "half_annulus") return half_annulus_csec_cover(k, branch.empty() ? "elbow_up" : branch);
  if (name == "pointing_lunes") return pointing_csec_cover(k);
  if (name == "h_fixture") return h_fixture_csec_cover(k);
  throw Error(ErrorCode::unknown_name, "section cover '" + name + "'");
}

/// Rebuilds a plan from its recipe.
inline ManipulationPlan plan_from_recipe(const nlohmann::json& r, const std::string& path = "recipe") {
  if (!r.is_object()) throw Error(ErrorCode::parse, "field '" + path + "': expected an object");
  const std::string kind = detail::string_field(r, path, "kind");
  if (kind == "builtin") return builtin_plan(detail::string_field(r, path, "name"));
  if (kind == "identity") return identity_plan(detail::recipe_map(r, path));
  if (kind == "h_fixture") return h_fixture_plan();
  if (kind == "h_fixture_single") return h_fixture_single_piece_plan();
  if (kind == "product") {
    const ManipulationPlan f = plan_from_recipe(detail::member(r, path, "left"), path + ".left");
    const ManipulationPlan g = plan_from_recipe(detail::member(r, path, "right"), path + ".right");
    return product_plan(f, g, detail::recipe_map(r, path));
  }
  if (kind == "pullback") {
    const KinematicMap k = detail::recipe_map(r, path);
    const ManipulationPlan base = plan_from_recipe(detail::member(r, path, "base"), path + ".base");
    return pullback_plan(k, canonical_section(k, detail::string_field(r, path, "section")), base);
  }
  if (kind == "combine") {
    const KinematicMap k = detail::recipe_map(r, path);
    if (detail::string_field(r, path, "cat") != "standard") throw Error(ErrorCode::unknown_name, "cat cover must be 'standard'");
    const std::string branch = r.contains("branch") ? detail::string_field(r, path, "branch") : "";
    return combine_csec_cat(k, standard_cat_cover(k.config_chart), named_sec_cover(k, detail::string_field(r, path, "sec"), branch),
                            straight_connector, r);
  }
  if (kind == "disjointify") {
    const ManipulationPlan base = plan_from_recipe(detail::member(r, path, "base"), path + ".base");
    return disjointify(base, detail::integer(detail::member(r, path, "grid"), path + ".grid"));
  }
  throw Error(ErrorCode::parse, "field '" + path + ".kind': unknown recipe kind '" + kind + "'");
}

/// Document for a plan. Piece i refers to recipe piece i unless the plan
/// carries an explicit mapping (set by parse_plan).
inline nlohmann::json plan_to_json(const ManipulationPlan& p, const std::vector<int>& recipe_pieces = {}) {
  require(!p.recipe.is_null(), "plan has no recipe and cannot be serialized");
  nlohmann::json pieces = nlohmann::json::array();
  for (int i = 0; i < p.piece_count(); ++i) {
    const int src = recipe_pieces.empty() ? i : recipe_pieces.at(i);
    pieces.push_back({{"domain", predicate_to_json(p.pieces[i].domain)},
                      {"section", {{"recipe_piece", src}, {"descriptor", p.pieces[i].section}}}});
  }
  return {{"map", p.map.tag}, {"params", p.map.params}, {"note", p.note}, {"recipe", p.recipe}, {"pieces", pieces}};
}

struct PlanDocument {
  ManipulationPlan plan;
  std::vector<int> recipe_pieces;
};

/// Parses a plan document: the recipe rebuilds the generators, then each
/// piece takes its domain and descriptor from the document.
inline PlanDocument parse_plan_document(const std::string& text) {
  using detail::member;
  const nlohmann::json j = detail::parse_json_text(text);
  if (!j.is_object()) throw Error(ErrorCode::parse, "plan document must be an object");
  detail::reject_unknown(j, "plan", {"map", "params", "note", "recipe", "pieces"});
  const std::string tag = detail::string_field(j, "plan", "map");
  const std::vector<double> params = detail::params_of(j, "plan");
  PlanDocument doc;
  const ManipulationPlan built = plan_from_recipe(member(j, "plan", "recipe"), "recipe");
  if (built.map.tag != tag || built.map.params != params)
    throw Error(ErrorCode::validation, "recipe builds a plan for '" + built.map.tag + "', document names '" + tag + "'");
  doc.plan = built;
  doc.plan.recipe = j.at("recipe");
  doc.plan.note = j.contains("note") ? detail::string_field(j, "plan", "note") : "";
  doc.plan.pieces.clear();
  const auto& pieces = member(j, "plan", "pieces");
  if (!pieces.is_array() || pieces.empty()) throw Error(ErrorCode::parse, "field 'pieces': expected a nonempty array");
  for (size_t i = 0; i < pieces.size(); ++i) {
    const std::string path = "pieces[" + std::to_string(i) + "]";
    const auto& pj = pieces[i];
    if (!pj.is_object()) throw Error(ErrorCode::parse, "field '" + path + "': expected an object");
    detail::reject_unknown(pj, path, {"domain", "section"});
    const auto& sj = member(pj, path, "section");
    if (!sj.is_object()) throw Error(ErrorCode::parse, "field '" + path + ".section': expected an object");
    detail::reject_unknown(sj, path + ".section", {"recipe_piece", "descriptor"});
    const int src = detail::integer(member(sj, path + ".section", "recipe_piece"), path + ".section.recipe_piece");
    if (src < 0 || src >= built.piece_count())
      throw Error(ErrorCode::validation, "field '" + path + ".section.recipe_piece': recipe has " +
                                             std::to_string(built.piece_count()) + " pieces");
    PlanPiece piece = built.pieces[src];
    piece.domain = predicate_from_json(member(pj, path, "domain"), path + ".domain");
    piece.section = sj.contains("descriptor") ? detail::string_field(sj, path + ".section", "descriptor") : piece.section;
    doc.plan.pieces.push_back(std::move(piece));
    doc.recipe_pieces.push_back(src);
  }
  return doc;
}

inline ManipulationPlan parse_plan(const std::string& text) { return parse_plan_document(text).plan; }

inline std::string serialize_plan(const ManipulationPlan& p, const std::vector<int>& recipe_pieces = {}) {
  return plan_to_json(p, recipe_pieces).dump(2) + "\n";
}

inline std::string serialize_plan(const PlanDocument& d) { return serialize_plan(d.plan, d.recipe_pieces); }

}  // namespace kinmap
