#pragma once

// File formats: grid CSV, witness / classification CSV, JSON configuration
// documents and JSON reports.
//
// Grid CSV:
//   # n=<int>
//   # box=<lo>..<hi>,<lo>..<hi>,...        one range per axis
//   # res=<int>,<int>,...
//   i_1,...,i_d,c_1,...,c_d,value           one row per node, flat order
// Numbers use the shortest decimal form that round-trips; lines end in LF.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "heisvisc/comparison.hpp"
#include "heisvisc/cones.hpp"
#include "heisvisc/envelopes.hpp"
#include "heisvisc/fields.hpp"
#include "heisvisc/operators.hpp"
#include "heisvisc/perron.hpp"
#include "heisvisc/viscosity.hpp"

namespace heisvisc::io {

using json = nlohmann::ordered_json;

/// Shortest round-trip decimal text of x.
std::string fmt(double x);

void write_grid_csv(std::ostream& os, const GridField& g);
GridField read_grid_csv(std::istream& is);
void write_grid_csv(const std::string& path, const GridField& g);
GridField read_grid_csv(const std::string& path);

/// node,witness
void write_witness_csv(std::ostream& os, const std::vector<std::size_t>& witness);
/// node,tag,margin
void write_classification_csv(std::ostream& os, const Classification& c);
/// iteration,residual
void write_history_csv(std::ostream& os, const std::vector<double>& history);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);
json read_json_file(const std::string& path);

// ---- configuration (errors are SchemaError naming the JSON path)

/// {"alpha": number|expr, "beta": ..., "gamma": ..., "m": number}
OperatorSpec parse_operator(const json& j, int n, const std::string& path = "operator");
/// {"family": "trace"|"posdef"|"sigma_k"|"spectral", "k": int, "tol": number, "g": expr}
ConeSpec parse_cone(const json& j, const std::string& path = "cone");
/// {"n": int, "box": [[lo,hi],...], "res": [int,...]}
Domain parse_domain(const json& j, std::vector<int>* res, const std::string& path = "");
/// {"expr": text} | {"grid": csv path} | {"const": number}, on the given lattice.
GridField parse_field(const json& j, const Domain& d, const std::vector<int>& res, const std::string& base_dir,
                      const std::string& path);

/// Problem document: domain, operator, cone, boundary expression and sub /
/// super as fields or {"bump": B} barriers around the boundary data.
Problem parse_problem(const json& j, const std::string& base_dir, SolveOptions* opts);

// ---- reports

json to_json(const StructuralReport& r);
json to_json(const AxiomReport& r);
json to_json(const CheckReport& r);
json to_json(const Classification& c, bool with_nodes = false);
json to_json(const KeyLemmaReport& r);
json to_json(const Lemma35Report& r);
json to_json(const TouchingReport& r);
json to_json(const SolveResult& r);
json to_json(const UniquenessReport& r);

}  // namespace heisvisc::io
