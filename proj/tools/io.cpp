#include "io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace chainmetric::tool {
namespace {

Vector vector_from(const json& arr, const std::string& what) {
  if (!arr.is_array()) throw IoError(what + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw IoError(what + ": entry " + std::to_string(i) + " is not a number");
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

}  // namespace

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError("'" + path + "' is not valid JSON: " + e.what());
  }
}

MarkovChain chain_from_json(const json& doc) {
  const json& rows = doc.is_object() ? doc.value("kernel", json()) : doc;
  if (!rows.is_array() || rows.empty()) throw IoError("chain: expected a non-empty square array 'kernel'");
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector row = vector_from(rows[static_cast<std::size_t>(i)], "kernel row " + std::to_string(i));
    if (row.size() != n) throw IoError("chain: row " + std::to_string(i) + " has the wrong length");
    k.row(i) = row.transpose();
  }
  std::vector<std::string> states;
  if (doc.is_object() && doc.contains("states")) {
    for (const auto& s : doc["states"]) states.push_back(s.get<std::string>());
  }
  if (doc.is_object() && doc.contains("pi")) return build_chain(k, vector_from(doc["pi"], "pi"), states);
  return build_chain(k, states);
}

MarkovChain read_chain(const std::string& path) { return chain_from_json(read_json(path)); }

Vector density_from_json(const json& doc, const MarkovChain& chain, bool as_measure) {
  const json& arr = doc.is_object() ? doc.value("values", json()) : doc;
  const Vector v = vector_from(arr, "density");
  if (v.size() != chain.size()) {
    throw IoError("density has " + std::to_string(v.size()) + " entries, chain has " +
                  std::to_string(chain.size()) + " states");
  }
  return as_measure ? Density::from_measure(chain, v).values() : Density(chain, v).values();
}

Vector read_density(const std::string& path, const MarkovChain& chain, bool as_measure) {
  return density_from_json(read_json(path), chain, as_measure);
}

json to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json to_json(const std::vector<double>& v) { return json(v); }

void write_csv(const std::string& path, const std::string& format, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "# format: " << format << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << "\n";
  char buf[32];
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", row[i]);
      out << (i ? "," : "") << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace chainmetric::tool
