#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "chainmetric/markov_chain.hpp"

namespace chainmetric::tool {

using json = nlohmann::ordered_json;

// Unreadable or malformed input files; maps to exit code 74.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json read_json(const std::string& path);

// Accepts a bare square array or {"kernel": [[...]], "states": [...], "pi": [...]}.
MarkovChain chain_from_json(const json& doc);
MarkovChain read_chain(const std::string& path);

// Accepts a bare array or {"values": [...]}; with as_measure the values are a probability
// vector and are divided by pi. Validated as a density.
Vector density_from_json(const json& doc, const MarkovChain& chain, bool as_measure);
Vector read_density(const std::string& path, const MarkovChain& chain, bool as_measure);

json to_json(const Vector& v);
json to_json(const std::vector<double>& v);

// Fixed-column CSV with a versioned format line first.
void write_csv(const std::string& path, const std::string& format, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

}  // namespace chainmetric::tool
