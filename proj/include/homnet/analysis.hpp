#pragma once

#include "homnet/dhn.hpp"

#include <functional>

namespace homnet {

// Calls visit on every connected pointed database over the schema with at most
// max_size values and every value in at most degree_bound facts, once per
// isomorphism class, in order of growing fact count. Values are named "0".."n-1"
// with "0" the root. Stops when visit returns false. Returns the number visited.
std::size_t enumerate_connected(const Schema& schema, int degree_bound, int max_size,
                                const std::function<bool(const PointedDatabase&)>& visit);

enum class Verdict { Witness, EmptyDefinitive, EmptyBounded };
std::string to_string(Verdict v);

struct AnalysisResult {
  Verdict verdict = Verdict::EmptyBounded;
  std::optional<PointedDatabase> witness;
  std::size_t examined = 0;
  std::uint64_t required_size = 0;  // cap making an empty verdict definitive (0: none)
  std::string note;

  nlohmann::json to_json() const;
};

// Size cap from which a connected network's empty verdict is definitive: the number
// of values within distance layers * (largest pattern size) of the root in any
// database of the degree bound. Saturates at UINT64_MAX.
template <typename S>
std::uint64_t definitive_size(const Dhn<S>& net, int degree_bound);

// Searches for a pointed database the network accepts.
template <typename S>
AnalysisResult emptiness_bounded(const Dhn<S>& net, int degree_bound, int max_size);

// Searches for a pointed database accepted by a and rejected by b.
template <typename S>
AnalysisResult subsumption_bounded(const Dhn<S>& a, const Dhn<S>& b, int degree_bound, int max_size);

}  // namespace homnet
