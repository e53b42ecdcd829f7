#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace m2ae {

/// Multiply-accumulate ledger. One MAC counts as one unit; gather/unfold
/// index arithmetic is data movement and is not recorded.
struct FlopLedger {
  struct Entry {
    std::string op;
    int64_t dense_macs = 0;
    int64_t actual_macs = 0;
  };
  std::vector<Entry> entries;

  void record(const std::string& op, int64_t dense, int64_t actual) {
    entries.push_back({op, dense, actual});
  }
  void record_dense(const std::string& op, int64_t macs) { record(op, macs, macs); }

  void merge(const FlopLedger& other) {
    entries.insert(entries.end(), other.entries.begin(), other.entries.end());
  }

  int64_t total_dense() const {
    int64_t t = 0;
    for (const auto& e : entries) t += e.dense_macs;
    return t;
  }
  int64_t total_actual() const {
    int64_t t = 0;
    for (const auto& e : entries) t += e.actual_macs;
    return t;
  }

  struct Totals {
    int64_t dense = 0;
    int64_t actual = 0;
  };
  Totals totals() const { return {total_dense(), total_actual()}; }
};

/// Structured per-entry and total summary as JSON.
inline nlohmann::json flop_report(const FlopLedger& ledger) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : ledger.entries) {
    entries.push_back({{"op", e.op},
                       {"dense_macs", e.dense_macs},
                       {"actual_macs", e.actual_macs},
                       {"ratio", e.dense_macs > 0
                                     ? static_cast<double>(e.actual_macs) / e.dense_macs
                                     : 0.0}});
  }
  const int64_t dense = ledger.total_dense();
  const int64_t actual = ledger.total_actual();
  return {{"entries", entries},
          {"totals",
           {{"dense_macs", dense},
            {"actual_macs", actual},
            {"ratio", dense > 0 ? static_cast<double>(actual) / dense : 0.0}}}};
}

}  // namespace m2ae
