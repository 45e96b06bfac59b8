#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "errors.hpp"

namespace ccasched {

// The twelve hardware performance counters collected per profiling run, in
// schema order (also the CSV column order). Values are event counts; rates per
// kilo-instruction fit the same schema.
struct HpcVector {
  double l1d_access = 0.0;
  double l1d_miss = 0.0;
  double l1i_access = 0.0;
  double l1i_miss = 0.0;
  double l2_access = 0.0;
  double l2_miss = 0.0;
  double itlb_miss = 0.0;
  double dtlb_miss = 0.0;
  double int_issue = 0.0;
  double fp_issue = 0.0;
  double br_inst = 0.0;
  double br_mispred = 0.0;

  static constexpr int kCount = 12;

  static constexpr std::array<std::string_view, 12> names = {
      "l1d_access", "l1d_miss",  "l1i_access", "l1i_miss",
      "l2_access",  "l2_miss",   "itlb_miss",  "dtlb_miss",
      "int_issue",  "fp_issue",  "br_inst",    "br_mispred"};

  double operator[](int i) const {
    switch (i) {
      case 0: return l1d_access;
      case 1: return l1d_miss;
      case 2: return l1i_access;
      case 3: return l1i_miss;
      case 4: return l2_access;
      case 5: return l2_miss;
      case 6: return itlb_miss;
      case 7: return dtlb_miss;
      case 8: return int_issue;
      case 9: return fp_issue;
      case 10: return br_inst;
      case 11: return br_mispred;
      default: throw ValidationError("hpc index out of range");
    }
  }

  double& operator[](int i) {
    switch (i) {
      case 0: return l1d_access;
      case 1: return l1d_miss;
      case 2: return l1i_access;
      case 3: return l1i_miss;
      case 4: return l2_access;
      case 5: return l2_miss;
      case 6: return itlb_miss;
      case 7: return dtlb_miss;
      case 8: return int_issue;
      case 9: return fp_issue;
      case 10: return br_inst;
      case 11: return br_mispred;
      default: throw ValidationError("hpc index out of range");
    }
  }
};

// Schema index of a counter name, or -1 when the name is not a counter.
inline int hpc_index(std::string_view name) {
  for (int i = 0; i < HpcVector::kCount; ++i)
    if (HpcVector::names[static_cast<std::size_t>(i)] == name) return i;
  return -1;
}

// First violated counter invariant, or nullopt when the vector is consistent.
// The negativity check is written to also reject NaN.
inline std::optional<std::string> hpc_violation(const HpcVector& h) {
  for (int i = 0; i < HpcVector::kCount; ++i)
    if (!(h[i] >= 0.0))
      return std::string(HpcVector::names[static_cast<std::size_t>(i)]) +
             " must be non-negative";
  if (h.l1d_miss > h.l1d_access) return std::string("l1d_miss must not exceed l1d_access");
  if (h.l2_miss > h.l2_access) return std::string("l2_miss must not exceed l2_access");
  if (h.br_mispred > h.br_inst) return std::string("br_mispred must not exceed br_inst");
  return std::nullopt;
}

}  // namespace ccasched
