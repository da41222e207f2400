#pragma once

#include "squash/solver.hpp"

namespace squash {

enum class BoundKind { lower_sdp, upper_heuristic, pure_closed_form };

inline const char* to_string(BoundKind k) {
  switch (k) {
    case BoundKind::lower_sdp: return "lower_sdp";
    case BoundKind::upper_heuristic: return "upper_heuristic";
    default: return "pure_closed_form";
  }
}

/// A bound value in bits plus provenance.
struct BoundResult {
  double value = 0.0;          // raw value; a valid bound only per `kind`
  double value_clamped = 0.0;  // max(value, 0); presentation convenience
  BoundKind kind = BoundKind::lower_sdp;
  int m = 0, k = 0;
  int d_D = 0, d_E = 0, restarts = 0;
  SolveStatus solver_status = SolveStatus::optimal;
  double primal_dual_gap = 0.0;
  double wall_time = 0.0;
};

}  // namespace squash
