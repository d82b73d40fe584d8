#include "irpf/spd.hpp"

#include <string>

namespace irpf {

std::string_view to_string(DistanceKind kind) {
  switch (kind) {
    case DistanceKind::Riemannian: return "riemannian";
    case DistanceKind::Euclidean: return "euclidean";
    case DistanceKind::DiagEuclidean: return "diag_euclidean";
  }
  return "unknown";
}

DistanceKind parse_distance_kind(std::string_view name) {
  if (name == "riemannian") return DistanceKind::Riemannian;
  if (name == "euclidean") return DistanceKind::Euclidean;
  if (name == "diag_euclidean") return DistanceKind::DiagEuclidean;
  throw Error(ErrorCode::InvalidConfig, "unknown distance '" + std::string(name) + "'");
}

}  // namespace irpf
