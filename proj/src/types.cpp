#include "spiked/types.hpp"

namespace spiked {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kConfig: return "configuration error";
    case ErrorKind::kDimension: return "dimension error";
    case ErrorKind::kSize: return "size error";
    case ErrorKind::kLookup: return "lookup error";
    case ErrorKind::kNormalization: return "normalization error";
    case ErrorKind::kResolventSingular: return "resolvent-singular error";
    case ErrorKind::kDegenerateReconstruction: return "degenerate-reconstruction error";
    case ErrorKind::kNoConvergence: return "no-convergence error";
    case ErrorKind::kLeftOutlierRegion: return "left-outlier-region error";
    case ErrorKind::kOracle: return "oracle error";
  }
  return "unknown error";
}

}  // namespace spiked
