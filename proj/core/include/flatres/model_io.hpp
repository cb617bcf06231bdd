#pragma once

#include <string>

#include "flatres/residual.hpp"

namespace flatres {

/// Versioned human-readable text format for trained residuals: block
/// enablement, layer shapes, row-major weights, and normalization stats.
/// Doubles use 17 significant digits, so save -> load -> eval is bitwise
/// identical to the original.  Exact-closure blocks are not serializable.
void save_model(const LowerTriangularResidual& res, const std::string& path,
                const std::vector<std::string>& comments = {});

LowerTriangularResidual load_model(const std::string& path);

}  // namespace flatres
