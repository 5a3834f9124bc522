#include "easimix/dimensions.hpp"

#include <string>

namespace easimix {

void Dimensions::validate(bool require_identification) const {
  auto fail = [](const std::string& what) { throw DimensionError("invalid dimensions: " + what); };
  if (goods < 2) fail("need at least two goods");
  if (degree < 1) fail("Engel polynomial degree must be >= 1");
  if (demographics < 0 || price_covariates < 0 || utility_covariates < 0 || instruments < 0)
    fail("covariate counts must be non-negative");
  if (clusters < 1) fail("need at least one cluster");
  if (require_identification && instruments < endogenous())
    fail("order condition violated: " + std::to_string(instruments) + " instruments for " +
         std::to_string(endogenous()) + " endogenous regressors");
}

}  // namespace easimix
