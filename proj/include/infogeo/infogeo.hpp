#pragma once

#include "infogeo/errors.hpp"
#include "infogeo/family.hpp"
#include "infogeo/field_theory.hpp"
#include "infogeo/fisher.hpp"
#include "infogeo/geometry.hpp"
#include "infogeo/kinds.hpp"
#include "infogeo/metric.hpp"
#include "infogeo/montecarlo.hpp"
#include "infogeo/quadrature.hpp"
#include "infogeo/signature.hpp"
#include "infogeo/types.hpp"

namespace infogeo {
inline constexpr const char* kVersion = "0.1.0";
}
