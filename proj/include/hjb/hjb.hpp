#pragma once

// Umbrella header for the whole library.

#include "hjb/errors.hpp"
#include "hjb/domain.hpp"
#include "hjb/field.hpp"
#include "hjb/csv.hpp"
#include "hjb/cost.hpp"
#include "hjb/tridiagonal.hpp"
#include "hjb/pde.hpp"
#include "hjb/transform.hpp"
#include "hjb/rng.hpp"
#include "hjb/sde.hpp"
#include "hjb/verify.hpp"
