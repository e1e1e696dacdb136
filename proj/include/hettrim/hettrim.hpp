#pragma once

#include "hettrim/analysis.hpp"
#include "hettrim/dataset.hpp"
#include "hettrim/errors.hpp"
#include "hettrim/estimator.hpp"
#include "hettrim/normal.hpp"
#include "hettrim/nuisance.hpp"
#include "hettrim/regressor.hpp"
#include "hettrim/rng.hpp"
#include "hettrim/simharness.hpp"
#include "hettrim/simultaneous.hpp"
#include "hettrim/trimming.hpp"
