#pragma once

// Umbrella header: the whole library in one include.

#include "qualifit/analysis.hpp"
#include "qualifit/app.hpp"
#include "qualifit/config.hpp"
#include "qualifit/constraint.hpp"
#include "qualifit/error.hpp"
#include "qualifit/likelihood.hpp"
#include "qualifit/model.hpp"
#include "qualifit/sampler.hpp"
#include "qualifit/synthetic.hpp"
#include "qualifit/trajectory.hpp"
