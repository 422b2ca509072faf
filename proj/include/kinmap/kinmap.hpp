#pragma once

// Umbrella header.

#include "kinmap/error.hpp"
#include "kinmap/pose.hpp"
#include "kinmap/charts.hpp"
#include "kinmap/mechanism.hpp"
#include "kinmap/mechanism_io.hpp"
#include "kinmap/kinematics.hpp"
#include "kinmap/csv.hpp"
#include "kinmap/tracking.hpp"
#include "kinmap/predicate.hpp"
#include "kinmap/planning.hpp"
#include "kinmap/validation.hpp"
#include "kinmap/plan_io.hpp"
#include "kinmap/svg.hpp"
