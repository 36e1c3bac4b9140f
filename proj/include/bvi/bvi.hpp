#pragma once

#include "bvi/certify.hpp"
#include "bvi/core.hpp"
#include "bvi/feasible_set.hpp"
#include "bvi/geometry.hpp"
#include "bvi/io.hpp"
#include "bvi/oracle.hpp"
#include "bvi/problems.hpp"
#include "bvi/solver.hpp"
