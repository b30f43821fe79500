#pragma once

// Umbrella header for the whole library.

#include "chart.hpp"
#include "coefficient.hpp"
#include "error.hpp"
#include "expr.hpp"
#include "grassmann.hpp"
#include "parse.hpp"
#include "print.hpp"
#include "eval.hpp"
#include "integrate.hpp"
#include "linalg.hpp"
#include "solve.hpp"
#include "cartan.hpp"
#include "homogeneity.hpp"
#include "pfaffian.hpp"
#include "darboux.hpp"
#include "straighten.hpp"
#include "manifest.hpp"
