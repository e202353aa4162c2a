#pragma once

#include "critlab/core.hpp"
#include "critlab/grid.hpp"
#include "critlab/weights.hpp"
#include "critlab/elliptic.hpp"
#include "critlab/quadrature.hpp"
#include "critlab/bubbles.hpp"
#include "critlab/variational.hpp"
#include "critlab/inequalities.hpp"
