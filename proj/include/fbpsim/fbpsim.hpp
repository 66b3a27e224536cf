#pragma once

#include "fbpsim/errors.hpp"
#include "fbpsim/graphs.hpp"
#include "fbpsim/potentials.hpp"
#include "fbpsim/grid.hpp"
#include "fbpsim/laplacian.hpp"
#include "fbpsim/elliptic.hpp"
#include "fbpsim/expression.hpp"
#include "fbpsim/signal.hpp"
#include "fbpsim/state.hpp"
#include "fbpsim/scenario.hpp"
#include "fbpsim/integrator.hpp"
#include "fbpsim/diagnostics.hpp"
#include "fbpsim/dependence.hpp"
#include "fbpsim/hysteresis.hpp"
#include "fbpsim/config.hpp"
#include "fbpsim/io.hpp"
#include "fbpsim/commands.hpp"
