#pragma once

#include "cgq/errors.hpp"
#include "cgq/quadrature.hpp"
#include "cgq/lagrange.hpp"
#include "cgq/tableau.hpp"
#include "cgq/mesh.hpp"
#include "cgq/operators.hpp"
#include "cgq/diagnostics.hpp"
#include "cgq/stepper.hpp"
#include "cgq/groundstate.hpp"
#include "cgq/io.hpp"
#include "cgq/experiment.hpp"
