#ifndef GFEIG_GFEIG_HPP
#define GFEIG_GFEIG_HPP

#include "gfeig/errors.hpp"
#include "gfeig/quadrature.hpp"
#include "gfeig/problem_model.hpp"
#include "gfeig/grid.hpp"
#include "gfeig/discretization.hpp"
#include "gfeig/eigensolver.hpp"
#include "gfeig/evolution.hpp"
#include "gfeig/assumption_audit.hpp"
#include "gfeig/oracles.hpp"
#include "gfeig/config.hpp"
#include "gfeig/io.hpp"

#endif  // GFEIG_GFEIG_HPP
