#pragma once

#include "errors.hpp"
#include "geometry.hpp"
#include "field.hpp"
#include "numerics.hpp"
#include "kernel.hpp"
#include "serialize.hpp"
#include "quadrature.hpp"
#include "nonlocal.hpp"
#include "evolution.hpp"
#include "modulus.hpp"
#include "barrier.hpp"
#include "regularity.hpp"
#include "metrics.hpp"
#include "experiments.hpp"
#include "version.hpp"
