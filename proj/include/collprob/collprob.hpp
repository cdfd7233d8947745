#pragma once

#include "collprob/boundary.hpp"
#include "collprob/evaluate.hpp"
#include "collprob/fixtures.hpp"
#include "collprob/gaussian.hpp"
#include "collprob/geometry.hpp"
#include "collprob/io.hpp"
#include "collprob/montecarlo.hpp"
#include "collprob/overlap.hpp"
#include "collprob/prediction.hpp"
#include "collprob/quadrature.hpp"
#include "collprob/riskeval.hpp"
#include "collprob/rng.hpp"
#include "collprob/series.hpp"
