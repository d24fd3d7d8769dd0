#pragma once

#include "spotvol/bench.hpp"
#include "spotvol/eigen.hpp"
#include "spotvol/error.hpp"
#include "spotvol/estimator.hpp"
#include "spotvol/kernels.hpp"
#include "spotvol/market_data.hpp"
#include "spotvol/matrix.hpp"
#include "spotvol/simulation.hpp"
#include "spotvol/spectral.hpp"
