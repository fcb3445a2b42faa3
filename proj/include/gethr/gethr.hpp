#ifndef GETHR_GETHR_HPP
#define GETHR_GETHR_HPP

// Umbrella header: pulls in the whole library.

#include "gethr/dataset.hpp"
#include "gethr/errors.hpp"
#include "gethr/lstm.hpp"
#include "gethr/matrix.hpp"
#include "gethr/metrics.hpp"
#include "gethr/model.hpp"
#include "gethr/model_io.hpp"
#include "gethr/numerics.hpp"
#include "gethr/rng.hpp"
#include "gethr/trainer.hpp"

#endif
