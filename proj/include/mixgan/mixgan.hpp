#pragma once

// Umbrella header for the mixup-GAN feature learning library.

#include "mixgan/baselines.hpp"
#include "mixgan/checkpoint.hpp"
#include "mixgan/config.hpp"
#include "mixgan/core/error.hpp"
#include "mixgan/core/matrix.hpp"
#include "mixgan/core/rng.hpp"
#include "mixgan/csv.hpp"
#include "mixgan/data.hpp"
#include "mixgan/drivers.hpp"
#include "mixgan/eval.hpp"
#include "mixgan/mixup.hpp"
#include "mixgan/model.hpp"
#include "mixgan/nn/adam.hpp"
#include "mixgan/nn/finite_diff.hpp"
#include "mixgan/nn/losses.hpp"
#include "mixgan/nn/mlp.hpp"
#include "mixgan/training.hpp"
