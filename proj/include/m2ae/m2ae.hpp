#pragma once

#include "m2ae/deform_conv.hpp"
#include "m2ae/flops.hpp"
#include "m2ae/image_io.hpp"
#include "m2ae/losses.hpp"
#include "m2ae/mask_predictor.hpp"
#include "m2ae/motion.hpp"
#include "m2ae/network.hpp"
#include "m2ae/pruned_conv.hpp"
#include "m2ae/rng.hpp"
#include "m2ae/tensor.hpp"
#include "m2ae/weights.hpp"
