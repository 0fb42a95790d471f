#pragma once

// Driving-scene complexity toolkit: heat-map generation from object
// detections, a from-scratch tensor/autodiff substrate, the fused
// camera+dynamics attention classifier, and the dataset/metrics harness.

#include "dscx/checkpoint.hpp"
#include "dscx/dataset.hpp"
#include "dscx/detections_io.hpp"
#include "dscx/dynamics.hpp"
#include "dscx/dynamics_net.hpp"
#include "dscx/encoder.hpp"
#include "dscx/errors.hpp"
#include "dscx/heatmap.hpp"
#include "dscx/kernels.hpp"
#include "dscx/layers.hpp"
#include "dscx/metrics.hpp"
#include "dscx/model.hpp"
#include "dscx/optimizer.hpp"
#include "dscx/pgm.hpp"
#include "dscx/random.hpp"
#include "dscx/sample.hpp"
#include "dscx/spatial.hpp"
#include "dscx/synth.hpp"
#include "dscx/tape.hpp"
#include "dscx/tensor.hpp"
#include "dscx/train.hpp"
