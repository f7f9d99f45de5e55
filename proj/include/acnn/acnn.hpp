#pragma once

// Umbrella header: the whole library in one include.

#include "acnn/version.hpp"
#include "acnn/grid.hpp"
#include "acnn/mnist_io.hpp"
#include "acnn/feature_scan.hpp"
#include "acnn/conv_builder.hpp"
#include "acnn/metric_head.hpp"
#include "acnn/network_runtime.hpp"
#include "acnn/eval_harness.hpp"
#include "acnn/export_io.hpp"
