#pragma once

#include <spn/augment.hpp>
#include <spn/dataformat.hpp>
#include <spn/dsp.hpp>
#include <spn/error.hpp>
#include <spn/eval.hpp>
#include <spn/features.hpp>
#include <spn/fft.hpp>
#include <spn/matrix.hpp>
#include <spn/nn/adam.hpp>
#include <spn/nn/checkpoint.hpp>
#include <spn/nn/layers.hpp>
#include <spn/nn/loss.hpp>
#include <spn/nn/model.hpp>
#include <spn/nn/tensor.hpp>
#include <spn/nn/train.hpp>
#include <spn/random.hpp>
#include <spn/simulate.hpp>
#include <spn/spline.hpp>
#include <spn/wrtft.hpp>
