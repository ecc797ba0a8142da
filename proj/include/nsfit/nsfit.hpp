#pragma once

// Umbrella header: the whole library in dependency order.

#include "nsfit/version.hpp"
#include "nsfit/errors.hpp"
#include "nsfit/spectrum.hpp"
#include "nsfit/model.hpp"
#include "nsfit/fitter.hpp"
#include "nsfit/analysis.hpp"
#include "nsfit/synth.hpp"
#include "nsfit/io.hpp"
#include "nsfit/cli.hpp"
