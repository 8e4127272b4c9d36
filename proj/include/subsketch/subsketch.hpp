#pragma once

#include "subsketch/analysis.hpp"
#include "subsketch/embeddings.hpp"
#include "subsketch/errors.hpp"
#include "subsketch/estimators.hpp"
#include "subsketch/kernelize.hpp"
#include "subsketch/losses.hpp"
#include "subsketch/numkit.hpp"
#include "subsketch/solvers.hpp"
#include "subsketch/spectrum.hpp"
#include "subsketch/synth.hpp"
