#pragma once

#include "tbn/baselines.hpp"
#include "tbn/corpus.hpp"
#include "tbn/error.hpp"
#include "tbn/evaluation.hpp"
#include "tbn/guidance.hpp"
#include "tbn/inference.hpp"
#include "tbn/io.hpp"
#include "tbn/lbfgs.hpp"
#include "tbn/parameters.hpp"
#include "tbn/random.hpp"
#include "tbn/structure.hpp"
#include "tbn/synth.hpp"
#include "tbn/temporal.hpp"
