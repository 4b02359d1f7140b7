#pragma once

// Umbrella header for the whole pipeline.

#include "becaptcha/bundle.hpp"
#include "becaptcha/classify.hpp"
#include "becaptcha/corpus_io.hpp"
#include "becaptcha/errors.hpp"
#include "becaptcha/eval.hpp"
#include "becaptcha/features.hpp"
#include "becaptcha/forest.hpp"
#include "becaptcha/gan.hpp"
#include "becaptcha/matrix.hpp"
#include "becaptcha/net.hpp"
#include "becaptcha/rng.hpp"
#include "becaptcha/svm_smo.hpp"
#include "becaptcha/synth_hand.hpp"
#include "becaptcha/toml_lite.hpp"
#include "becaptcha/trace.hpp"
#include "becaptcha/version.hpp"
