#pragma once

#include "plltm/corpus.hpp"
#include "plltm/corpus_io.hpp"
#include "plltm/eval.hpp"
#include "plltm/model.hpp"
#include "plltm/model_io.hpp"
#include "plltm/rng.hpp"
#include "plltm/synth.hpp"
#include "plltm/version.hpp"
