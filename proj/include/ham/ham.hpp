// Copyright 2026 The HAM Authors. Apache 2.0 License.
#pragma once

#include "ham/analysis.hpp"
#include "ham/checkpoint.hpp"
#include "ham/config_io.hpp"
#include "ham/controller.hpp"
#include "ham/core_math.hpp"
#include "ham/corpus.hpp"
#include "ham/cost_model.hpp"
#include "ham/errors.hpp"
#include "ham/ham_layer.hpp"
#include "ham/niah.hpp"
#include "ham/rnn_memory.hpp"
#include "ham/router.hpp"
#include "ham/scratchpad.hpp"
