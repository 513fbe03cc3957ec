#pragma once

#include "prodrome/alarm.hpp"
#include "prodrome/artifacts.hpp"
#include "prodrome/autoencoder.hpp"
#include "prodrome/commands.hpp"
#include "prodrome/config.hpp"
#include "prodrome/csv.hpp"
#include "prodrome/cwt.hpp"
#include "prodrome/denstream.hpp"
#include "prodrome/error.hpp"
#include "prodrome/eval.hpp"
#include "prodrome/model_io.hpp"
#include "prodrome/pipeline.hpp"
#include "prodrome/signal.hpp"
#include "prodrome/svg.hpp"
#include "prodrome/synth.hpp"
#include "prodrome/training.hpp"
#include "prodrome/windows.hpp"
