#pragma once

#include "incrlearn/benchmark.hpp"
#include "incrlearn/checkpoint.hpp"
#include "incrlearn/classify.hpp"
#include "incrlearn/dataset.hpp"
#include "incrlearn/distill.hpp"
#include "incrlearn/errors.hpp"
#include "incrlearn/exemplars.hpp"
#include "incrlearn/math.hpp"
#include "incrlearn/net.hpp"
#include "incrlearn/report.hpp"
#include "incrlearn/rng.hpp"
#include "incrlearn/strategy.hpp"
#include "incrlearn/svg.hpp"
#include "incrlearn/trainer.hpp"
#include "incrlearn/training_set.hpp"
