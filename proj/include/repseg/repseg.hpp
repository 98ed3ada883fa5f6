#pragma once

#include "repseg/error.hpp"
#include "repseg/seed.hpp"
#include "repseg/skeleton.hpp"
#include "repseg/features.hpp"
#include "repseg/labels.hpp"
#include "repseg/neural/model.hpp"
#include "repseg/neural/loss.hpp"
#include "repseg/neural/optimizer.hpp"
#include "repseg/neural/train.hpp"
#include "repseg/neural/gradcheck.hpp"
#include "repseg/neural/checkpoint.hpp"
#include "repseg/decode.hpp"
#include "repseg/metrics.hpp"
#include "repseg/harness/synth.hpp"
#include "repseg/harness/dataset.hpp"
#include "repseg/harness/folds.hpp"
#include "repseg/harness/experiment.hpp"
