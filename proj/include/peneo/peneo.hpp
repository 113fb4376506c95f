#pragma once

// Umbrella header for the full library.

#include "peneo/autograd.hpp"
#include "peneo/baseline.hpp"
#include "peneo/checkpoint.hpp"
#include "peneo/config.hpp"
#include "peneo/corpus.hpp"
#include "peneo/decoder.hpp"
#include "peneo/encoder.hpp"
#include "peneo/evalkit.hpp"
#include "peneo/gradcheck.hpp"
#include "peneo/link_parser.hpp"
#include "peneo/metrics.hpp"
#include "peneo/ops.hpp"
#include "peneo/optim.hpp"
#include "peneo/relabel.hpp"
#include "peneo/rng.hpp"
#include "peneo/synth.hpp"
#include "peneo/tensor.hpp"
#include "peneo/tokenize.hpp"
#include "peneo/train.hpp"
