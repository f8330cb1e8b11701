#pragma once

// Umbrella header for the whole pipeline.

#include "autodiff.hpp"
#include "checkpoint.hpp"
#include "config.hpp"
#include "corpus.hpp"
#include "gradcheck.hpp"
#include "hgraph.hpp"
#include "init.hpp"
#include "metrics.hpp"
#include "optim.hpp"
#include "report.hpp"
#include "rng.hpp"
#include "sampler.hpp"
#include "sgt.hpp"
#include "synth.hpp"
#include "textenc.hpp"
#include "topics.hpp"
#include "trainer.hpp"
