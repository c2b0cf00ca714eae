#pragma once

// Umbrella header: reconstruction-weight graph learning over multiple
// feature views and label tasks, transductive label inference, spectral
// embedding, transfer diagnostics, and the experiment harness.

#include "recgraph/dataset.hpp"
#include "recgraph/embedding.hpp"
#include "recgraph/evaluation.hpp"
#include "recgraph/experiment.hpp"
#include "recgraph/inference.hpp"
#include "recgraph/io.hpp"
#include "recgraph/parallel.hpp"
#include "recgraph/rng.hpp"
#include "recgraph/synthetic.hpp"
#include "recgraph/types.hpp"
#include "recgraph/weights.hpp"
