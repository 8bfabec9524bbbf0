#pragma once

#include "motifclass/classifier.hpp"
#include "motifclass/core.hpp"
#include "motifclass/corpus.hpp"
#include "motifclass/demo.hpp"
#include "motifclass/embedding.hpp"
#include "motifclass/metrics.hpp"
#include "motifclass/motif_index.hpp"
#include "motifclass/pipeline.hpp"
#include "motifclass/pseudo.hpp"
#include "motifclass/select.hpp"
#include "motifclass/sequence.hpp"
#include "motifclass/sphere.hpp"
#include "motifclass/synthetic.hpp"
#include "motifclass/vmf.hpp"
