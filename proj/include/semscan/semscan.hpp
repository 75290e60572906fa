#pragma once

#include "semscan/assign.hpp"
#include "semscan/config.hpp"
#include "semscan/contrastive.hpp"
#include "semscan/corpus.hpp"
#include "semscan/error.hpp"
#include "semscan/eval.hpp"
#include "semscan/io.hpp"
#include "semscan/lda.hpp"
#include "semscan/pipeline.hpp"
#include "semscan/scan.hpp"
#include "semscan/simulate.hpp"
#include "semscan/synthetic.hpp"
