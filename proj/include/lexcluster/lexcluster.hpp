#pragma once

#include "lexcluster/brown.hpp"
#include "lexcluster/clustering.hpp"
#include "lexcluster/corpus.hpp"
#include "lexcluster/embed.hpp"
#include "lexcluster/error.hpp"
#include "lexcluster/experiment.hpp"
#include "lexcluster/features.hpp"
#include "lexcluster/hash.hpp"
#include "lexcluster/io.hpp"
#include "lexcluster/kmeans.hpp"
#include "lexcluster/metrics.hpp"
#include "lexcluster/model.hpp"
#include "lexcluster/rng.hpp"
#include "lexcluster/synthetic.hpp"
#include "lexcluster/tokenize.hpp"
