#pragma once

#include "emgres/common.hpp"
#include "emgres/dataio.hpp"
#include "emgres/encoding.hpp"
#include "emgres/lda.hpp"
#include "emgres/metrics.hpp"
#include "emgres/neuron.hpp"
#include "emgres/pipeline.hpp"
#include "emgres/plasticity.hpp"
#include "emgres/readout.hpp"
#include "emgres/reservoir.hpp"
#include "emgres/svm.hpp"
#include "emgres/topology.hpp"
