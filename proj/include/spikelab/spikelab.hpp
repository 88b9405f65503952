#pragma once

#include "spikelab/types.hpp"
#include "spikelab/gauss.hpp"
#include "spikelab/bubble.hpp"
#include "spikelab/constants.hpp"
#include "spikelab/ball.hpp"
#include "spikelab/projected.hpp"
#include "spikelab/integrate.hpp"
#include "spikelab/interactions.hpp"
#include "spikelab/nonlinearity.hpp"
#include "spikelab/reduced.hpp"
#include "spikelab/ansatz.hpp"
#include "spikelab/energy.hpp"
#include "spikelab/constructor.hpp"
#include "spikelab/lab.hpp"
#include "spikelab/config.hpp"
#include "spikelab/report.hpp"
