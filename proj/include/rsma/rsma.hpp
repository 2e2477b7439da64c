#pragma once

#include "rsma/alphabet.hpp"
#include "rsma/channel.hpp"
#include "rsma/config.hpp"
#include "rsma/gmi.hpp"
#include "rsma/optimize.hpp"
#include "rsma/rates.hpp"
#include "rsma/rng.hpp"
#include "rsma/sweep.hpp"
