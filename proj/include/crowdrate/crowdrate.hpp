#ifndef CROWDRATE_CROWDRATE_HPP
#define CROWDRATE_CROWDRATE_HPP

#include "crowdrate/dataset.hpp"
#include "crowdrate/datagen.hpp"
#include "crowdrate/diagnostics.hpp"
#include "crowdrate/evaluate.hpp"
#include "crowdrate/io.hpp"
#include "crowdrate/kernel.hpp"
#include "crowdrate/math.hpp"
#include "crowdrate/model_spec.hpp"
#include "crowdrate/params.hpp"
#include "crowdrate/posterior.hpp"
#include "crowdrate/rng.hpp"
#include "crowdrate/sampler.hpp"

#endif
