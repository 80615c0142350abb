#pragma once

#include <string>
#include <vector>

#include "dslfiqa/degrade/degrade.hpp"
#include "dslfiqa/dsl/encoder.hpp"

namespace dslfiqa::dsl {

enum class Regime { kDsl, kPatch, kNaive };

const char* regime_name(Regime r);
Regime regime_from_name(const std::string& name);

// Trains the degradation encoder under one of the three contrastive regimes.
// Every iteration resamples its batch (a fresh Set S and Set R for the dual-
// set regime) from the iteration's own RNG stream, so runs are bit-identical
// for a fixed config seed.
TrainedEncoder train_encoder(Regime regime, const std::vector<Image>& clean_pool, const degrade::RPool& r_pool,
                             const EncoderConfig& config);

}  // namespace dslfiqa::dsl
