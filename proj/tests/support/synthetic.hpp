#pragma once

#include <cstdint>
#include <vector>

#include "mmeval/calibration.hpp"

namespace synth {

// Generating structure: S_text from fixed intra-text weights, overall as an
// affine function of (S_text, s_relevance, s_diversity) plus optional noise.
struct Generator {
  std::size_t systems = 9;
  std::size_t articles = 200;
  double w_fact = 0.55;
  double w_rel = 0.01;
  double w_coh = 0.29;
  double w_flu = 0.15;
  double intercept = 1.0;
  double b_text = 2.7721;
  double b_relevance = 0.2256;
  double b_diversity = -0.4991;
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
};

double generated_text_score(const Generator& g, const mmeval::CalibrationRow& r);

std::vector<mmeval::CalibrationRow> generate(const Generator& g);

}  // namespace synth
