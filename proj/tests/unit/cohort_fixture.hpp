#pragma once

#include "voicerisk/feature_store.hpp"
#include "voicerisk/synth_cohort.hpp"

namespace testing {

struct CohortData {
  voicerisk::Cohort cohort;
  voicerisk::Dataset gemlite;
  voicerisk::Dataset embedding;
};

inline CohortData feature_cohort(std::uint64_t seed, bool with_effect = true) {
  voicerisk::CohortSpec spec;
  spec.seed = seed;
  spec.embedding_dim = 16;
  if (with_effect) spec.effect = voicerisk::default_effect_template();
  CohortData d{voicerisk::generate_features(spec), {}};
  const std::vector<const voicerisk::FeatureTable*> sources{&d.cohort.gemlite};
  d.gemlite = voicerisk::join_dataset(d.cohort.segments, sources);
  const std::vector<const voicerisk::FeatureTable*> emb{&d.cohort.embeddings};
  d.embedding = voicerisk::join_dataset(d.cohort.segments, emb);
  return d;
}

}  // namespace testing
