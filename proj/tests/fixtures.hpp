/* Copyright 2026 The PADA Lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Small datasets and configurations shared by the slower end-to-end tests.

#ifndef PADA_TESTS_FIXTURES_HPP_
#define PADA_TESTS_FIXTURES_HPP_

#include "pada/harness.hpp"

namespace pada::fixture {

inline MultiDomainDataset small_synthetic(int domains = 3, int per_domain = 30) {
  SyntheticSpec spec;
  spec.num_domains = domains;
  spec.examples_per_domain = per_domain;
  return generate_synthetic(spec);
}

inline ExperimentConfig tiny_experiment() {
  ExperimentConfig c;
  c.model.d_model = 8;
  c.model.n_layers = 1;
  c.model.n_heads = 2;
  c.model.d_ffn = 16;
  c.model.max_input_len = 32;
  c.model.max_output_len = 6;
  c.model.conv_filters = 4;
  c.model.conv_width = 3;
  c.train.epochs = 2;
  c.train.batch_size = 8;
  c.train.lr = 1e-3;
  c.train.alpha = 0.5;
  c.beam.beam_size = 4;
  c.beam.num_groups = 2;
  c.beam.num_candidates = 2;
  c.beam.max_output_len = 6;
  c.drf.embedding_dim = 4;
  c.drf.k_drf = 10;
  c.drf.prompt_features = 3;
  return c;
}

}  // namespace pada::fixture

#endif  // PADA_TESTS_FIXTURES_HPP_
