#pragma once

// Small model and data settings shared by tests that train.

#include "unisyn/config.hpp"
#include "unisyn/dataset.hpp"
#include "unisyn/phantom.hpp"

namespace unisyn::testing {

inline ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.image_size = 32;
  c.model.widths = {4, 8, 8, 8, 8};
  c.model.attention_width = 2;
  c.model.discriminator_widths = {4, 8, 8, 8};
  c.epochs = 2;
  c.decay_start = 1;
  c.batch_size = 4;
  c.checkpoint_every = 1;
  c.optimizer.kind = OptimizerKind::kAdam;
  c.learning_rate = 1e-3;
  return c;
}

inline SliceDataset tiny_slices(int subjects, std::int64_t slices_each, std::uint64_t seed = 1) {
  PhantomSpec spec;
  spec.depth = 4;
  spec.height = 32;
  spec.width = 32;
  SlicingOptions o;
  o.slices_per_subject = slices_each;
  o.crop_height = 32;
  o.crop_width = 32;
  return make_slice_dataset(generate_phantom_dataset(seed, spec, subjects), o);
}

}  // namespace unisyn::testing
