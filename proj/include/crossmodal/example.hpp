#ifndef CROSSMODAL_EXAMPLE_HPP
#define CROSSMODAL_EXAMPLE_HPP

#include <cstdint>
#include <vector>

#include "crossmodal/taxonomy.hpp"

namespace crossmodal {

// One paired video/audio sequence with its hierarchical labels.
// Frame matrices are row-major [frames x dim]; rows past true_length are
// exactly zero (padding).
struct MultiModalExample {
  std::uint64_t id = 0;
  std::size_t frames = 0;
  std::size_t dim_video = 0;
  std::size_t dim_audio = 0;
  std::size_t true_length = 0;
  std::vector<double> video;  // frames * dim_video
  std::vector<double> audio;  // frames * dim_audio
  LabelSet labels;            // ancestor-closed
  bool correlated = true;
};

}  // namespace crossmodal

#endif
