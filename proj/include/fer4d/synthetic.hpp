#pragma once

#include "fer4d/config.hpp"
#include "fer4d/mesh.hpp"

namespace fer4d {

// Stand-in for licensed 4D scans: per subject an ellipsoidal head surface
// with 83 landmarks at fixed surface coordinates, per expression a
// class-specific displacement field ramped in over the frames. Frame 0 is
// the neutral face, so all classes of one subject share it.
//
// The face looks toward -z, y is up. Each frame also carries a hair cap
// above the forehead and a few stray points floating in front of the face,
// both of which preprocessing is expected to strip.
Dataset generate_synthetic(const SyntheticSpec& spec);

// Subject identifiers produced by the generator: S001, S002, ...
std::string synthetic_subject_id(std::size_t index);

}  // namespace fer4d
