#pragma once

#include <string>

#include "otshape/dynamics.hpp"
#include "otshape/scenario.hpp"

namespace otshape {

struct RenderOptions {
  int stride = 1;        // keep every stride-th intermediate timestep
  double opacity = 0.25; // fill opacity of intermediate markers
};

/// Static SVG of a run: start positions opaque blue, final positions opaque
/// orange, intermediate positions transparent; reference points drawn as
/// crosses, obstacles as filled circles.
/// Deterministic: identical inputs give byte-identical output. Throws
/// InvalidInputError when the trajectory's agent count does not match the
/// scenario's.
std::string render_svg(const Trajectory& trajectory, const ScenarioSpec& spec,
                       const RenderOptions& options = {});

}  // namespace otshape
