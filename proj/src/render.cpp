#include "otshape/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

namespace otshape {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kMargin = 30.0;

std::string f2(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

struct Bounds {
  double min_x = 0.0, max_x = 1.0, min_y = 0.0, max_y = 1.0;
  bool started = false;

  void include(const Vec2& p, double pad = 0.0) {
    if (!started) {
      min_x = p.x() - pad;
      max_x = p.x() + pad;
      min_y = p.y() - pad;
      max_y = p.y() + pad;
      started = true;
      return;
    }
    min_x = std::min(min_x, p.x() - pad);
    max_x = std::max(max_x, p.x() + pad);
    min_y = std::min(min_y, p.y() - pad);
    max_y = std::max(max_y, p.y() + pad);
  }
};

struct Mapper {
  double scale, off_x, off_y, max_y;

  double x(double wx) const { return off_x + (wx)*scale; }
  double y(double wy) const { return off_y + (max_y - wy) * scale; }  // y up
};

}  // namespace

std::string render_svg(const Trajectory& trajectory, const ScenarioSpec& spec,
                       const RenderOptions& options) {
  if (trajectory.agents != spec.agent_count()) {
    throw InvalidInputError(
        "trajectory has " + std::to_string(trajectory.agents) +
        " agents but the scenario declares " +
        std::to_string(spec.agent_count()));
  }
  if (options.stride < 1) throw InvalidInputError("render stride must be >= 1");

  // Reference markers: uncentered terminal references as-is; centered
  // terminal references shifted to the mean destination when one exists
  // (their absolute coordinates are arbitrary). Running references are
  // relative by construction and are not drawn.
  std::vector<Vec2> refs;
  std::vector<ObstacleSpec> obstacles;
  const Vec2* mean_dest = nullptr;
  const auto terms = spec.resolved_terms();
  for (const CostTerm& term : terms) {
    if (const auto* dest = std::get_if<MeanDestinationTerm>(&term)) {
      mean_dest = &dest->destination;
    }
  }
  for (const CostTerm& term : terms) {
    if (const auto* shape = std::get_if<ShapeCostSpec>(&term)) {
      if (shape->mode != ShapeCostSpec::Mode::Terminal) continue;
      if (!shape->centered) {
        for (const Vec2& p : shape->reference.points) refs.push_back(p);
      } else if (mean_dest) {
        const Vec2 shift = *mean_dest - shape->reference.mean();
        for (const Vec2& p : shape->reference.points) refs.push_back(p + shift);
      }
    } else if (const auto* obst = std::get_if<ObstacleTerm>(&term)) {
      obstacles.insert(obstacles.end(), obst->obstacles.begin(),
                       obst->obstacles.end());
    }
  }

  Bounds bounds;
  for (const AgentState& s : trajectory.states) bounds.include(s.position);
  for (const Vec2& p : refs) bounds.include(p);
  if (mean_dest) bounds.include(*mean_dest);
  for (const ObstacleSpec& o : obstacles) bounds.include(o.center, o.radius);

  const double dx = std::max(bounds.max_x - bounds.min_x, 1e-6);
  const double dy = std::max(bounds.max_y - bounds.min_y, 1e-6);
  const double scale =
      std::min((kWidth - 2 * kMargin) / dx, (kHeight - 2 * kMargin) / dy);
  Mapper map{scale, kMargin - bounds.min_x * scale, kMargin, bounds.max_y};

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + f2(kWidth) +
         "\" height=\"" + f2(kHeight) + "\" viewBox=\"0 0 " + f2(kWidth) +
         " " + f2(kHeight) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

  for (const ObstacleSpec& o : obstacles) {
    svg += "<circle class=\"obstacle\" cx=\"" + f2(map.x(o.center.x())) +
           "\" cy=\"" + f2(map.y(o.center.y())) + "\" r=\"" +
           f2(o.radius * scale) +
           "\" fill=\"#d9d9d9\" stroke=\"#555555\" stroke-width=\"1.5\"/>\n";
  }

  for (const Vec2& p : refs) {
    const double cx = map.x(p.x()), cy = map.y(p.y());
    svg += "<path class=\"ref\" d=\"M " + f2(cx - 4) + " " + f2(cy) + " L " +
           f2(cx + 4) + " " + f2(cy) + " M " + f2(cx) + " " + f2(cy - 4) +
           " L " + f2(cx) + " " + f2(cy + 4) +
           "\" stroke=\"#444444\" stroke-width=\"1.2\"/>\n";
  }

  auto marker = [&](const Vec2& p, const char* color, double opacity) {
    svg += "<circle class=\"agent\" cx=\"" + f2(map.x(p.x())) + "\" cy=\"" +
           f2(map.y(p.y())) + "\" r=\"3.50\" fill=\"" + color + "\"";
    if (opacity < 1.0) svg += " fill-opacity=\"" + f2(opacity) + "\"";
    svg += "/>\n";
  };

  const int S = trajectory.steps;
  for (int s = options.stride; s < S; s += options.stride) {
    for (int i = 0; i < trajectory.agents; ++i) {
      marker(trajectory.state(i, s).position, "#1f77b4", options.opacity);
    }
  }
  for (int i = 0; i < trajectory.agents; ++i) {
    marker(trajectory.state(i, 0).position, "#1f77b4", 1.0);
  }
  for (int i = 0; i < trajectory.agents; ++i) {
    marker(trajectory.state(i, S).position, "#ff7f0e", 1.0);
  }

  svg += "</svg>\n";
  return svg;
}

}  // namespace otshape
