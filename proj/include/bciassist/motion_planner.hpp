#pragma once

// Base motion (BI2RRT* over SE(2) for a disc robot), effector roadmaps with
// A* queries, and grasp/drop pose sampling in 3D task space.

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "json.hpp"

#include "bciassist/common.hpp"
#include "bciassist/pose.hpp"

namespace bciassist {

inline constexpr double kAngleWeight = 0.3;  // metres per radian

double se2_distance(const Pose2D& a, const Pose2D& b);

// ---- 2D base workspace -------------------------------------------------------

struct ConvexPolygon {
  std::vector<Eigen::Vector2d> vertices;  // either orientation
};

struct Disc {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.0;
};

struct Surface {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  Eigen::Vector2d size = Eigen::Vector2d::Zero();
  double height = 0.0;
};

class Workspace {
 public:
  Workspace() = default;
  Workspace(Eigen::Vector2d lo, Eigen::Vector2d hi, double robot_radius);

  static Workspace from_json(const nlohmann::json& j);

  void add(ConvexPolygon p);
  void add(Disc d);
  void add_surface(const std::string& id, Surface s) { surfaces_[id] = s; }

  const Eigen::Vector2d& lo() const { return lo_; }
  const Eigen::Vector2d& hi() const { return hi_; }
  double robot_radius() const { return radius_; }
  const std::vector<ConvexPolygon>& polygons() const { return polygons_; }
  const std::vector<Disc>& discs() const { return discs_; }
  const std::map<std::string, Surface>& surfaces() const { return surfaces_; }

  // Distance from p to the closest obstacle boundary (0 when inside one).
  double obstacle_distance(const Eigen::Vector2d& p) const;
  // The robot disc centred at p is inside bounds and touches no obstacle.
  bool point_free(const Eigen::Vector2d& p) const;
  bool pose_free(const Pose2D& q) const { return point_free({q.x, q.y}); }
  // Discretized straight-line check; `resolution` is the step in metres.
  bool segment_free(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                    double resolution = 0.01) const;
  bool segment_free(const Pose2D& a, const Pose2D& b, double resolution = 0.01) const {
    return segment_free({a.x, a.y}, {b.x, b.y}, resolution);
  }

 private:
  Eigen::Vector2d lo_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d hi_ = Eigen::Vector2d::Zero();
  double radius_ = 0.0;
  std::vector<ConvexPolygon> polygons_;
  std::vector<Disc> discs_;
  std::map<std::string, Surface> surfaces_;
};

double point_polygon_distance(const Eigen::Vector2d& p, const ConvexPolygon& poly);

// ---- BI2RRT* -------------------------------------------------------------------

struct RrtConfig {
  std::size_t max_iterations = 4000;
  double step = 0.6;           // max extension in SE(2) distance
  double rewire_gamma = 3.0;   // near radius = min(step, gamma * (log n / n)^(1/3))
  double collision_resolution = 0.01;
  std::size_t cost_sample_every = 100;
  // Instrumentation: called with every accepted informed sample and the
  // best cost it was drawn against.
  std::function<void(const Pose2D&, double)> on_informed_sample;
};

struct PathResult {
  std::vector<Pose2D> waypoints;
  double first_cost = 0.0;
  double final_cost = 0.0;
  std::size_t iterations_to_first = 0;
  std::size_t iterations = 0;
  std::vector<double> cost_history;  // best cost every cost_sample_every iterations
  double cost() const { return final_cost; }
};

double path_cost(const std::vector<Pose2D>& waypoints);

// Errors: precondition_failed when start or goal collides, infeasible when no
// path is found within the iteration budget.
PathResult bi2rrt_star(const Pose2D& start, const Pose2D& goal, const Workspace& ws,
                       const RrtConfig& config, std::uint64_t seed);

// ---- effector task space -------------------------------------------------------

struct EffectorPose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
};

// Euclidean position distance plus weighted rotation angle.
double task_distance(const EffectorPose& a, const EffectorPose& b);

class Roadmap {
 public:
  struct Edge {
    std::size_t to;
    double weight;
    bool valid;
  };

  std::size_t add_node(const EffectorPose& p);
  // Undirected; weight is the task-space distance between the endpoints.
  void add_edge(std::size_t a, std::size_t b, bool valid = true);

  std::size_t size() const { return nodes_.size(); }
  const EffectorPose& node(std::size_t i) const { return nodes_.at(i); }
  const std::vector<Edge>& edges(std::size_t i) const { return adj_.at(i); }
  std::size_t edge_count() const;

  // Random roadmap: n poses in the box, each joined to its k nearest
  // neighbours; `valid` marks edges (default all valid).
  static Roadmap random(std::size_t n, std::size_t k, const Eigen::Vector3d& lo,
                        const Eigen::Vector3d& hi, Rng& rng,
                        const std::function<bool(const EffectorPose&, const EffectorPose&)>&
                            valid = nullptr);

 private:
  std::vector<EffectorPose> nodes_;
  std::vector<std::vector<Edge>> adj_;
};

struct GraphPath {
  std::vector<std::size_t> nodes;
  double cost = 0.0;
};

// A* over valid edges with the task-distance heuristic; nullopt when
// disconnected.
std::optional<GraphPath> astar(const Roadmap& map, std::size_t from, std::size_t to);

struct PrmQueryConfig {
  double connect_radius = 0.5;
  std::function<bool(const EffectorPose&, const EffectorPose&)> segment_valid;
};

struct PosePath {
  std::vector<EffectorPose> poses;
  double cost = 0.0;
};

// Errors: precondition_failed when an endpoint cannot be attached to the
// roadmap, infeasible when the attached endpoints are disconnected.
PosePath prm_query(const Roadmap& map, const EffectorPose& start, const EffectorPose& goal,
                   const PrmQueryConfig& config = {});

// Axis-aligned boxes the effector must stay out of, optional reach sphere.
struct EffectorWorld {
  struct Box {
    Eigen::Vector3d lo, hi;
  };
  std::vector<Box> obstacles;
  std::optional<Eigen::Vector3d> base;
  double reach = std::numeric_limits<double>::infinity();

  bool pose_free(const EffectorPose& p) const;
};

// Orientation whose approach (x) axis points along `dir`.
Eigen::Quaterniond approach_orientation(const Eigen::Vector3d& dir);

// n attempts on the standoff sphere around the object, facing it; invalid
// ones are dropped. infeasible when none survive.
std::vector<EffectorPose> sample_grasp_poses(const Eigen::Vector3d& object, double standoff,
                                             std::size_t n, Rng& rng,
                                             const EffectorWorld& world = {});

struct PlaneFitConfig {
  double inlier_threshold = 0.005;
  double max_tilt_deg = 10.0;
  std::size_t iterations = 400;
  std::size_t min_inliers = 30;
  std::size_t poses_per_plane = 8;
};

struct HorizontalPlane {
  double height = 0.0;
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  std::size_t inliers = 0;
};

struct DropPose {
  EffectorPose pose;
  std::size_t plane = 0;
};

struct DropSampling {
  std::vector<HorizontalPlane> planes;  // by descending support
  std::vector<DropPose> poses;
};

// Consensus plane search on the point set; poses are placed `clearance`
// above plane inliers, gripper pointing down. infeasible when no horizontal
// plane exists.
DropSampling sample_drop_poses(const std::vector<Eigen::Vector3d>& points, double clearance,
                               Rng& rng, const PlaneFitConfig& config = {});

// Synthetic point cloud of the workspace surfaces (top faces) with Gaussian
// height noise.
std::vector<Eigen::Vector3d> surface_point_cloud(const Workspace& ws, double spacing,
                                                 double noise, Rng& rng);

}  // namespace bciassist
