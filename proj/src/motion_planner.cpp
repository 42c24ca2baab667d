#include "bciassist/motion_planner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <random>

namespace bciassist {

using nlohmann::json;
using Eigen::Vector2d;
using Eigen::Vector3d;

double se2_distance(const Pose2D& a, const Pose2D& b) {
  return std::hypot(a.x - b.x, a.y - b.y) +
         kAngleWeight * std::abs(normalize_angle(a.theta - b.theta));
}

// ---- workspace -----------------------------------------------------------------

namespace {

double cross(const Vector2d& a, const Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

double point_segment_distance(const Vector2d& p, const Vector2d& a, const Vector2d& b) {
  const Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (a + t * ab - p).norm();
}

Vector2d vec2(const json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::invalid_argument, "expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

double point_polygon_distance(const Vector2d& p, const ConvexPolygon& poly) {
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  int pos = 0, neg = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const Vector2d& a = v[i];
    const Vector2d& b = v[(i + 1) % n];
    const double c = cross(b - a, p - a);
    pos += c > 0.0;
    neg += c < 0.0;
    best = std::min(best, point_segment_distance(p, a, b));
  }
  if (pos == 0 || neg == 0) return 0.0;  // inside or on the boundary
  return best;
}

Workspace::Workspace(Vector2d lo, Vector2d hi, double robot_radius)
    : lo_(lo), hi_(hi), radius_(robot_radius) {
  if (!(hi.x() > lo.x() && hi.y() > lo.y())) {
    throw Error(ErrorCode::invalid_argument, "workspace bounds are empty");
  }
  if (robot_radius < 0.0) throw Error(ErrorCode::invalid_argument, "negative robot radius");
}

void Workspace::add(ConvexPolygon p) {
  const auto& v = p.vertices;
  if (v.size() < 3) throw Error(ErrorCode::invalid_argument, "polygon needs 3 vertices");
  int pos = 0, neg = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double c = cross(v[(i + 1) % v.size()] - v[i], v[(i + 2) % v.size()] - v[(i + 1) % v.size()]);
    pos += c > 1e-12;
    neg += c < -1e-12;
  }
  if (pos && neg) throw Error(ErrorCode::invalid_argument, "polygon is not convex");
  for (const auto& q : v) {
    if (q.x() < lo_.x() || q.y() < lo_.y() || q.x() > hi_.x() || q.y() > hi_.y()) {
      throw Error(ErrorCode::invalid_argument, "obstacle outside workspace bounds");
    }
  }
  polygons_.push_back(std::move(p));
}

void Workspace::add(Disc d) {
  if (d.radius <= 0.0) throw Error(ErrorCode::invalid_argument, "disc radius must be positive");
  if (d.center.x() - d.radius < lo_.x() || d.center.y() - d.radius < lo_.y() ||
      d.center.x() + d.radius > hi_.x() || d.center.y() + d.radius > hi_.y()) {
    throw Error(ErrorCode::invalid_argument, "obstacle outside workspace bounds");
  }
  discs_.push_back(d);
}

Workspace Workspace::from_json(const json& j) {
  try {
    const auto& b = j.at("bounds");
    if (!b.is_array() || b.size() != 4) {
      throw Error(ErrorCode::invalid_argument, "bounds must be [x0, y0, x1, y1]");
    }
    Workspace ws({b[0].get<double>(), b[1].get<double>()}, {b[2].get<double>(), b[3].get<double>()},
                 j.value("robot_radius", 0.0));
    const json obstacles = j.value("obstacles", json::array());
    const json surfaces = j.value("surfaces", json::object());
    for (const auto& o : obstacles) {
      if (o.contains("polygon")) {
        ConvexPolygon p;
        for (const auto& v : o["polygon"]) p.vertices.push_back(vec2(v));
        ws.add(std::move(p));
      } else if (o.contains("disc")) {
        const auto& d = o["disc"];
        if (!d.is_array() || d.size() != 3) {
          throw Error(ErrorCode::invalid_argument, "disc must be [x, y, r]");
        }
        ws.add(Disc{{d[0].get<double>(), d[1].get<double>()}, d[2].get<double>()});
      } else {
        throw Error(ErrorCode::invalid_argument, "obstacle must be a polygon or a disc");
      }
    }
    for (const auto& [id, s] : surfaces.items()) {
      ws.add_surface(id, Surface{vec2(s.at("center")), vec2(s.at("size")), s.at("height").get<double>()});
    }
    return ws;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("workspace: ") + e.what());
  }
}

double Workspace::obstacle_distance(const Vector2d& p) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& poly : polygons_) best = std::min(best, point_polygon_distance(p, poly));
  for (const auto& d : discs_) best = std::min(best, std::max(0.0, (p - d.center).norm() - d.radius));
  return best;
}

namespace {

// Signed free margin of the robot disc at p: > 0 means collision-free, and
// the disc can move that far in any direction without touching anything.
double margin(const Workspace& ws, const Vector2d& p) {
  const double r = ws.robot_radius();
  const double wall = std::min({p.x() - ws.lo().x(), p.y() - ws.lo().y(), ws.hi().x() - p.x(),
                                ws.hi().y() - p.y()}) -
                      r;
  return std::min(wall, ws.obstacle_distance(p) - r);
}

}  // namespace

bool Workspace::point_free(const Vector2d& p) const { return margin(*this, p) > 0.0; }

bool Workspace::segment_free(const Vector2d& a, const Vector2d& b, double resolution) const {
  const double len = (b - a).norm();
  double t = 0.0;
  // Steps never exceed the current margin, so the swept disc between samples
  // is covered too; in tight spots this degrades to `resolution`.
  while (true) {
    const Vector2d p = len > 0.0 ? Vector2d(a + (b - a) * (t / len)) : a;
    const double m = margin(*this, p);
    if (m <= 0.0) return false;
    if (t >= len) return true;
    t = std::min(len, t + std::max(resolution, m));
  }
}

// ---- BI2RRT* -------------------------------------------------------------------

double path_cost(const std::vector<Pose2D>& w) {
  double c = 0.0;
  for (std::size_t i = 1; i < w.size(); ++i) c += se2_distance(w[i - 1], w[i]);
  return c;
}

namespace {

struct Node {
  Pose2D q;
  int parent = -1;
  double cost = 0.0;
  std::vector<int> children;
};

// Uniform xy grid for nearest / radius queries; SE(2) distance is never
// below the planar distance, so planar cell bounds stay valid.
class Tree {
 public:
  Tree(const Workspace& ws, double cell) : lo_(ws.lo()), cell_(cell) {
    nx_ = static_cast<int>(std::ceil((ws.hi().x() - lo_.x()) / cell)) + 1;
    ny_ = static_cast<int>(std::ceil((ws.hi().y() - lo_.y()) / cell)) + 1;
    grid_.resize(static_cast<std::size_t>(nx_ * ny_));
  }

  std::vector<Node> nodes;

  int add(const Pose2D& q, int parent, double cost) {
    const int id = static_cast<int>(nodes.size());
    nodes.push_back({q, parent, cost, {}});
    if (parent >= 0) nodes[parent].children.push_back(id);
    const auto [cx, cy] = cell_of(q);
    grid_[static_cast<std::size_t>(cy * nx_ + cx)].push_back(id);
    return id;
  }

  int nearest(const Pose2D& q) const {
    const auto [cx, cy] = cell_of(q);
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    const int rings = std::max(nx_, ny_);
    for (int k = 0; k <= rings; ++k) {
      for (int y = cy - k; y <= cy + k; ++y) {
        for (int x = cx - k; x <= cx + k; ++x) {
          if (std::max(std::abs(x - cx), std::abs(y - cy)) != k) continue;
          if (x < 0 || y < 0 || x >= nx_ || y >= ny_) continue;
          for (int id : grid_[static_cast<std::size_t>(y * nx_ + x)]) {
            const double d = se2_distance(nodes[id].q, q);
            if (d < bd) bd = d, best = id;
          }
        }
      }
      if (best >= 0 && bd <= k * cell_) break;
    }
    return best;
  }

  std::vector<int> near(const Pose2D& q, double r) const {
    std::vector<int> out;
    const auto [cx, cy] = cell_of(q);
    const int k = static_cast<int>(std::ceil(r / cell_));
    for (int y = std::max(0, cy - k); y <= std::min(ny_ - 1, cy + k); ++y) {
      for (int x = std::max(0, cx - k); x <= std::min(nx_ - 1, cx + k); ++x) {
        for (int id : grid_[static_cast<std::size_t>(y * nx_ + x)]) {
          if (se2_distance(nodes[id].q, q) <= r) out.push_back(id);
        }
      }
    }
    return out;
  }

  void reparent(int id, int parent, double cost) {
    auto& old = nodes[nodes[id].parent].children;
    old.erase(std::find(old.begin(), old.end(), id));
    nodes[id].parent = parent;
    nodes[parent].children.push_back(id);
    const double delta = cost - nodes[id].cost;
    std::vector<int> stack{id};
    while (!stack.empty()) {
      const int n = stack.back();
      stack.pop_back();
      nodes[n].cost += delta;
      for (int c : nodes[n].children) stack.push_back(c);
    }
  }

  std::vector<Pose2D> branch(int id) const {
    std::vector<Pose2D> out;
    for (; id >= 0; id = nodes[id].parent) out.push_back(nodes[id].q);
    return out;
  }

 private:
  std::pair<int, int> cell_of(const Pose2D& q) const {
    const int x = std::clamp(static_cast<int>((q.x - lo_.x()) / cell_), 0, nx_ - 1);
    const int y = std::clamp(static_cast<int>((q.y - lo_.y()) / cell_), 0, ny_ - 1);
    return {x, y};
  }

  Vector2d lo_;
  double cell_;
  int nx_ = 0, ny_ = 0;
  std::vector<std::vector<int>> grid_;
};

Pose2D steer(const Pose2D& from, const Pose2D& to, double step) {
  const double d = se2_distance(from, to);
  if (d <= step) return to;
  const double f = step / d;
  return {from.x + f * (to.x - from.x), from.y + f * (to.y - from.y),
          from.theta + f * normalize_angle(to.theta - from.theta)};
}

constexpr double kImprovement = 1e-9;

}  // namespace

PathResult bi2rrt_star(const Pose2D& start, const Pose2D& goal, const Workspace& ws,
                       const RrtConfig& cfg, std::uint64_t seed) {
  if (!ws.pose_free(start)) throw Error(ErrorCode::precondition_failed, "start pose in collision");
  if (!ws.pose_free(goal)) throw Error(ErrorCode::precondition_failed, "goal pose in collision");
  if (cfg.step <= 0.0 || cfg.max_iterations == 0) {
    throw Error(ErrorCode::invalid_argument, "invalid planner configuration");
  }

  Rng rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  const double r = ws.robot_radius();
  std::uniform_real_distribution<double> ux(ws.lo().x() + r, ws.hi().x() - r);
  std::uniform_real_distribution<double> uy(ws.lo().y() + r, ws.hi().y() - r);

  std::array<Tree, 2> trees{Tree(ws, cfg.step), Tree(ws, cfg.step)};
  trees[0].add(start, -1, 0.0);
  trees[1].add(goal, -1, 0.0);

  struct Link {
    int a, b;  // node in start tree, node in goal tree
    double gap;
  };
  std::vector<Link> links;
  const auto link_cost = [&](const Link& l) {
    return trees[0].nodes[l.a].cost + l.gap + trees[1].nodes[l.b].cost;
  };
  double best = std::numeric_limits<double>::infinity();
  int best_link = -1;
  const auto refresh_best = [&] {
    for (int i = 0; i < static_cast<int>(links.size()); ++i) {
      const double c = link_cost(links[i]);
      if (c < best - kImprovement || best_link < 0) best = c, best_link = i;
    }
  };

  const Vector2d s(start.x, start.y), g(goal.x, goal.y);
  const double cmin = (g - s).norm();
  const Vector2d centre = 0.5 * (s + g);
  const double phi = std::atan2(g.y() - s.y(), g.x() - s.x());
  const auto informed_sample = [&](Pose2D& out) {
    const double a = 0.5 * best;
    const double b = 0.5 * std::sqrt(std::max(0.0, best * best - cmin * cmin));
    for (int tries = 0; tries < 64; ++tries) {
      const double rr = std::sqrt(u01(rng)), t = 2.0 * std::numbers::pi * u01(rng);
      const double ex = a * rr * std::cos(t), ey = b * rr * std::sin(t);
      const Pose2D q(centre.x() + ex * std::cos(phi) - ey * std::sin(phi),
                     centre.y() + ex * std::sin(phi) + ey * std::cos(phi), angle(rng));
      if (se2_distance(start, q) + se2_distance(q, goal) <= best) {
        out = q;
        return true;
      }
    }
    return false;
  };

  PathResult res;
  std::vector<Pose2D> first_path;
  for (std::size_t it = 1; it <= cfg.max_iterations; ++it) {
    Tree& A = trees[it % 2 == 1 ? 0 : 1];
    Tree& B = trees[it % 2 == 1 ? 1 : 0];
    const bool a_is_start = &A == &trees[0];

    Pose2D q;
    bool have = true;
    if (best_link < 0) {
      q = Pose2D(ux(rng), uy(rng), angle(rng));
    } else {
      have = informed_sample(q);
      if (have && cfg.on_informed_sample) cfg.on_informed_sample(q, best);
    }

    if (have) {
      const int n = A.nearest(q);
      const Pose2D qn = steer(A.nodes[n].q, q, cfg.step);
      if (ws.pose_free(qn) && ws.segment_free(A.nodes[n].q, qn, cfg.collision_resolution)) {
        const double size = static_cast<double>(A.nodes.size() + 1);
        const double radius =
            std::min(cfg.step, cfg.rewire_gamma * std::cbrt(std::log(size) / size));
        auto near = A.near(qn, radius);
        if (std::find(near.begin(), near.end(), n) == near.end()) near.push_back(n);

        // choose parent: cheapest collision-free candidate
        std::sort(near.begin(), near.end(), [&](int x, int y) {
          return A.nodes[x].cost + se2_distance(A.nodes[x].q, qn) <
                 A.nodes[y].cost + se2_distance(A.nodes[y].q, qn);
        });
        int parent = -1;
        for (int m : near) {
          if (m == n || ws.segment_free(A.nodes[m].q, qn, cfg.collision_resolution)) {
            parent = m;
            break;
          }
        }
        const double cnew = A.nodes[parent].cost + se2_distance(A.nodes[parent].q, qn);
        const int id = A.add(qn, parent, cnew);

        // rewire
        for (int m : near) {
          if (m == parent) continue;
          const double via = cnew + se2_distance(qn, A.nodes[m].q);
          if (via < A.nodes[m].cost - kImprovement &&
              ws.segment_free(qn, A.nodes[m].q, cfg.collision_resolution)) {
            A.reparent(m, id, via);
          }
        }

        // connect to the other tree
        auto other = B.near(qn, radius);
        const int bn = B.nearest(qn);
        if (std::find(other.begin(), other.end(), bn) == other.end()) other.push_back(bn);
        for (int m : other) {
          const double gap = se2_distance(qn, B.nodes[m].q);
          const double total = cnew + gap + B.nodes[m].cost;
          if (best_link >= 0 && total >= best - kImprovement) continue;
          if ((m == bn && gap > cfg.step) ||
              !ws.segment_free(qn, B.nodes[m].q, cfg.collision_resolution)) {
            continue;
          }
          links.push_back(a_is_start ? Link{id, m, gap} : Link{m, id, gap});
        }
        refresh_best();
        if (best_link >= 0 && res.iterations_to_first == 0) {
          res.iterations_to_first = it;
          const auto& l = links[best_link];
          first_path = trees[0].branch(l.a);
          std::reverse(first_path.begin(), first_path.end());
          for (const auto& p : trees[1].branch(l.b)) first_path.push_back(p);
        }
      }
    }
    res.iterations = it;
    if (cfg.cost_sample_every && it % cfg.cost_sample_every == 0) {
      res.cost_history.push_back(best_link >= 0 ? best : std::numeric_limits<double>::infinity());
    }
  }

  if (best_link < 0) {
    throw Error(ErrorCode::infeasible,
                "no path found within " + std::to_string(cfg.max_iterations) + " iterations");
  }
  const auto& l = links[best_link];
  res.waypoints = trees[0].branch(l.a);
  std::reverse(res.waypoints.begin(), res.waypoints.end());
  for (const auto& p : trees[1].branch(l.b)) res.waypoints.push_back(p);
  res.first_cost = path_cost(first_path);
  res.final_cost = path_cost(res.waypoints);
  if (res.final_cost > res.first_cost) {
    // only rounding drift in the tree costs can get here
    res.waypoints = first_path;
    res.final_cost = res.first_cost;
  }
  return res;
}

// ---- roadmap -------------------------------------------------------------------

double task_distance(const EffectorPose& a, const EffectorPose& b) {
  return (a.position - b.position).norm() + kAngleWeight * a.orientation.angularDistance(b.orientation);
}

std::size_t Roadmap::add_node(const EffectorPose& p) {
  nodes_.push_back(p);
  adj_.emplace_back();
  return nodes_.size() - 1;
}

void Roadmap::add_edge(std::size_t a, std::size_t b, bool valid) {
  if (a >= size() || b >= size() || a == b) throw Error(ErrorCode::invalid_argument, "bad roadmap edge");
  const double w = task_distance(nodes_[a], nodes_[b]);
  adj_[a].push_back({b, w, valid});
  adj_[b].push_back({a, w, valid});
}

std::size_t Roadmap::edge_count() const {
  std::size_t n = 0;
  for (const auto& e : adj_) n += e.size();
  return n / 2;
}

namespace {

EffectorPose random_pose(const Vector3d& lo, const Vector3d& hi, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  EffectorPose p;
  p.position = lo + (hi - lo).cwiseProduct(Vector3d(u(rng), u(rng), u(rng)));
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector4d q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  p.orientation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]);
  return p;
}

}  // namespace

Roadmap Roadmap::random(std::size_t n, std::size_t k, const Vector3d& lo, const Vector3d& hi,
                        Rng& rng,
                        const std::function<bool(const EffectorPose&, const EffectorPose&)>& valid) {
  Roadmap map;
  for (std::size_t i = 0; i < n; ++i) map.add_node(random_pose(lo, hi, rng));
  std::vector<std::pair<double, std::size_t>> d;
  std::vector<std::vector<bool>> linked;
  for (std::size_t i = 0; i < n; ++i) {
    d.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) d.emplace_back(task_distance(map.nodes_[i], map.nodes_[j]), j);
    }
    const std::size_t kk = std::min(k, d.size());
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(kk), d.end());
    for (std::size_t m = 0; m < kk; ++m) {
      const std::size_t j = d[m].second;
      if (j < i && std::any_of(map.adj_[i].begin(), map.adj_[i].end(),
                               [&](const Edge& e) { return e.to == j; })) {
        continue;
      }
      map.add_edge(i, j, valid ? valid(map.nodes_[i], map.nodes_[j]) : true);
    }
  }
  return map;
}

std::optional<GraphPath> astar(const Roadmap& map, std::size_t from, std::size_t to) {
  if (from >= map.size() || to >= map.size()) throw Error(ErrorCode::invalid_argument, "bad node");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> g(map.size(), inf);
  std::vector<std::size_t> parent(map.size(), map.size());
  // shrink the heuristic a hair so rounding can never make it inadmissible
  const auto h = [&](std::size_t i) {
    return task_distance(map.node(i), map.node(to)) * (1.0 - 1e-12);
  };
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  g[from] = 0.0;
  open.push({h(from), from});
  while (!open.empty()) {
    const auto [f, u] = open.top();
    open.pop();
    if (f >= g[to]) break;
    if (f > g[u] + h(u)) continue;  // stale entry
    for (const auto& e : map.edges(u)) {
      if (!e.valid) continue;
      const double ng = g[u] + e.weight;
      if (ng < g[e.to]) {
        g[e.to] = ng;
        parent[e.to] = u;
        open.push({ng + h(e.to), e.to});
      }
    }
  }
  if (g[to] == inf) return std::nullopt;
  GraphPath p;
  p.cost = g[to];
  for (std::size_t v = to; v != map.size(); v = parent[v]) {
    p.nodes.push_back(v);
    if (v == from) break;
  }
  std::reverse(p.nodes.begin(), p.nodes.end());
  return p;
}

PosePath prm_query(const Roadmap& map, const EffectorPose& start, const EffectorPose& goal,
                   const PrmQueryConfig& cfg) {
  if (task_distance(start, goal) == 0.0) return {{start}, 0.0};
  Roadmap m = map;
  const std::size_t s = m.add_node(start), t = m.add_node(goal);
  const auto ok = [&](const EffectorPose& a, const EffectorPose& b) {
    return !cfg.segment_valid || cfg.segment_valid(a, b);
  };
  for (std::size_t end : {s, t}) {
    std::size_t attached = 0;
    for (std::size_t i = 0; i < map.size(); ++i) {
      if (task_distance(m.node(end), m.node(i)) <= cfg.connect_radius && ok(m.node(end), m.node(i))) {
        m.add_edge(end, i);
        ++attached;
      }
    }
    if (attached == 0) {
      throw Error(ErrorCode::precondition_failed,
                  std::string(end == s ? "start" : "goal") + " pose cannot reach the roadmap");
    }
  }
  if (task_distance(start, goal) <= cfg.connect_radius && ok(start, goal)) m.add_edge(s, t);
  const auto path = astar(m, s, t);
  if (!path) throw Error(ErrorCode::infeasible, "start and goal are in different roadmap components");
  PosePath out;
  out.cost = path->cost;
  for (auto v : path->nodes) out.poses.push_back(m.node(v));
  return out;
}

// ---- grasp / drop poses ---------------------------------------------------------

bool EffectorWorld::pose_free(const EffectorPose& p) const {
  const auto& x = p.position;
  for (const auto& b : obstacles) {
    if ((x.array() >= b.lo.array()).all() && (x.array() <= b.hi.array()).all()) return false;
  }
  if (base && (x - *base).norm() > reach) return false;
  return true;
}

Eigen::Quaterniond approach_orientation(const Vector3d& dir) {
  return Eigen::Quaterniond::FromTwoVectors(Vector3d::UnitX(), dir.normalized());
}

std::vector<EffectorPose> sample_grasp_poses(const Vector3d& object, double standoff, std::size_t n,
                                             Rng& rng, const EffectorWorld& world) {
  if (n == 0) throw Error(ErrorCode::invalid_argument, "need at least one grasp sample");
  if (standoff <= 0.0) throw Error(ErrorCode::invalid_argument, "standoff must be positive");
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<EffectorPose> out;
  for (std::size_t i = 0; i < n; ++i) {
    Vector3d dir(nd(rng), nd(rng), nd(rng));
    if (dir.norm() < 1e-12) continue;
    dir.normalize();
    EffectorPose p{object + standoff * dir, approach_orientation(-dir)};
    if (world.pose_free(p)) out.push_back(p);
  }
  if (out.empty()) throw Error(ErrorCode::infeasible, "no valid grasp pose around the object");
  return out;
}

DropSampling sample_drop_poses(const std::vector<Vector3d>& points, double clearance, Rng& rng,
                               const PlaneFitConfig& cfg) {
  if (points.empty()) throw Error(ErrorCode::invalid_argument, "empty point set");
  const double max_tilt = cfg.max_tilt_deg * std::numbers::pi / 180.0;
  const auto tilt = [](const Vector3d& nrm) { return std::acos(std::min(1.0, std::abs(nrm.z()))); };

  DropSampling out;
  std::vector<Vector3d> rest = points;
  while (rest.size() >= std::max<std::size_t>(3, cfg.min_inliers)) {
    std::uniform_int_distribution<std::size_t> pick(0, rest.size() - 1);
    std::vector<std::size_t> best_in;
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
      const Vector3d& a = rest[pick(rng)];
      const Vector3d& b = rest[pick(rng)];
      const Vector3d& c = rest[pick(rng)];
      Vector3d nrm = (b - a).cross(c - a);
      if (nrm.norm() < 1e-12) continue;
      nrm.normalize();
      if (tilt(nrm) > max_tilt) continue;
      std::vector<std::size_t> in;
      for (std::size_t i = 0; i < rest.size(); ++i) {
        if (std::abs(nrm.dot(rest[i] - a)) <= cfg.inlier_threshold) in.push_back(i);
      }
      if (in.size() > best_in.size()) best_in = std::move(in);
    }
    if (best_in.size() < cfg.min_inliers) break;

    // least squares z = ax + by + c over the consensus set
    Eigen::MatrixXd A(best_in.size(), 3);
    Eigen::VectorXd z(best_in.size());
    Vector3d centroid = Vector3d::Zero();
    for (std::size_t i = 0; i < best_in.size(); ++i) {
      const auto& p = rest[best_in[i]];
      A.row(static_cast<Eigen::Index>(i)) << p.x(), p.y(), 1.0;
      z[static_cast<Eigen::Index>(i)] = p.z();
      centroid += p;
    }
    centroid /= static_cast<double>(best_in.size());
    const Vector3d coef = A.colPivHouseholderQr().solve(z);
    HorizontalPlane plane;
    plane.normal = Vector3d(-coef[0], -coef[1], 1.0).normalized();
    plane.centroid = centroid;
    plane.height = centroid.z();
    plane.inliers = best_in.size();
    if (tilt(plane.normal) > max_tilt) break;

    const std::size_t idx = out.planes.size();
    std::uniform_int_distribution<std::size_t> which(0, best_in.size() - 1);
    for (std::size_t k = 0; k < cfg.poses_per_plane; ++k) {
      const auto& p = rest[best_in[which(rng)]];
      out.poses.push_back({{Vector3d(p.x(), p.y(), plane.height + clearance),
                            approach_orientation(-Vector3d::UnitZ())},
                           idx});
    }
    out.planes.push_back(plane);

    std::vector<bool> drop(rest.size(), false);
    for (auto i : best_in) drop[i] = true;
    std::vector<Vector3d> next;
    for (std::size_t i = 0; i < rest.size(); ++i) {
      if (!drop[i]) next.push_back(rest[i]);
    }
    rest.swap(next);
  }
  if (out.planes.empty()) throw Error(ErrorCode::infeasible, "no horizontal plane in the point set");
  return out;
}

std::vector<Vector3d> surface_point_cloud(const Workspace& ws, double spacing, double noise, Rng& rng) {
  if (spacing <= 0.0) throw Error(ErrorCode::invalid_argument, "spacing must be positive");
  std::normal_distribution<double> nd(0.0, noise > 0.0 ? noise : 1.0);
  std::vector<Vector3d> pts;
  for (const auto& [id, s] : ws.surfaces()) {
    const Vector2d lo = s.center - 0.5 * s.size;
    for (double x = lo.x(); x <= lo.x() + s.size.x() + 1e-9; x += spacing) {
      for (double y = lo.y(); y <= lo.y() + s.size.y() + 1e-9; y += spacing) {
        pts.emplace_back(x, y, s.height + (noise > 0.0 ? nd(rng) : 0.0));
      }
    }
  }
  return pts;
}

}  // namespace bciassist
