#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace pushrl {

using Vec2 = Eigen::Vector2d;

inline constexpr double kPi = 3.14159265358979323846;

// Maps any angle into (-pi, pi]; -pi lands on +pi.
inline double normalize_angle(double a) {
  if (a > -kPi && a <= kPi) return a;
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0) a += 2.0 * kPi;
  return a - kPi;
}

struct SE2Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // always (-pi, pi]

  Vec2 translation() const { return {x, y}; }
};

inline SE2Pose make_pose(double x, double y, double theta) {
  return {x, y, normalize_angle(theta)};
}

inline SE2Pose se2_compose(const SE2Pose& a, const SE2Pose& b) {
  const double c = std::cos(a.theta), s = std::sin(a.theta);
  SE2Pose out;
  out.x = a.x + c * b.x - s * b.y;
  out.y = a.y + s * b.x + c * b.y;
  out.theta = normalize_angle(a.theta + b.theta);
  return out;
}

inline SE2Pose se2_inverse(const SE2Pose& a) {
  const double c = std::cos(a.theta), s = std::sin(a.theta);
  SE2Pose out;
  out.x = -(c * a.x + s * a.y);
  out.y = -(-s * a.x + c * a.y);
  out.theta = normalize_angle(-a.theta);
  return out;
}

// Local point -> world.
inline Vec2 se2_apply(const SE2Pose& p, const Vec2& v) {
  const double c = std::cos(p.theta), s = std::sin(p.theta);
  return {p.x + c * v.x() - s * v.y(), p.y + s * v.x() + c * v.y()};
}

// World point -> local.
inline Vec2 se2_apply_inverse(const SE2Pose& p, const Vec2& v) {
  const double c = std::cos(p.theta), s = std::sin(p.theta);
  const double dx = v.x() - p.x, dy = v.y() - p.y;
  return {c * dx + s * dy, -s * dx + c * dy};
}

// Shortest-arc angular distance, in [0, pi].
inline double angle_distance(double a, double b) {
  return std::abs(normalize_angle(a - b));
}

struct Twist2 {
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;

  bool finite() const {
    return std::isfinite(vx) && std::isfinite(vy) && std::isfinite(omega);
  }
};

// Integrates a world-frame twist for time h.
inline SE2Pose integrate_twist(const SE2Pose& p, const Twist2& v, double h) {
  return make_pose(p.x + v.vx * h, p.y + v.vy * h, p.theta + v.omega * h);
}

// Velocity of the world point `at` for a body whose origin moves with `v`
// about `origin`.
inline Vec2 point_velocity(const Twist2& v, const Vec2& origin, const Vec2& at) {
  const Vec2 r = at - origin;
  return {v.vx - v.omega * r.y(), v.vy + v.omega * r.x()};
}

inline double cross2(const Vec2& a, const Vec2& b) {
  return a.x() * b.y() - a.y() * b.x();
}

enum class EntityClass { robot, movable, obstacle, table_bound };

struct ConvexShape {
  enum class Kind { box, disc };

  Kind kind = Kind::box;
  // box: half extents; disc: a = radius, b unused.
  double a = 0.0;
  double b = 0.0;
  EntityClass entity_class = EntityClass::movable;

  static ConvexShape box(double half_w, double half_h, EntityClass cls) {
    if (half_w <= 0.0 || half_h <= 0.0)
      throw std::invalid_argument("box extents must be positive");
    return {Kind::box, half_w, half_h, cls};
  }
  static ConvexShape disc(double radius, EntityClass cls) {
    if (radius <= 0.0) throw std::invalid_argument("disc radius must be positive");
    return {Kind::disc, radius, 0.0, cls};
  }

  double bounding_radius() const {
    return kind == Kind::disc ? a : std::hypot(a, b);
  }
};

struct ContactPoint {
  Vec2 position = Vec2::Zero();
  Vec2 normal = Vec2::UnitX();  // unit, from entity a toward entity b
  double penetration = 0.0;     // >= 0
};

struct ContactManifold {
  std::vector<ContactPoint> points;
  std::pair<int, int> pair{0, 0};

  Vec2 centroid() const {
    Vec2 c = Vec2::Zero();
    for (const auto& p : points) c += p.position;
    return c / double(points.size());
  }
  double max_penetration() const {
    double m = 0.0;
    for (const auto& p : points) m = std::max(m, p.penetration);
    return m;
  }
};

namespace detail {

struct ObbFrame {
  Vec2 center;
  Vec2 ax;  // unit axis for half extent a
  Vec2 ay;  // unit axis for half extent b
  double ha, hb;
};

inline ObbFrame obb_frame(const ConvexShape& s, const SE2Pose& p) {
  const double c = std::cos(p.theta), sn = std::sin(p.theta);
  return {Vec2(p.x, p.y), Vec2(c, sn), Vec2(-sn, c), s.a, s.b};
}

inline std::array<Vec2, 4> obb_corners(const ObbFrame& f) {
  return {f.center + f.ax * f.ha + f.ay * f.hb, f.center - f.ax * f.ha + f.ay * f.hb,
          f.center - f.ax * f.ha - f.ay * f.hb, f.center + f.ax * f.ha - f.ay * f.hb};
}

inline double project_radius(const ObbFrame& f, const Vec2& axis) {
  return f.ha * std::abs(axis.dot(f.ax)) + f.hb * std::abs(axis.dot(f.ay));
}

// Box-box SAT. Negative return means separated by `axis`.
inline std::optional<ContactManifold> box_box(const ObbFrame& A, const ObbFrame& B) {
  const std::array<Vec2, 4> axes = {A.ax, A.ay, B.ax, B.ay};
  double best_pen = std::numeric_limits<double>::infinity();
  Vec2 best_axis = Vec2::UnitX();
  const Vec2 d = B.center - A.center;
  for (const Vec2& ax : axes) {
    const double overlap = project_radius(A, ax) + project_radius(B, ax) - std::abs(d.dot(ax));
    if (overlap < 0.0) return std::nullopt;
    if (overlap < best_pen) {
      best_pen = overlap;
      best_axis = ax;
    }
  }
  Vec2 n = best_axis;
  if (n.dot(d) < 0.0) n = -n;  // outward from A toward B

  // Reference face on A along n, incident face on B against n; clip the
  // incident edge by the reference side planes (Box2D-style two-point
  // manifold for face contacts).
  const Vec2 ref_n = n;
  const double ref_face = ref_n.dot(A.center) + project_radius(A, ref_n);

  // Incident face: the B face whose outward normal is most anti-parallel to n.
  const std::array<Vec2, 4> b_normals = {B.ax, -B.ax, B.ay, -B.ay};
  int inc = 0;
  double inc_dot = b_normals[0].dot(n);
  for (int i = 1; i < 4; ++i) {
    const double dd = b_normals[i].dot(n);
    if (dd < inc_dot) {
      inc_dot = dd;
      inc = i;
    }
  }
  const Vec2 inc_n = b_normals[inc];
  const Vec2 inc_t(-inc_n.y(), inc_n.x());
  const double inc_half = (inc < 2) ? B.hb : B.ha;
  const double inc_ext = (inc < 2) ? B.ha : B.hb;
  Vec2 p0 = B.center + inc_n * inc_ext + inc_t * inc_half;
  Vec2 p1 = B.center + inc_n * inc_ext - inc_t * inc_half;

  // Clip the incident segment against the two side planes of the reference face.
  const Vec2 side = Vec2(-ref_n.y(), ref_n.x());
  const double side_c = side.dot(A.center);
  const double side_h = project_radius(A, side);
  auto clip = [](Vec2& a, Vec2& b, const Vec2& axis, double limit) {
    const double da = axis.dot(a) - limit;
    const double db = axis.dot(b) - limit;
    if (da > 0.0 && db > 0.0) return false;
    if (da > 0.0) a = a + (b - a) * (da / (da - db));
    if (db > 0.0) b = b + (a - b) * (db / (db - da));
    return true;
  };
  bool ok = clip(p0, p1, side, side_c + side_h) && clip(p0, p1, -side, -(side_c - side_h));

  ContactManifold m;
  if (ok) {
    for (const Vec2& p : {p0, p1}) {
      const double sep = ref_n.dot(p) - ref_face;
      if (sep <= 1e-12) {
        ContactPoint cp;
        cp.position = p;
        cp.normal = n;
        cp.penetration = std::max(0.0, -sep);
        m.points.push_back(cp);
      }
    }
  }
  if (m.points.empty()) {
    // Degenerate clip (corner cases): fall back to B's deepest corner.
    double deepest = std::numeric_limits<double>::infinity();
    Vec2 at = B.center;
    for (const Vec2& p : obb_corners(B)) {
      const double sep = ref_n.dot(p) - ref_face;
      if (sep < deepest) {
        deepest = sep;
        at = p;
      }
    }
    ContactPoint cp;
    cp.position = at;
    cp.normal = n;
    cp.penetration = std::max(0.0, best_pen);
    m.points.push_back(cp);
  }
  return m;
}

inline std::optional<ContactManifold> box_disc(const ObbFrame& A, const Vec2& c, double r,
                                               bool flip) {
  // Closest point on the box to the disc center, in box coordinates.
  const Vec2 d = c - A.center;
  const double lx = d.dot(A.ax), ly = d.dot(A.ay);
  const double qx = std::clamp(lx, -A.ha, A.ha);
  const double qy = std::clamp(ly, -A.hb, A.hb);
  Vec2 n_world;
  double pen;
  Vec2 at;
  if (std::abs(lx - qx) < 1e-15 && std::abs(ly - qy) < 1e-15) {
    // Center inside the box: push along the axis of least depth.
    const double dx = A.ha - std::abs(lx);
    const double dy = A.hb - std::abs(ly);
    if (dx < dy) {
      n_world = (lx >= 0.0 ? 1.0 : -1.0) * A.ax;
      pen = dx + r;
    } else {
      n_world = (ly >= 0.0 ? 1.0 : -1.0) * A.ay;
      pen = dy + r;
    }
    at = c;
  } else {
    const Vec2 closest = A.center + A.ax * qx + A.ay * qy;
    const Vec2 delta = c - closest;
    const double dist = delta.norm();
    if (dist > r) return std::nullopt;
    n_world = delta / dist;
    pen = r - dist;
    at = closest;
  }
  ContactPoint cp;
  cp.position = at;
  cp.normal = flip ? Vec2(-n_world) : n_world;
  cp.penetration = pen;
  ContactManifold m;
  m.points.push_back(cp);
  return m;
}

inline std::optional<ContactManifold> disc_disc(const Vec2& ca, double ra, const Vec2& cb,
                                                double rb) {
  const Vec2 d = cb - ca;
  const double dist = d.norm();
  if (dist > ra + rb) return std::nullopt;
  ContactPoint cp;
  cp.normal = dist > 1e-12 ? Vec2(d / dist) : Vec2::UnitX();
  cp.penetration = ra + rb - dist;
  cp.position = ca + cp.normal * (ra - 0.5 * cp.penetration);
  ContactManifold m;
  m.points.push_back(cp);
  return m;
}

}  // namespace detail

// Returns nullopt when strictly separated; touching counts as contact.
// Normals point from a toward b.
inline std::optional<ContactManifold> contact_query(const ConvexShape& sa, const SE2Pose& pa,
                                                    const ConvexShape& sb, const SE2Pose& pb,
                                                    int id_a = 0, int id_b = 1) {
  std::optional<ContactManifold> m;
  const bool a_box = sa.kind == ConvexShape::Kind::box;
  const bool b_box = sb.kind == ConvexShape::Kind::box;
  if (a_box && b_box) {
    m = detail::box_box(detail::obb_frame(sa, pa), detail::obb_frame(sb, pb));
  } else if (a_box && !b_box) {
    m = detail::box_disc(detail::obb_frame(sa, pa), Vec2(pb.x, pb.y), sb.a, false);
  } else if (!a_box && b_box) {
    m = detail::box_disc(detail::obb_frame(sb, pb), Vec2(pa.x, pa.y), sa.a, true);
  } else {
    m = detail::disc_disc(Vec2(pa.x, pa.y), sa.a, Vec2(pb.x, pb.y), sb.a);
  }
  if (m) m->pair = {id_a, id_b};
  return m;
}

inline bool point_in_shape(const ConvexShape& s, const SE2Pose& p, const Vec2& world) {
  if (s.kind == ConvexShape::Kind::disc)
    return (world - Vec2(p.x, p.y)).squaredNorm() <= s.a * s.a;
  const Vec2 local = se2_apply_inverse(p, world);
  return std::abs(local.x()) <= s.a && std::abs(local.y()) <= s.b;
}

// Weighted pseudometric over tuples of SE(2) poses. The angular term is
// scaled by a characteristic length so rotation and translation are
// commensurable; default is the 8 cm cube's half width.
inline constexpr double kAngleLength = 0.04;

inline double cstate_distance(std::span<const SE2Pose> q1, std::span<const SE2Pose> q2,
                              std::span<const double> weights,
                              double angle_length = kAngleLength) {
  if (q1.size() != q2.size() || q1.size() != weights.size())
    throw std::invalid_argument("cstate_distance: length mismatch");
  double d = 0.0;
  for (size_t i = 0; i < q1.size(); ++i) {
    const double dp = std::hypot(q1[i].x - q2[i].x, q1[i].y - q2[i].y);
    const double da = angle_distance(q1[i].theta, q2[i].theta);
    d += weights[i] * (dp + angle_length * da);
  }
  return d;
}

}  // namespace pushrl
