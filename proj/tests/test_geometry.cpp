#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "sarw/geometry.hpp"
#include "sarw/mesh.hpp"
#include "sarw/mesh_io.hpp"
#include "support/oracles.hpp"

using namespace sarw;

namespace {

TransformGraph chain(const Transform& r_T_h, const Transform& h_T_i, const Transform& w_T_r) {
  TransformGraph g;
  g.set(FrameId::world(), FrameId::robot(), w_T_r);
  g.set(FrameId::robot(), FrameId::human_head(), r_T_h);
  g.set(FrameId::human_head(), FrameId::hologram(3), h_T_i);
  return g;
}

}  // namespace

TEST(Transform, IdentityComposesToIdentity) {
  EXPECT_TRUE(approx_equal(compose(Transform::identity(), Transform::identity()), Transform::identity(), 0.0));
}

TEST(Transform, TranslationsAdd) {
  const Transform t = compose(Transform::from_translation({1, 0, 0}), Transform::from_translation({0, 2, 0}));
  EXPECT_EQ(t.translation, Vec3(1, 2, 0));
}

TEST(Transform, InverseOfTranslationFlipsSign) {
  EXPECT_EQ(invert(Transform::from_translation({1, 2, 3})).translation, Vec3(-1, -2, -3));
  EXPECT_TRUE(approx_equal(invert(Transform::identity()), Transform::identity(), 0.0));
}

TEST(Transform, ComposeMatchesMatrixProduct) {
  std::mt19937_64 gen(11);
  for (int i = 0; i < 1000; ++i) {
    const Transform a = oracle::random_transform(gen);
    const Transform b = oracle::random_transform(gen);
    const oracle::Mat4 expect = oracle::homogeneous(a) * oracle::homogeneous(b);
    ASSERT_LE(oracle::max_abs_diff(oracle::homogeneous(compose(a, b)), expect), 1e-9);
  }
}

TEST(Transform, InvertMatchesMatrixInverse) {
  std::mt19937_64 gen(12);
  for (int i = 0; i < 1000; ++i) {
    const Transform a = oracle::random_transform(gen);
    const oracle::Mat4 expect = oracle::homogeneous(a).inverse();
    ASSERT_LE(oracle::max_abs_diff(oracle::homogeneous(invert(a)), expect), 1e-9);
    ASSERT_TRUE(approx_equal(compose(a, invert(a)), Transform::identity(), 1e-9));
  }
}

TEST(Transform, ComposeIsAssociative) {
  std::mt19937_64 gen(13);
  for (int i = 0; i < 500; ++i) {
    const Transform a = oracle::random_transform(gen), b = oracle::random_transform(gen),
                    c = oracle::random_transform(gen);
    ASSERT_TRUE(approx_equal(compose(a, compose(b, c)), compose(compose(a, b), c), 1e-9));
  }
}

TEST(Transform, QuaternionStaysUnit) {
  std::mt19937_64 gen(14);
  Transform acc;
  for (int i = 0; i < 10000; ++i) acc = compose(acc, oracle::random_transform(gen, 0.01));
  EXPECT_NEAR(acc.rotation.norm(), 1.0, 1e-9);
}

TEST(Transform, ApplyThenInverseRoundTrips) {
  std::mt19937_64 gen(15);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 1000; ++i) {
    const Transform t = oracle::random_transform(gen);
    const Vec3 p(u(gen), u(gen), u(gen));
    ASSERT_LE((invert(t).apply(t.apply(p)) - p).norm(), 1e-9);
  }
}

TEST(Transform, YawPitchConvention) {
  const Transform t = Transform::from_yaw_pitch(std::numbers::pi / 2, 0.0, Vec3::Zero());
  EXPECT_LE((t.apply_vector(Vec3::UnitX()) - Vec3::UnitY()).norm(), 1e-12);
  const Transform up = Transform::from_yaw_pitch(0.0, deg2rad(30), Vec3::Zero());
  EXPECT_GT(up.apply_vector(Vec3::UnitX()).z(), 0.49);
}

TEST(TransformGraph, SingleEdge) {
  std::mt19937_64 gen(21);
  TransformGraph g;
  const Transform r_T_h = oracle::random_transform(gen);
  g.set(FrameId::world(), FrameId::robot(), Transform::identity());
  g.set(FrameId::robot(), FrameId::human_head(), r_T_h);
  EXPECT_TRUE(approx_equal(g.resolve(FrameId::robot(), FrameId::human_head()), r_T_h, 1e-12));
}

TEST(TransformGraph, ChainMatchesMatrixOracle) {
  std::mt19937_64 gen(22);
  for (int i = 0; i < 1000; ++i) {
    const Transform r_T_h = oracle::random_transform(gen), h_T_i = oracle::random_transform(gen);
    const TransformGraph g = chain(r_T_h, h_T_i, oracle::random_transform(gen));
    const oracle::Mat4 expect = oracle::homogeneous(r_T_h) * oracle::homogeneous(h_T_i);
    const Transform r_T_i = g.resolve(FrameId::robot(), FrameId::hologram(3));
    ASSERT_LE(oracle::max_abs_diff(oracle::homogeneous(r_T_i), expect), 1e-9);
    const Transform i_T_r = g.resolve(FrameId::hologram(3), FrameId::robot());
    ASSERT_LE(oracle::max_abs_diff(oracle::homogeneous(i_T_r), expect.inverse()), 1e-9);
    ASSERT_TRUE(approx_equal(compose(r_T_i, i_T_r), Transform::identity(), 1e-9));
  }
}

TEST(TransformGraph, SiblingFramesResolveThroughWorld) {
  std::mt19937_64 gen(23);
  for (int i = 0; i < 200; ++i) {
    TransformGraph g;
    const Transform w_T_r = oracle::random_transform(gen), w_T_h = oracle::random_transform(gen);
    g.set(FrameId::world(), FrameId::robot(), w_T_r);
    g.set(FrameId::world(), FrameId::human_head(), w_T_h);
    const oracle::Mat4 expect = oracle::homogeneous(w_T_r).inverse() * oracle::homogeneous(w_T_h);
    ASSERT_LE(oracle::max_abs_diff(oracle::homogeneous(g.resolve(FrameId::robot(), FrameId::human_head())), expect),
              1e-9);
  }
}

TEST(TransformGraph, UnknownFrame) {
  TransformGraph g;
  try {
    g.resolve(FrameId::world(), FrameId::hologram(9));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownFrame);
  }
  EXPECT_THROW(g.set(FrameId::robot(), FrameId::human_head(), {}), Error);
}

TEST(TransformGraph, RedundantConsistentEdgeChangesNothing) {
  std::mt19937_64 gen(24);
  const TransformGraph g = chain(oracle::random_transform(gen), oracle::random_transform(gen),
                                 oracle::random_transform(gen));
  TransformGraph g2 = g;
  const Transform w_T_i = g.resolve(FrameId::world(), FrameId::hologram(3));
  g2.set(FrameId::world(), FrameId::hologram(3), w_T_i);
  EXPECT_TRUE(g2 == g);
  EXPECT_TRUE(approx_equal(g2.resolve(FrameId::robot(), FrameId::hologram(3)),
                           g.resolve(FrameId::robot(), FrameId::hologram(3)), 0.0));
}

TEST(TransformGraph, InconsistentEdgeAndCycleRejected) {
  std::mt19937_64 gen(25);
  TransformGraph g = chain(oracle::random_transform(gen), oracle::random_transform(gen), oracle::random_transform(gen));
  try {
    g.set(FrameId::world(), FrameId::hologram(3), Transform::from_translation({100, 0, 0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InconsistentEdge);
  }
  EXPECT_THROW(g.set(FrameId::hologram(3), FrameId::world(), {}), Error);
}

TEST(Projection, OpticalAxisAndBehind) {
  CameraIntrinsics k;
  auto p = project_point(k, Vec3(0, 0, 2));
  ASSERT_TRUE(p);
  EXPECT_EQ(p->u, k.cx);
  EXPECT_EQ(p->v, k.cy);
  EXPECT_FALSE(project_point(k, Vec3(0, 0, -1)));
  EXPECT_FALSE(project_point(k, Vec3(0, 0, 0)));
}

TEST(Projection, HandEvaluatedExample) {
  CameraIntrinsics k{500, 500, 320, 240, 640, 480};
  auto p = project_point(k, Vec3(0.5, 0.2, 2));
  ASSERT_TRUE(p);
  EXPECT_DOUBLE_EQ(p->u, 445.0);
  EXPECT_DOUBLE_EQ(p->v, 290.0);
}

TEST(Projection, MatchesIntrinsicMatrixOracle) {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> z(0.1, 20), n(-1, 1);
  CameraIntrinsics k{612.5, 598.25, 321.0, 243.5, 640, 480};
  int hits = 0;
  for (int i = 0; i < 10000; ++i) {
    const Vec3 p(n(gen) * z(gen), n(gen) * z(gen), z(gen));
    const auto [u, v] = oracle::pinhole(k.fx, k.fy, k.cx, k.cy, p);
    const bool inside = u >= 0 && u < k.width && v >= 0 && v < k.height;
    const auto got = project_point(k, p);
    ASSERT_EQ(got.has_value(), inside);
    if (got) {
      ++hits;
      ASSERT_NEAR(got->u, u, 1e-6);
      ASSERT_NEAR(got->v, v, 1e-6);
    }
    ASSERT_FALSE(project_point(k, Vec3(p.x(), p.y(), -p.z())));
  }
  EXPECT_GT(hits, 1000);
}

TEST(Sampling, UnitSquarePointsLieOnTriangles) {
  const TriangleMesh sq = make_square(1.0);
  const PointCloud pc = sample_mesh(sq, 100, 7);
  ASSERT_EQ(pc.size(), 100u);
  for (const auto& p : pc.points) {
    EXPECT_LT(std::abs(p.position.z()), 1e-9);
    const bool on = oracle::on_triangle(p.position, sq.vertices[0], sq.vertices[1], sq.vertices[2], 1e-9) ||
                    oracle::on_triangle(p.position, sq.vertices[0], sq.vertices[2], sq.vertices[3], 1e-9);
    EXPECT_TRUE(on);
  }
}

TEST(Sampling, PointsLieOnTrianglesOfRandomMesh) {
  std::mt19937_64 gen(32);
  const TriangleMesh m = make_icosahedron(0.7).transformed(oracle::random_transform(gen));
  for (const auto& p : sample_mesh(m, 2000, 3).points) {
    bool on = false;
    for (const auto& t : m.triangles) {
      on = on || oracle::on_triangle(p.position, m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]], 1e-9);
    }
    ASSERT_TRUE(on);
  }
}

TEST(Sampling, CountIsRoundedAreaTimesDensity) {
  const TriangleMesh box = make_box({0.3, 0.7, 1.1});
  for (double d : {1.0, 10.0, 33.3, 250.0}) {
    const double expect = box.surface_area() * d;
    EXPECT_LE(std::abs(static_cast<double>(sample_mesh(box, d, 1).size()) - expect), 1.0);
  }
}

TEST(Sampling, DegenerateAndDeterministic) {
  TriangleMesh flat;
  flat.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
  flat.triangles = {{0, 1, 2}};
  EXPECT_TRUE(sample_mesh(flat, 100, 1).empty());
  const auto a = sample_mesh(make_box({1, 1, 1}), 50, 9);
  const auto b = sample_mesh(make_box({1, 1, 1}), 50, 9);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.points[i].position, b.points[i].position);
}

TEST(Sampling, AreaFractionsOnUnitSquare) {
  TriangleMesh m;
  // Unit square as a fan of three triangles with areas 0.15, 0.35, 0.5.
  m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 0.3, 0), Vec3(1, 1, 0), Vec3(0, 1, 0)};
  m.triangles = {{0, 1, 2}, {0, 2, 3}, {0, 3, 4}};
  const PointCloud pc = sample_mesh(m, 20000, 5);
  std::array<int, 3> counts{};
  for (const auto& p : pc.points) {
    for (int t = 0; t < 3; ++t) {
      const auto& tri = m.triangles[t];
      if (oracle::on_triangle(p.position, m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]], 1e-12)) {
        ++counts[t];
        break;
      }
    }
  }
  const std::array<double, 3> area = {0.15, 0.35, 0.5};
  for (int t = 0; t < 3; ++t) {
    EXPECT_NEAR(static_cast<double>(counts[t]) / pc.size(), area[t], 0.05 * area[t]);
  }
}

TEST(Sampling, ColorsAreInterpolated) {
  TriangleMesh m = make_square(1.0);
  m.colors = {Rgb{0, 0, 0}, Rgb{255, 0, 0}, Rgb{255, 0, 0}, Rgb{0, 0, 0}};
  for (const auto& p : sample_mesh(m, 500, 2).points) {
    EXPECT_NEAR(p.color.r, 255.0 * p.position.x(), 1.0);
    EXPECT_EQ(p.color.g, 0);
  }
}

TEST(Sphere, UnitCube) {
  const Sphere s = circumscribed_sphere(make_box({1, 1, 1}));
  EXPECT_LE(s.center.norm(), 1e-15);
  EXPECT_NEAR(s.radius, std::sqrt(3.0) / 2, 1e-12);
}

TEST(Sphere, SingleVertexAndEmpty) {
  TriangleMesh m;
  m.vertices = {Vec3(1, 2, 3)};
  const Sphere s = circumscribed_sphere(m);
  EXPECT_EQ(s.center, Vec3(1, 2, 3));
  EXPECT_EQ(s.radius, 0.0);
  EXPECT_THROW(circumscribed_sphere(TriangleMesh{}), Error);
}

TEST(Sphere, ContainsEveryVertex) {
  std::mt19937_64 gen(41);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 200; ++i) {
    TriangleMesh m;
    const int n = 1 + static_cast<int>(gen() % 40);
    for (int k = 0; k < n; ++k) m.vertices.emplace_back(u(gen), u(gen), u(gen));
    const Sphere s = circumscribed_sphere(m);
    for (const auto& v : m.vertices) ASSERT_LE((v - s.center).norm(), s.radius + 1e-9);
  }
}

TEST(RayTriangle, HitsAndMisses) {
  const Vec3 a(0, 0, 0), b(1, 0, 0), c(0, 1, 0);
  auto t = intersect_ray_triangle(Vec3(0.2, 0.2, 1), Vec3(0, 0, -1), a, b, c);
  ASSERT_TRUE(t);
  EXPECT_NEAR(*t, 1.0, 1e-12);
  EXPECT_FALSE(intersect_ray_triangle(Vec3(0.8, 0.8, 1), Vec3(0, 0, -1), a, b, c));
  EXPECT_FALSE(intersect_ray_triangle(Vec3(0.2, 0.2, 1), Vec3(1, 0, 0), a, b, c));
}

TEST(RayTriangle, SegmentAgreesWithSlabOracleForBoxes) {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> u(-2, 2);
  const TriangleMesh box = make_box({1, 1, 1});
  const Aabb bb = bounding_box(box);
  const oracle::Box ob{bb.min, bb.max};
  int hits = 0;
  for (int i = 0; i < 5000; ++i) {
    const Vec3 from(u(gen), u(gen), u(gen)), to(u(gen), u(gen), u(gen));
    if (bb.contains(from) || bb.contains(to)) continue;
    const bool expect = oracle::segment_hits_box(from, to, ob);
    ASSERT_EQ(segment_hits_mesh(from, to, box, bb), expect);
    hits += expect;
  }
  EXPECT_GT(hits, 100);
}

TEST(MeshIo, ParsesObjWithColors) {
  std::istringstream in(
      "# tri\n"
      "v 0 0 0 1 0 0\n"
      "v 1 0 0 0 1 0\n"
      "v 0 1 0 0 0 1\n"
      "v 1 1 0 1 1 1\n"
      "f 1 2 3\n"
      "f 2/5/1 4 3\n");
  const TriangleMesh m = parse_obj(in);
  ASSERT_EQ(m.vertices.size(), 4u);
  ASSERT_EQ(m.triangles.size(), 2u);
  EXPECT_EQ(m.triangles[1][1], 3);
  ASSERT_EQ(m.colors.size(), 4u);
  EXPECT_EQ(m.colors[0], (Rgb{255, 0, 0}));
}

TEST(MeshIo, RejectsBadIndices) {
  std::istringstream in("v 0 0 0\nv 1 0 0\nf 1 2 7\n");
  EXPECT_THROW(parse_obj(in), Error);
  std::istringstream nan("v nan 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  EXPECT_THROW(parse_obj(nan), Error);
}

TEST(MeshIo, ObjRoundTrip) {
  const TriangleMesh a = make_icosahedron(0.5, Rgb{10, 20, 30});
  std::stringstream s;
  write_obj(s, a);
  const TriangleMesh b = parse_obj(s);
  ASSERT_EQ(a.vertices.size(), b.vertices.size());
  for (std::size_t i = 0; i < a.vertices.size(); ++i) EXPECT_LE((a.vertices[i] - b.vertices[i]).norm(), 1e-12);
  EXPECT_EQ(a.triangles, b.triangles);
  EXPECT_EQ(a.colors, b.colors);
}
